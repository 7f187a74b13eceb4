#include "gzsl/data.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gzsl/error.hpp"
#include "gzsl/io.hpp"

namespace gzsl {

Dataset::Dataset(Matrix features, std::vector<std::int64_t> labels, std::vector<Split> split,
                 PrototypeSet prototypes)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      split_(std::move(split)),
      prototypes_(std::move(prototypes)) {
  if (features_.rows() != labels_.size() || split_.size() != labels_.size()) {
    throw ShapeError("Dataset: " + std::to_string(features_.rows()) + " feature rows, " +
                     std::to_string(labels_.size()) + " labels, " + std::to_string(split_.size()) +
                     " split tags");
  }
  label_columns_.resize(labels_.size());
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!prototypes_.contains(labels_[i])) {
      throw ValidationError("Dataset: unknown label " + std::to_string(labels_[i]) +
                            " (no prototype) at row " + std::to_string(i));
    }
    label_columns_[i] = prototypes_.column_of(labels_[i]);
    const auto s = static_cast<std::int64_t>(split_[i]);
    if (s < 0 || s > 2) throw ValidationError("Dataset: bad split tag at row " + std::to_string(i));
    if (split_[i] == Split::Train && !prototypes_.is_seen(label_columns_[i])) {
      throw ValidationError("Dataset: training row " + std::to_string(i) + " has unseen label " +
                            std::to_string(labels_[i]));
    }
  }
}

std::vector<std::size_t> Dataset::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split_.size(); ++i) {
    if (split_[i] == s) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Dataset::indices(Split s, bool seen) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split_.size(); ++i) {
    if (split_[i] == s && prototypes_.is_seen(label_columns_[i]) == seen) out.push_back(i);
  }
  return out;
}

GeneratedSet make_generated_set(Matrix features, std::vector<std::int64_t> labels,
                                const PrototypeSet& prototypes) {
  if (features.rows() != labels.size()) throw ShapeError("GeneratedSet: one label per row required");
  GeneratedSet g;
  g.label_columns.resize(labels.size());
  std::vector<std::size_t> counts(prototypes.num_classes(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t c = prototypes.column_of(labels[i]);
    if (prototypes.is_seen(c)) {
      throw ValidationError("GeneratedSet: label " + std::to_string(labels[i]) + " is a seen class");
    }
    g.label_columns[i] = c;
    ++counts[c];
  }
  if (!labels.empty()) {
    for (std::size_t c : prototypes.unseen_columns()) {
      if (counts[c] == 0) {
        throw ValidationError("GeneratedSet: no samples for unseen class " +
                              std::to_string(prototypes.class_ids()[c]));
      }
    }
  }
  g.features = std::move(features);
  g.labels = std::move(labels);
  return g;
}

void SynthConfig::validate() const {
  if (num_seen < 1 || num_unseen < 1 || feature_dim < 1 || proto_dim < 1 || samples_per_class < 1) {
    throw ArgumentError("SynthConfig: all counts must be >= 1");
  }
  if (!(noise_sigma > 0.0) || !std::isfinite(noise_sigma)) {
    throw ArgumentError("SynthConfig: noise_sigma must be > 0");
  }
  if (!(rho >= 0.0 && rho < 1.0)) throw ArgumentError("SynthConfig: rho must lie in [0, 1)");
}

void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = {{"num_seen", c.num_seen},
       {"num_unseen", c.num_unseen},
       {"feature_dim", c.feature_dim},
       {"proto_dim", c.proto_dim},
       {"samples_per_class", c.samples_per_class},
       {"noise_sigma", c.noise_sigma},
       {"rho", c.rho},
       {"seed", c.seed},
       {"generated_per_class", c.generated_per_class}};
}

void from_json(const nlohmann::json& j, SynthConfig& c) {
  static const char* known[] = {"num_seen", "num_unseen", "feature_dim", "proto_dim",
                                "samples_per_class", "noise_sigma", "rho", "seed",
                                "generated_per_class"};
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
        std::end(known)) {
      throw ValidationError("SynthConfig: unknown field '" + key + "'");
    }
  }
  SynthConfig d;
  c.num_seen = j.value("num_seen", d.num_seen);
  c.num_unseen = j.value("num_unseen", d.num_unseen);
  c.feature_dim = j.value("feature_dim", d.feature_dim);
  c.proto_dim = j.value("proto_dim", d.proto_dim);
  c.samples_per_class = j.value("samples_per_class", d.samples_per_class);
  c.noise_sigma = j.value("noise_sigma", d.noise_sigma);
  c.rho = j.value("rho", d.rho);
  c.seed = j.value("seed", d.seed);
  c.generated_per_class = j.value("generated_per_class", d.generated_per_class);
}

SynthData synth_generate(const SynthConfig& cfg) {
  Rng rng(cfg.seed);
  return synth_generate(cfg, rng);
}

SynthData synth_generate(const SynthConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t a_dim = cfg.proto_dim;
  const std::size_t d_dim = cfg.feature_dim;
  const std::size_t n_classes = cfg.num_seen + cfg.num_unseen;

  Rng proto_rng = rng.fork(1);
  Rng map_rng = rng.fork(2);
  Rng sample_rng = rng.fork(3);
  Rng gen_rng = rng.fork(4);

  std::vector<double> shared(a_dim);
  for (double& v : shared) v = proto_rng.normal();
  const double w_shared = std::sqrt(cfg.rho);
  const double w_own = std::sqrt(1.0 - cfg.rho);
  Matrix phi(a_dim, n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t a = 0; a < a_dim; ++a) phi(a, c) = w_shared * shared[a] + w_own * proto_rng.normal();
  }
  std::vector<std::int64_t> ids(n_classes);
  std::vector<bool> seen(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    ids[c] = static_cast<std::int64_t>(c);
    seen[c] = c < cfg.num_seen;
  }
  PrototypeSet prototypes(phi, ids, seen, "synth");

  Matrix mapping(d_dim, a_dim);
  const double map_scale = 1.0 / std::sqrt(static_cast<double>(a_dim));
  for (double& v : mapping.values()) v = map_scale * map_rng.normal();
  const Matrix centers = matmul(mapping, phi);  // D x C

  auto draw = [&](std::size_t c, double sigma, Rng& r, std::span<double> out) {
    for (std::size_t d = 0; d < d_dim; ++d) out[d] = centers(d, c) + sigma * r.normal();
  };

  const std::size_t n = cfg.samples_per_class;
  const auto n_val = static_cast<std::size_t>(std::lround(kSeenValFraction * static_cast<double>(n)));
  const auto n_test = static_cast<std::size_t>(std::lround(kSeenTestFraction * static_cast<double>(n)));
  const std::size_t n_train = n - std::min(n, n_val + n_test);

  Matrix features(n_classes * n, d_dim);
  std::vector<std::int64_t> labels;
  std::vector<Split> split;
  labels.reserve(n_classes * n);
  split.reserve(n_classes * n);
  std::size_t row = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t k = 0; k < n; ++k, ++row) {
      draw(c, cfg.noise_sigma, sample_rng, features.row(row));
      labels.push_back(ids[c]);
      if (seen[c]) {
        split.push_back(k < n_train ? Split::Train : (k < n_train + n_val ? Split::Val : Split::Test));
      } else {
        split.push_back(k < n / 2 ? Split::Val : Split::Test);
      }
    }
  }

  const std::size_t per_gen = cfg.generated_per_class ? cfg.generated_per_class : std::max<std::size_t>(n_train, 1);
  Matrix gen_features(cfg.num_unseen * per_gen, d_dim);
  std::vector<std::int64_t> gen_labels;
  gen_labels.reserve(cfg.num_unseen * per_gen);
  row = 0;
  for (std::size_t c = cfg.num_seen; c < n_classes; ++c) {
    for (std::size_t k = 0; k < per_gen; ++k, ++row) {
      draw(c, kGeneratedNoiseInflation * cfg.noise_sigma, gen_rng, gen_features.row(row));
      gen_labels.push_back(ids[c]);
    }
  }

  SynthData out;
  out.dataset = Dataset(std::move(features), std::move(labels), std::move(split), prototypes);
  out.generated = make_generated_set(std::move(gen_features), std::move(gen_labels), prototypes);
  out.prototypes = std::move(prototypes);
  return out;
}

std::vector<std::vector<std::size_t>> batch_iter(std::size_t n, std::size_t batch_size,
                                                 const Rng& rng, std::size_t epoch) {
  if (batch_size < 1) throw ArgumentError("batch_iter: batch_size must be >= 1");
  if (n == 0) throw ArgumentError("batch_iter: empty dataset");
  Rng epoch_rng = rng.fork(epoch);
  const auto order = epoch_rng.permutation(n);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

Dataset load_dataset(const std::filesystem::path& features_path,
                     const std::filesystem::path& labels_path,
                     const std::filesystem::path& prototypes_path,
                     const std::filesystem::path& split_path) {
  PrototypeSet prototypes = load_prototypes(prototypes_path);
  Matrix features = io::load_matrix(features_path);
  auto labels = io::load_int_lines(labels_path);
  const auto raw_split = io::load_int_lines(split_path);
  std::vector<Split> split;
  split.reserve(raw_split.size());
  for (auto s : raw_split) {
    if (s < 0 || s > 2) throw ValidationError(split_path.string() + ": split tags must be 0, 1 or 2");
    split.push_back(static_cast<Split>(s));
  }
  return Dataset(std::move(features), std::move(labels), std::move(split), std::move(prototypes));
}

Dataset load_dataset(const DataLayout& layout) {
  return load_dataset(layout.features(), layout.labels(), layout.prototypes(), layout.split());
}

void save_dataset(const DataLayout& layout, const Dataset& dataset) {
  io::save_matrix(layout.features(), dataset.features());
  io::save_int_lines(layout.labels(), dataset.labels());
  std::vector<std::int64_t> split;
  for (Split s : dataset.split()) split.push_back(static_cast<std::int64_t>(s));
  io::save_int_lines(layout.split(), split);
  save_prototypes(layout.prototypes(), dataset.prototypes());
}

GeneratedSet load_generated(const DataLayout& layout, const PrototypeSet& prototypes) {
  return make_generated_set(io::load_matrix(layout.generated_features()),
                            io::load_int_lines(layout.generated_labels()), prototypes);
}

void save_generated(const DataLayout& layout, const GeneratedSet& generated) {
  io::save_matrix(layout.generated_features(), generated.features);
  io::save_int_lines(layout.generated_labels(), generated.labels);
}

}  // namespace gzsl
