#include "gzsl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <iomanip>
#include <thread>

#include "gzsl/error.hpp"
#include "gzsl/objectives.hpp"

namespace gzsl {

std::size_t calibrated_predict(std::span<const double> scores, const std::vector<bool>& seen_mask,
                               double gamma) {
  if (scores.empty()) throw ArgumentError("calibrated_predict: empty score row");
  if (seen_mask.size() != scores.size()) throw ShapeError("calibrated_predict: mask length differs");
  if (!(gamma >= 0.0)) throw ArgumentError("calibrated_predict: gamma must be >= 0");
  std::size_t best = 0;
  double best_value = -INFINITY;
  bool found = false;
  for (std::size_t c = 0; c < scores.size(); ++c) {
    if (!std::isfinite(scores[c])) throw ArgumentError("calibrated_predict: non-finite score");
    const double v = seen_mask[c] ? scores[c] - gamma : scores[c];
    if (!found || v > best_value) {
      best = c;
      best_value = v;
      found = true;
    }
  }
  return best;
}

double per_class_accuracy(std::span<const std::size_t> predictions,
                          std::span<const std::size_t> labels,
                          std::span<const std::size_t> class_set) {
  if (predictions.size() != labels.size()) {
    throw ShapeError("per_class_accuracy: predictions and labels differ in length");
  }
  if (class_set.empty()) throw ArgumentError("per_class_accuracy: empty class set");
  double total = 0.0;
  for (std::size_t c : class_set) {
    std::size_t n = 0;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != c) continue;
      ++n;
      if (predictions[i] == c) ++hit;
    }
    if (n == 0) {
      throw ValidationError("per_class_accuracy: class " + std::to_string(c) + " has no samples");
    }
    total += static_cast<double>(hit) / static_cast<double>(n);
  }
  return 100.0 * total / static_cast<double>(class_set.size());
}

double harmonic_mean(double s, double u) {
  if (!(s >= 0.0) || !(u >= 0.0)) throw ArgumentError("harmonic_mean: inputs must be >= 0");
  if (s + u == 0.0) return 0.0;
  return 2.0 * s * u / (s + u);
}

nlohmann::json GzslReport::to_json() const {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : per_class) {
    classes.push_back(
        {{"class_id", c.class_id}, {"seen", c.seen}, {"samples", c.samples}, {"accuracy", c.accuracy}});
  }
  return {{"u", u},         {"s", s},           {"H", h},         {"gamma", gamma},
          {"linkage", linkage}, {"per_class", classes}, {"config", config}, {"seed", seed}};
}

std::size_t eval_threads() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GZSL_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) n = std::min(n, static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ArgumentError(std::string("GZSL_THREADS: not a number: ") + env);
    }
  }
  return n;
}

Matrix score_matrix(const MapperParams& params, const Matrix& features,
                    const PrototypeSet& prototypes, double temperature) {
  ProbModelConfig{temperature, Universe::Joint}.validate();
  const std::size_t n = features.rows();
  Matrix scores(n, prototypes.num_classes());
  if (n == 0) return scores;
  const std::size_t workers = std::min(eval_threads(), std::max<std::size_t>(1, n / 256));
  auto run = [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> rows(end - begin);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = begin + i;
    const Matrix probs = class_probabilities(embed(params, select_rows(features, rows)),
                                             prototypes, {temperature, Universe::Joint});
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::copy_n(probs.row(i).begin(), probs.cols(), scores.row(begin + i).begin());
    }
  };
  if (workers <= 1) {
    run(0, n);
    return scores;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b < e) pool.emplace_back(run, b, e);
  }
  for (auto& t : pool) t.join();
  return scores;
}

GzslReport evaluate_scores(const Matrix& scores, std::span<const std::size_t> labels,
                           const PrototypeSet& prototypes, double gamma) {
  if (scores.rows() != labels.size()) throw ShapeError("evaluate: one label per score row required");
  if (scores.cols() != prototypes.num_classes()) throw ShapeError("evaluate: score width differs from class count");

  std::vector<bool> present(prototypes.num_classes(), false);
  for (std::size_t l : labels) {
    if (l >= present.size()) throw ValidationError("evaluate: label without prototype");
    present[l] = true;
  }
  std::vector<std::size_t> seen_classes;
  std::vector<std::size_t> unseen_classes;
  for (std::size_t c = 0; c < present.size(); ++c) {
    if (present[c]) (prototypes.is_seen(c) ? seen_classes : unseen_classes).push_back(c);
  }
  if (seen_classes.empty() || unseen_classes.empty()) {
    throw ValidationError("evaluate: split must contain both seen and unseen samples");
  }

  GzslReport r;
  r.gamma = gamma;
  r.predictions.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    r.predictions[i] = calibrated_predict(scores.row(i), prototypes.seen_mask(), gamma);
  }
  r.s = per_class_accuracy(r.predictions, labels, seen_classes);
  r.u = per_class_accuracy(r.predictions, labels, unseen_classes);
  r.h = harmonic_mean(r.s, r.u);
  for (std::size_t c = 0; c < present.size(); ++c) {
    if (!present[c]) continue;
    const std::size_t one[] = {c};
    ClassAccuracy ca;
    ca.class_id = prototypes.class_ids()[c];
    ca.seen = prototypes.is_seen(c);
    ca.samples = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), c));
    ca.accuracy = per_class_accuracy(r.predictions, labels, one);
    r.per_class.push_back(ca);
  }
  if (prototypes.num_classes() > prototypes.seen_columns().size() && !prototypes.seen_columns().empty()) {
    r.linkage = average_linkage(prototypes);
  }
  return r;
}

std::vector<std::size_t> label_columns_of(const Dataset& dataset, std::span<const std::size_t> rows) {
  std::vector<std::size_t> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = dataset.label_columns()[rows[i]];
  return out;
}

GzslReport evaluate(const MapperParams& params, const Dataset& dataset, Split split,
                    const PrototypeSet& prototypes, double temperature, double gamma) {
  const auto rows = dataset.indices(split);
  std::vector<std::size_t> labels(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    labels[i] = prototypes.column_of(dataset.labels()[rows[i]]);
  }
  const Matrix scores = score_matrix(params, select_rows(dataset.features(), rows), prototypes, temperature);
  return evaluate_scores(scores, labels, prototypes, gamma);
}

std::vector<double> default_gamma_grid() {
  std::vector<double> grid(41);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = static_cast<double>(i) / 40.0;
  return grid;
}

std::vector<SweepRow> gamma_sweep(const Matrix& scores, std::span<const std::size_t> labels,
                                  const PrototypeSet& prototypes, std::span<const double> gammas) {
  std::vector<SweepRow> rows;
  rows.reserve(gammas.size());
  for (double g : gammas) {
    const GzslReport r = evaluate_scores(scores, labels, prototypes, g);
    rows.push_back({g, r.u, r.s, r.h});
  }
  return rows;
}

double select_gamma(std::span<const SweepRow> sweep) {
  if (sweep.empty()) throw ArgumentError("select_gamma: empty sweep");
  const SweepRow* best = &sweep.front();
  for (const auto& row : sweep) {
    if (row.h > best->h) best = &row;
  }
  return best->gamma;
}

std::string sweep_csv(std::span<const SweepRow> sweep) {
  std::ostringstream os;
  os << std::setprecision(17) << "gamma,u,s,H\n";
  for (const auto& r : sweep) os << r.gamma << ',' << r.u << ',' << r.s << ',' << r.h << '\n';
  return os.str();
}

}  // namespace gzsl
