#include "gzsl/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gzsl/error.hpp"

namespace gzsl {

namespace {

// Per-batch softmax state over a universe of K prototypes.
struct SoftmaxBatch {
  Matrix cos;     // B x K
  Matrix logp;    // B x K
  Matrix probs;   // B x K
  std::vector<double> norms;
};

// Unit-norm universe prototypes as rows (K x A).
Matrix unit_rows(const PrototypeSet& prototypes, std::span<const std::size_t> cols) {
  Matrix out(cols.size(), prototypes.dim());
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const auto v = prototypes.matrix().col(cols[k]);
    const double n = norm2(v);
    for (std::size_t a = 0; a < v.size(); ++a) out(k, a) = v[a] / n;
  }
  return out;
}

SoftmaxBatch softmax_batch(const Matrix& embeddings, const Matrix& unit_protos, double temperature) {
  if (embeddings.rows() == 0) {
    const std::size_t k = unit_protos.rows();
    return {Matrix(0, k), Matrix(0, k), Matrix(0, k), {}};
  }
  if (embeddings.cols() != unit_protos.cols()) {
    throw ShapeError("embedding dim " + std::to_string(embeddings.cols()) +
                     " does not match prototype dim " + std::to_string(unit_protos.cols()));
  }
  SoftmaxBatch s;
  const std::size_t b = embeddings.rows();
  const std::size_t k = unit_protos.rows();
  s.norms.resize(b);
  s.cos = matmul_nt(embeddings, unit_protos);
  s.logp = Matrix(b, k);
  s.probs = Matrix(b, k);
  for (std::size_t i = 0; i < b; ++i) {
    const double n = norm2(embeddings.row(i));
    if (n < kDegenerateNorm) throw DegenerateVectorError("zero-norm embedding at row " + std::to_string(i));
    s.norms[i] = n;
    auto c = s.cos.row(i);
    double mx = -INFINITY;
    for (std::size_t j = 0; j < k; ++j) {
      c[j] = std::clamp(c[j] / n, -1.0, 1.0);
      mx = std::max(mx, c[j] / temperature);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(c[j] / temperature - mx);
    const double lse = mx + std::log(sum);
    for (std::size_t j = 0; j < k; ++j) {
      s.logp(i, j) = c[j] / temperature - lse;
      s.probs(i, j) = std::exp(s.logp(i, j));
    }
  }
  return s;
}

// Entropy restricted to `subset` (universe positions) computed from log-probabilities.
double entropy_from_logp(std::span<const double> p, std::span<const double> logp,
                         std::span<const std::size_t> subset) {
  double h = 0.0;
  for (std::size_t c : subset) h -= p[c] * logp[c];
  return h / static_cast<double>(subset.size());
}

// Adds scale * dH/dz (H restricted to `subset`) into grad_z.
void add_entropy_logit_grad(std::span<const double> p, std::span<const double> logp,
                            std::span<const std::size_t> subset, double scale,
                            std::span<double> grad_z) {
  const double inv = 1.0 / static_cast<double>(subset.size());
  // dH/dp_c = -(log p_c + 1)/|subset| on the subset; dH/dz_k = p_k (g_k - sum_c g_c p_c).
  double weighted = 0.0;
  for (std::size_t c : subset) weighted += -(logp[c] + 1.0) * inv * p[c];
  for (std::size_t k = 0; k < p.size(); ++k) grad_z[k] -= scale * p[k] * weighted;
  for (std::size_t c : subset) grad_z[c] += scale * (-(logp[c] + 1.0) * inv) * p[c];
}

// Chain dL/dz through z = cos/T and the cosine into dL/de for every row.
Matrix logit_grad_to_embedding(const Matrix& grad_z, const SoftmaxBatch& s, const Matrix& embeddings,
                               const Matrix& unit_protos, double temperature) {
  if (grad_z.rows() == 0) return Matrix(0, embeddings.cols());
  Matrix grad = matmul(grad_z, unit_protos);  // sum_k g_k phi_k
  for (std::size_t i = 0; i < grad.rows(); ++i) {
    const double gs = dot(grad_z.row(i), s.cos.row(i));
    const double n = s.norms[i];
    auto g = grad.row(i);
    const auto e = embeddings.row(i);
    for (std::size_t a = 0; a < g.size(); ++a) g[a] = (g[a] - gs * e[a] / n) / (temperature * n);
  }
  return grad;
}

// Maps prototype column labels onto universe positions; throws if a label is outside `allowed`.
std::vector<std::size_t> to_positions(std::span<const std::size_t> labels,
                                      std::span<const std::size_t> universe_cols,
                                      const PrototypeSet& prototypes, bool want_seen,
                                      const char* what) {
  std::vector<std::size_t> pos_of(prototypes.num_classes(), SIZE_MAX);
  for (std::size_t k = 0; k < universe_cols.size(); ++k) pos_of[universe_cols[k]] = k;
  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t l = labels[i];
    if (l >= prototypes.num_classes() || prototypes.is_seen(l) != want_seen || pos_of[l] == SIZE_MAX) {
      throw ValidationError(std::string(what) + ": label column " + std::to_string(l) +
                            (want_seen ? " is not a seen class" : " is not an unseen class"));
    }
    out[i] = pos_of[l];
  }
  return out;
}

double mean_cross_entropy(const SoftmaxBatch& s, std::span<const std::size_t> pos, double weight,
                          Matrix& grad_z) {
  double total = 0.0;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    total -= s.logp(i, pos[i]);
    auto g = grad_z.row(i);
    const auto p = s.probs.row(i);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += weight * p[k];
    g[pos[i]] -= weight;
  }
  return pos.empty() ? 0.0 : total / static_cast<double>(pos.size());
}

std::vector<std::size_t> subset_positions(const PrototypeSet& prototypes,
                                          std::span<const std::size_t> universe_cols, bool seen) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < universe_cols.size(); ++k) {
    if (prototypes.is_seen(universe_cols[k]) == seen) out.push_back(k);
  }
  return out;
}

double mean_entropy(const SoftmaxBatch& s, std::span<const std::size_t> subset) {
  if (s.probs.rows() == 0 || subset.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < s.probs.rows(); ++i) {
    total += entropy_from_logp(s.probs.row(i), s.logp.row(i), subset);
  }
  return total / static_cast<double>(s.probs.rows());
}

void add_mean_entropy_grad(const SoftmaxBatch& s, std::span<const std::size_t> subset,
                           double scale, Matrix& grad_z) {
  if (subset.empty() || s.probs.rows() == 0) return;
  const double per_row = scale / static_cast<double>(s.probs.rows());
  for (std::size_t i = 0; i < s.probs.rows(); ++i) {
    add_entropy_logit_grad(s.probs.row(i), s.logp.row(i), subset, per_row, grad_z.row(i));
  }
}

}  // namespace

void ProbModelConfig::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ArgumentError("temperature must be a positive finite number");
  }
}

void RegConfig::validate() const {
  if (!(margin >= 0.0) || !(lambda_ent >= 0.0) || !std::isfinite(margin) || !std::isfinite(lambda_ent)) {
    throw ArgumentError("margin and lambda_ent must be finite and non-negative");
  }
}

std::vector<std::size_t> universe_columns(const PrototypeSet& prototypes, Universe universe) {
  if (universe == Universe::SeenOnly) return prototypes.seen_columns();
  std::vector<std::size_t> all(prototypes.num_classes());
  for (std::size_t c = 0; c < all.size(); ++c) all[c] = c;
  return all;
}

Matrix cosine_scores(const Matrix& embeddings, const PrototypeSet& prototypes, Universe universe) {
  const auto cols = universe_columns(prototypes, universe);
  return softmax_batch(embeddings, unit_rows(prototypes, cols), 1.0).cos;
}

Matrix class_probabilities(const Matrix& embeddings, const PrototypeSet& prototypes,
                           const ProbModelConfig& cfg) {
  cfg.validate();
  const auto cols = universe_columns(prototypes, cfg.universe);
  if (cols.empty()) throw ValidationError("class_probabilities: empty class universe");
  return softmax_batch(embeddings, unit_rows(prototypes, cols), cfg.temperature).probs;
}

BatchLossResult loss_seen(const Matrix& embeddings, std::span<const std::size_t> labels,
                          const PrototypeSet& prototypes, const ProbModelConfig& cfg) {
  cfg.validate();
  if (labels.size() != embeddings.rows()) throw ShapeError("loss_seen: one label per row required");
  if (labels.empty()) throw ArgumentError("loss_seen: empty batch");
  const auto cols = universe_columns(prototypes, cfg.universe);
  const auto pos = to_positions(labels, cols, prototypes, true, "loss_seen");
  const Matrix unit = unit_rows(prototypes, cols);
  const SoftmaxBatch s = softmax_batch(embeddings, unit, cfg.temperature);

  BatchLossResult r;
  Matrix grad_z(embeddings.rows(), cols.size());
  r.ce_real = mean_cross_entropy(s, pos, 1.0 / static_cast<double>(pos.size()), grad_z);
  r.loss = r.ce_real;
  r.grad_real = logit_grad_to_embedding(grad_z, s, embeddings, unit, cfg.temperature);
  r.probs_real = s.probs;
  if (cfg.universe == Universe::Joint) {
    r.h_s_real = mean_entropy(s, subset_positions(prototypes, cols, true));
    r.h_u_real = mean_entropy(s, subset_positions(prototypes, cols, false));
  } else {
    std::vector<std::size_t> all(cols.size());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    r.h_s_real = mean_entropy(s, all);
  }
  return r;
}

double directional_entropy(std::span<const double> probs, std::span<const std::size_t> subset) {
  if (subset.empty()) throw ArgumentError("directional_entropy: empty subset");
  double h = 0.0;
  for (std::size_t c : subset) {
    if (c >= probs.size()) throw ArgumentError("directional_entropy: subset index out of range");
    const double p = probs[c];
    if (p > 0.0) h -= p * std::log(p);
  }
  return h / static_cast<double>(subset.size());
}

MarginTerms margin_regularizers(double h_s_real, double h_s_gen, double h_u_real, double h_u_gen,
                                double margin) {
  return {std::max(0.0, margin + h_s_real - h_s_gen), std::max(0.0, margin + h_u_gen - h_u_real)};
}

BatchLossResult loss_final(const Matrix& real_embeddings, std::span<const std::size_t> real_labels,
                           const Matrix& gen_embeddings, std::span<const std::size_t> gen_labels,
                           const PrototypeSet& prototypes, const ProbModelConfig& prob_cfg,
                           const RegConfig& reg_cfg) {
  prob_cfg.validate();
  reg_cfg.validate();
  if (prob_cfg.universe != Universe::Joint) {
    throw ArgumentError("loss_final: requires the joint seen+unseen universe");
  }
  if (real_labels.size() != real_embeddings.rows() || gen_labels.size() != gen_embeddings.rows()) {
    throw ShapeError("loss_final: one label per row required");
  }
  if (real_labels.empty() && gen_labels.empty()) throw ArgumentError("loss_final: empty batch");

  const auto cols = universe_columns(prototypes, Universe::Joint);
  const auto real_pos = to_positions(real_labels, cols, prototypes, true, "loss_final (real)");
  const auto gen_pos = to_positions(gen_labels, cols, prototypes, false, "loss_final (generated)");
  const Matrix unit = unit_rows(prototypes, cols);
  const double t = prob_cfg.temperature;
  const SoftmaxBatch real = softmax_batch(real_embeddings, unit, t);
  const SoftmaxBatch gen = softmax_batch(gen_embeddings, unit, t);
  const auto seen_sub = subset_positions(prototypes, cols, true);
  const auto unseen_sub = subset_positions(prototypes, cols, false);

  BatchLossResult r;
  Matrix gz_real(real_pos.size(), cols.size());
  Matrix gz_gen(gen_pos.size(), cols.size());
  const double n_real = static_cast<double>(real_pos.size());
  const double n_gen = static_cast<double>(gen_pos.size());
  r.ce_real = mean_cross_entropy(real, real_pos, real_pos.empty() ? 0.0 : 1.0 / n_real, gz_real);
  r.ce_gen = mean_cross_entropy(gen, gen_pos, gen_pos.empty() ? 0.0 : 1.0 / n_gen, gz_gen);

  r.h_s_real = mean_entropy(real, seen_sub);
  r.h_u_real = mean_entropy(real, unseen_sub);
  r.h_s_gen = mean_entropy(gen, seen_sub);
  r.h_u_gen = mean_entropy(gen, unseen_sub);

  r.loss = r.ce_real + r.ce_gen;
  const bool contrast = !real_pos.empty() && !gen_pos.empty();
  if (contrast) {
    const auto terms = margin_regularizers(r.h_s_real, r.h_s_gen, r.h_u_real, r.h_u_gen, reg_cfg.margin);
    r.r_s = terms.r_s;
    r.r_u = terms.r_u;
    const double lam = reg_cfg.lambda_ent;
    if (reg_cfg.seen_direction) {
      r.loss += lam * r.r_s;
      if (r.r_s > 0.0 && lam > 0.0) {
        add_mean_entropy_grad(real, seen_sub, lam, gz_real);
        add_mean_entropy_grad(gen, seen_sub, -lam, gz_gen);
      }
    }
    if (reg_cfg.unseen_direction) {
      r.loss += lam * r.r_u;
      if (r.r_u > 0.0 && lam > 0.0) {
        add_mean_entropy_grad(gen, unseen_sub, lam, gz_gen);
        add_mean_entropy_grad(real, unseen_sub, -lam, gz_real);
      }
    }
  }

  r.grad_real = logit_grad_to_embedding(gz_real, real, real_embeddings, unit, t);
  r.grad_gen = logit_grad_to_embedding(gz_gen, gen, gen_embeddings, unit, t);
  r.probs_real = real.probs;
  r.probs_gen = gen.probs;
  return r;
}

}  // namespace gzsl
