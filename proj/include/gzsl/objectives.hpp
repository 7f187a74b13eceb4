#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gzsl/linalg.hpp"
#include "gzsl/prototypes.hpp"

namespace gzsl {

enum class Universe { SeenOnly, Joint };

struct ProbModelConfig {
  double temperature = 0.05;
  Universe universe = Universe::Joint;
  void validate() const;
};

struct RegConfig {
  double margin = 0.2;
  double lambda_ent = 0.1;
  /// Directions that contribute to the loss. R_s and R_u are always reported.
  bool seen_direction = true;
  bool unseen_direction = true;
  void validate() const;
};

struct BatchLossResult {
  double loss = 0.0;
  /// Cross-entropy parts (mean over the real and generated batches).
  double ce_real = 0.0;
  double ce_gen = 0.0;
  /// Rows over the universe used for the loss, in prototype column order.
  Matrix probs_real;
  Matrix probs_gen;
  double h_s_real = 0.0;
  double h_s_gen = 0.0;
  double h_u_real = 0.0;
  double h_u_gen = 0.0;
  double r_s = 0.0;
  double r_u = 0.0;
  Matrix grad_real;
  Matrix grad_gen;
};

/// Column indices of the prototype set that form the softmax universe.
std::vector<std::size_t> universe_columns(const PrototypeSet& prototypes, Universe universe);

/// Cosine similarity of every embedding row against every universe prototype (B x K).
Matrix cosine_scores(const Matrix& embeddings, const PrototypeSet& prototypes, Universe universe);

/// Temperature-scaled cosine softmax over the universe (B x K, row-stochastic).
Matrix class_probabilities(const Matrix& embeddings, const PrototypeSet& prototypes,
                           const ProbModelConfig& cfg);

/// Mean cross-entropy of the labels (prototype column indices, all seen) plus its gradient.
BatchLossResult loss_seen(const Matrix& embeddings, std::span<const std::size_t> labels,
                          const PrototypeSet& prototypes, const ProbModelConfig& cfg);

/// H = -(1/|subset|) * sum_{c in subset} p_c log p_c with 0 log 0 = 0.
double directional_entropy(std::span<const double> probs, std::span<const std::size_t> subset);

struct MarginTerms {
  double r_s = 0.0;
  double r_u = 0.0;
};

/// R_s = [m + H_s(real) - H_s(gen)]_+ and R_u = [m + H_u(gen) - H_u(real)]_+.
MarginTerms margin_regularizers(double h_s_real, double h_s_gen, double h_u_real, double h_u_gen,
                                double margin);

/// Joint cross-entropy over real seen and generated unseen samples plus
/// lambda_ent * (R_s + R_u), with gradients for both embedding batches. When either batch is
/// empty the entropy margins have nothing to contrast and are left at zero.
BatchLossResult loss_final(const Matrix& real_embeddings, std::span<const std::size_t> real_labels,
                           const Matrix& gen_embeddings, std::span<const std::size_t> gen_labels,
                           const PrototypeSet& prototypes, const ProbModelConfig& prob_cfg,
                           const RegConfig& reg_cfg);

}  // namespace gzsl
