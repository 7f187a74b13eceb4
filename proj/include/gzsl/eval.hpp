#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gzsl/data.hpp"
#include "gzsl/linalg.hpp"
#include "gzsl/model.hpp"
#include "gzsl/prototypes.hpp"

namespace gzsl {

/// argmax_c (score_c - gamma * [c is seen]); ties go to the lowest index. gamma may be +inf.
std::size_t calibrated_predict(std::span<const double> scores, const std::vector<bool>& seen_mask,
                               double gamma);

/// Mean over class_set of the within-class top-1 accuracy, in percent. Every class in class_set
/// must occur in labels.
double per_class_accuracy(std::span<const std::size_t> predictions,
                          std::span<const std::size_t> labels,
                          std::span<const std::size_t> class_set);

/// 2 s u / (s + u), or 0 when s + u = 0.
double harmonic_mean(double s, double u);

struct ClassAccuracy {
  std::int64_t class_id = 0;
  bool seen = true;
  std::size_t samples = 0;
  double accuracy = 0.0;
};

struct GzslReport {
  double u = 0.0;
  double s = 0.0;
  double h = 0.0;
  double gamma = 0.0;
  double linkage = 0.0;
  std::vector<ClassAccuracy> per_class;
  std::vector<std::size_t> predictions;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

/// Calibration scores of every sample against every prototype column: the joint-universe
/// probabilities p(c | x) = softmax_c(cos(f(x), phi_c) / T), with the training temperature.
/// Rows are split across up to eval_threads() workers; each row is computed independently.
Matrix score_matrix(const MapperParams& params, const Matrix& features,
                    const PrototypeSet& prototypes, double temperature);

/// Worker cap from the GZSL_THREADS environment variable (default: hardware concurrency).
std::size_t eval_threads();

/// Report for precomputed scores. labels are prototype columns.
GzslReport evaluate_scores(const Matrix& scores, std::span<const std::size_t> labels,
                           const PrototypeSet& prototypes, double gamma);

/// Scores the rows of the given split against all prototypes and reports u, s, H.
GzslReport evaluate(const MapperParams& params, const Dataset& dataset, Split split,
                    const PrototypeSet& prototypes, double temperature, double gamma);

struct SweepRow {
  double gamma = 0.0;
  double u = 0.0;
  double s = 0.0;
  double h = 0.0;
};

/// 41 evenly spaced values over [0, 1].
std::vector<double> default_gamma_grid();

std::vector<SweepRow> gamma_sweep(const Matrix& scores, std::span<const std::size_t> labels,
                                  const PrototypeSet& prototypes, std::span<const double> gammas);

/// gamma of the row with the highest H (first such row on ties).
double select_gamma(std::span<const SweepRow> sweep);

std::string sweep_csv(std::span<const SweepRow> sweep);

/// Prototype columns of the labels of the rows in `rows`.
std::vector<std::size_t> label_columns_of(const Dataset& dataset, std::span<const std::size_t> rows);

}  // namespace gzsl
