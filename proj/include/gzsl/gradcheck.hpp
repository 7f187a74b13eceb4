#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace gzsl {

/// Tiny network + toy batch on which analytic gradients are compared with central differences.
struct GradcheckConfig {
  std::size_t input_dim = 8;
  std::size_t embed_dim = 5;
  std::size_t hidden1 = 16;
  std::size_t hidden2 = 8;
  std::size_t num_seen = 3;
  std::size_t num_unseen = 2;
  std::size_t batch = 6;
  double temperature = 0.05;
  double margin = 0.2;
  double lambda_ent = 0.1;
  double dropout = 0.0;
  double step = 1e-5;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
  /// Negative control: perturb one analytic gradient entry so the check must fail.
  bool corrupt = false;
};

struct GradcheckEntry {
  std::string objective;  // "L_s" or "L_f"
  std::string tensor;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double max_rel_error = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  nlohmann::json to_json() const;
};

/// |a - n| / max(|a|, |n|, kGradcheckFloor).
inline constexpr double kGradcheckFloor = 1e-7;
double relative_error(double analytic, double numeric);

/// Checks the seen-only cross-entropy and the full regularized joint loss with respect to every
/// mapper parameter. Throws ArgumentError when dropout is enabled: a stochastic graph cannot be
/// differenced.
GradcheckReport run_gradcheck(const GradcheckConfig& config);

}  // namespace gzsl
