#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gzsl/linalg.hpp"

namespace gzsl {

/// Class prototypes stored as the columns of an A_dim x C matrix, with a seen/unseen partition.
class PrototypeSet {
 public:
  PrototypeSet() = default;
  /// Validates: one id per column, ids unique, no zero column, seen.size() == C.
  PrototypeSet(Matrix matrix, std::vector<std::int64_t> class_ids, std::vector<bool> seen,
               std::string domain = "att");

  const Matrix& matrix() const { return matrix_; }
  const std::vector<std::int64_t>& class_ids() const { return class_ids_; }
  const std::vector<bool>& seen_mask() const { return seen_; }
  const std::string& domain() const { return domain_; }

  std::size_t dim() const { return matrix_.rows(); }
  std::size_t num_classes() const { return matrix_.cols(); }
  bool is_seen(std::size_t column) const { return seen_[column]; }

  /// Column indices of S and U, ascending.
  std::vector<std::size_t> seen_columns() const;
  std::vector<std::size_t> unseen_columns() const;
  Matrix seen_matrix() const;
  Matrix unseen_matrix() const;

  /// Column holding the given class id; throws ValidationError if absent.
  std::size_t column_of(std::int64_t class_id) const;
  bool contains(std::int64_t class_id) const;

  /// Same class layout, different prototype values (e.g. another domain).
  PrototypeSet with_matrix(Matrix matrix, std::string domain) const;

 private:
  Matrix matrix_;
  std::vector<std::int64_t> class_ids_;
  std::vector<bool> seen_;
  std::string domain_;
};

/// Mean pairwise cosine similarity between the columns of two prototype matrices.
double average_linkage(const Matrix& set_s, const Matrix& set_u);
double average_linkage(const PrototypeSet& prototypes);
/// |S| x |U| table of pairwise cosine similarities.
Matrix pairwise_cosine(const Matrix& set_s, const Matrix& set_u);

/// Fits beta on the seen classes (see ridge_solve) and returns beta * phi_a_unseen, the
/// unseen prototypes regressed into domain B (B_dim x |U|).
Matrix swap_unseen(const Matrix& phi_a_seen, const Matrix& phi_b_seen, const Matrix& phi_a_unseen,
                   double lambda_beta);

/// Builds the domain-B prototype set used for swapped evaluation: seen columns from `domain_b`
/// (matched by class id), unseen columns regressed from `domain_a`.
PrototypeSet swap_prototypes(const PrototypeSet& domain_a, const PrototypeSet& domain_b,
                             double lambda_beta);

/// Prototype matrix file (GZM1 or CSV) plus "<file>.json" sidecar holding class_ids, seen,
/// unseen and domain.
PrototypeSet load_prototypes(const std::filesystem::path& path);
void save_prototypes(const std::filesystem::path& path, const PrototypeSet& prototypes);

}  // namespace gzsl
