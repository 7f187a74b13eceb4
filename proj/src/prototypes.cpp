#include "gzsl/prototypes.hpp"

#include <algorithm>
#include <set>

#include "gzsl/error.hpp"
#include "gzsl/io.hpp"

namespace gzsl {

PrototypeSet::PrototypeSet(Matrix matrix, std::vector<std::int64_t> class_ids,
                           std::vector<bool> seen, std::string domain)
    : matrix_(std::move(matrix)),
      class_ids_(std::move(class_ids)),
      seen_(std::move(seen)),
      domain_(std::move(domain)) {
  if (class_ids_.size() != matrix_.cols() || seen_.size() != matrix_.cols()) {
    throw ShapeError("PrototypeSet: need one class id and one seen flag per column");
  }
  if (std::set<std::int64_t>(class_ids_.begin(), class_ids_.end()).size() != class_ids_.size()) {
    throw ValidationError("PrototypeSet: duplicate class id");
  }
  for (std::size_t c = 0; c < matrix_.cols(); ++c) {
    if (norm2(matrix_.col(c)) < kDegenerateNorm) {
      throw DegenerateVectorError("PrototypeSet: zero prototype for class " +
                                  std::to_string(class_ids_[c]));
    }
  }
}

std::vector<std::size_t> PrototypeSet::seen_columns() const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < seen_.size(); ++c) {
    if (seen_[c]) out.push_back(c);
  }
  return out;
}

std::vector<std::size_t> PrototypeSet::unseen_columns() const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < seen_.size(); ++c) {
    if (!seen_[c]) out.push_back(c);
  }
  return out;
}

Matrix PrototypeSet::seen_matrix() const { return select_columns(matrix_, seen_columns()); }
Matrix PrototypeSet::unseen_matrix() const { return select_columns(matrix_, unseen_columns()); }

std::size_t PrototypeSet::column_of(std::int64_t class_id) const {
  auto it = std::find(class_ids_.begin(), class_ids_.end(), class_id);
  if (it == class_ids_.end()) {
    throw ValidationError("no prototype for class " + std::to_string(class_id));
  }
  return static_cast<std::size_t>(it - class_ids_.begin());
}

bool PrototypeSet::contains(std::int64_t class_id) const {
  return std::find(class_ids_.begin(), class_ids_.end(), class_id) != class_ids_.end();
}

PrototypeSet PrototypeSet::with_matrix(Matrix matrix, std::string domain) const {
  if (matrix.cols() != num_classes()) throw ShapeError("with_matrix: class count differs");
  return PrototypeSet(std::move(matrix), class_ids_, seen_, std::move(domain));
}

Matrix pairwise_cosine(const Matrix& set_s, const Matrix& set_u) {
  if (set_s.rows() != set_u.rows()) throw ShapeError("pairwise_cosine: prototype dims differ");
  Matrix table(set_s.cols(), set_u.cols());
  for (std::size_t i = 0; i < set_s.cols(); ++i) {
    const auto a = set_s.col(i);
    for (std::size_t j = 0; j < set_u.cols(); ++j) table(i, j) = cosine_similarity(a, set_u.col(j));
  }
  return table;
}

double average_linkage(const Matrix& set_s, const Matrix& set_u) {
  if (set_s.cols() == 0 || set_u.cols() == 0) {
    throw ArgumentError("average_linkage: both prototype sets must be non-empty");
  }
  const Matrix table = pairwise_cosine(set_s, set_u);
  double sum = 0.0;
  for (double v : table.values()) sum += v;
  return sum / static_cast<double>(table.size());
}

double average_linkage(const PrototypeSet& prototypes) {
  return average_linkage(prototypes.seen_matrix(), prototypes.unseen_matrix());
}

Matrix swap_unseen(const Matrix& phi_a_seen, const Matrix& phi_b_seen, const Matrix& phi_a_unseen,
                   double lambda_beta) {
  if (phi_a_unseen.rows() != phi_a_seen.rows()) {
    throw ShapeError("swap_unseen: unseen domain-A prototypes have the wrong dimension");
  }
  const Matrix beta = ridge_solve(phi_a_seen, phi_b_seen, lambda_beta);
  return matmul(beta, phi_a_unseen);
}

PrototypeSet swap_prototypes(const PrototypeSet& domain_a, const PrototypeSet& domain_b,
                             double lambda_beta) {
  const auto seen = domain_a.seen_columns();
  const auto unseen = domain_a.unseen_columns();
  std::vector<std::size_t> b_cols;
  b_cols.reserve(seen.size());
  for (std::size_t c : seen) b_cols.push_back(domain_b.column_of(domain_a.class_ids()[c]));

  const Matrix phi_b_seen = select_columns(domain_b.matrix(), b_cols);
  const Matrix regressed = swap_unseen(domain_a.seen_matrix(), phi_b_seen,
                                       domain_a.unseen_matrix(), lambda_beta);

  Matrix out(domain_b.dim(), domain_a.num_classes());
  for (std::size_t k = 0; k < seen.size(); ++k) {
    for (std::size_t r = 0; r < out.rows(); ++r) out(r, seen[k]) = phi_b_seen(r, k);
  }
  for (std::size_t k = 0; k < unseen.size(); ++k) {
    for (std::size_t r = 0; r < out.rows(); ++r) out(r, unseen[k]) = regressed(r, k);
  }
  return domain_a.with_matrix(std::move(out), domain_b.domain());
}

PrototypeSet load_prototypes(const std::filesystem::path& path) {
  Matrix m = io::load_matrix(path);
  std::filesystem::path sidecar = path;
  sidecar += ".json";
  if (!std::filesystem::exists(sidecar)) {
    // No sidecar: classes 0..C-1, all seen.
    std::vector<std::int64_t> ids(m.cols());
    for (std::size_t c = 0; c < ids.size(); ++c) ids[c] = static_cast<std::int64_t>(c);
    std::vector<bool> seen(m.cols(), true);
    return PrototypeSet(std::move(m), std::move(ids), std::move(seen), "att");
  }
  const auto meta = io::load_json(sidecar);
  try {
    auto ids = meta.at("class_ids").get<std::vector<std::int64_t>>();
    const auto seen_ids = meta.value("seen", std::vector<std::int64_t>{});
    const auto unseen_ids = meta.value("unseen", std::vector<std::int64_t>{});
    std::set<std::int64_t> s(seen_ids.begin(), seen_ids.end());
    std::set<std::int64_t> u(unseen_ids.begin(), unseen_ids.end());
    std::vector<bool> seen(ids.size());
    for (std::size_t c = 0; c < ids.size(); ++c) {
      const bool in_s = s.count(ids[c]) > 0;
      const bool in_u = u.count(ids[c]) > 0;
      if (in_s == in_u) {
        throw ValidationError(sidecar.string() + ": class " + std::to_string(ids[c]) +
                              " must be in exactly one of seen/unseen");
      }
      seen[c] = in_s;
    }
    if (s.size() + u.size() != ids.size()) {
      throw ValidationError(sidecar.string() + ": seen/unseen lists name unknown classes");
    }
    return PrototypeSet(std::move(m), std::move(ids), std::move(seen),
                        meta.value("domain", std::string("att")));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(sidecar.string() + ": " + e.what());
  }
}

void save_prototypes(const std::filesystem::path& path, const PrototypeSet& prototypes) {
  io::save_matrix(path, prototypes.matrix());
  std::vector<std::int64_t> seen;
  std::vector<std::int64_t> unseen;
  for (std::size_t c = 0; c < prototypes.num_classes(); ++c) {
    (prototypes.is_seen(c) ? seen : unseen).push_back(prototypes.class_ids()[c]);
  }
  nlohmann::json meta = {{"class_ids", prototypes.class_ids()},
                         {"domain", prototypes.domain()},
                         {"seen", seen},
                         {"unseen", unseen}};
  std::filesystem::path sidecar = path;
  sidecar += ".json";
  io::save_json(sidecar, meta);
}

}  // namespace gzsl
