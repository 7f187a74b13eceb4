#include "gzsl/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gzsl/error.hpp"

namespace gzsl {

namespace {

std::string shape_str(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a) + " vs " +
                     shape_str(b));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  if (!std::isfinite(fill)) throw ArgumentError("Matrix: non-finite fill value");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("Matrix: data length " + std::to_string(data_.size()) + " does not match " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (!all_finite()) throw ArgumentError("Matrix: non-finite entry");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("Matrix::from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix Matrix::column(std::span<const double> values) {
  return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

std::vector<double> Matrix::col(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape_str(a) + " times " + shape_str(b));
  }
  Matrix c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* ci = c.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* bk = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: transpose of " + shape_str(a) + " times " + shape_str(b));
  }
  Matrix c(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* bi = b.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      double* ck = c.row(k).data();
      for (std::size_t j = 0; j < n; ++j) ck[j] += aik * bi[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: " + shape_str(a) + " times transpose of " + shape_str(b));
  }
  return matmul(a, b.transpose());
}

Matrix select_columns(const Matrix& m, std::span<const std::size_t> cols) {
  Matrix out(m.rows(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] >= m.cols()) throw ShapeError("select_columns: index out of range");
    for (std::size_t r = 0; r < m.rows(); ++r) out(r, j) = m(r, cols[j]);
  }
  return out;
}

Matrix select_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= m.rows()) throw ShapeError("select_rows: index out of range");
    std::copy_n(m.row(rows[i]).begin(), m.cols(), out.row(i).begin());
  }
  return out;
}

Matrix hstack(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("hstack: row counts differ");
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    std::copy_n(a.row(r).begin(), a.cols(), out.row(r).begin());
    std::copy_n(b.row(r).begin(), b.cols(), out.row(r).begin() + a.cols());
  }
  return out;
}

double dot(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ShapeError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double frobenius_norm(const Matrix& m) { return norm2(m.values()); }

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
  }
  return worst;
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ShapeError("cosine_similarity: length mismatch");
  const double nu = norm2(u);
  const double nv = norm2(v);
  if (nu < kDegenerateNorm || nv < kDegenerateNorm) {
    throw DegenerateVectorError("cosine_similarity: zero-norm vector");
  }
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

Matrix cholesky_solve(const Matrix& g, const Matrix& rhs) {
  const std::size_t n = g.rows();
  if (g.cols() != n) throw ShapeError("cholesky_solve: matrix is not square");
  if (rhs.rows() != n) throw ShapeError("cholesky_solve: rhs has wrong row count");

  double scale = 1.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(g(i, i)));
  const double tol = 1e-12 * scale;

  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = g(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > tol)) {
      throw SingularError("cholesky_solve: pivot " + std::to_string(d) + " at row " +
                          std::to_string(j) + " (matrix singular or not positive definite)");
    }
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = g(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }

  Matrix x = rhs;
  for (std::size_t c = 0; c < rhs.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {  // L y = b
      double s = x(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
      x(i, c) = s / l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {  // L^T x = y
      double s = x(i, c);
      for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x(k, c);
      x(i, c) = s / l(i, i);
    }
  }
  return x;
}

Matrix ridge_solve(const Matrix& phi_a, const Matrix& phi_b, double lambda_beta) {
  if (!(lambda_beta >= 0.0) || !std::isfinite(lambda_beta)) {
    throw ArgumentError("ridge_solve: lambda_beta must be a finite non-negative number");
  }
  if (phi_a.cols() != phi_b.cols()) {
    throw ShapeError("ridge_solve: phi_a and phi_b must have one column per shared class (" +
                     shape_str(phi_a) + " vs " + shape_str(phi_b) + ")");
  }
  Matrix gram = matmul_nt(phi_a, phi_a);
  for (std::size_t i = 0; i < gram.rows(); ++i) gram(i, i) += lambda_beta;
  const Matrix cross = matmul_nt(phi_b, phi_a);  // B_dim x A_dim
  // beta * gram = cross  <=>  gram * beta^T = cross^T (gram is symmetric)
  return cholesky_solve(gram, cross.transpose()).transpose();
}

}  // namespace gzsl
