#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace gzsl {

/// Dense row-major matrix of doubles. Constructors reject non-finite entries.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  /// Builds a rows x 1 column vector.
  static Matrix column(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::vector<double> col(std::size_t c) const;

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  Matrix transpose() const;
  bool all_finite() const;
  void fill(double v);

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);

/// a * b. Fixed summation order, so results are reproducible bit for bit.
Matrix matmul(const Matrix& a, const Matrix& b);
/// transpose(a) * b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * transpose(b).
Matrix matmul_nt(const Matrix& a, const Matrix& b);

/// Columns of m in the given order.
Matrix select_columns(const Matrix& m, std::span<const std::size_t> cols);
Matrix select_rows(const Matrix& m, std::span<const std::size_t> rows);
Matrix hstack(const Matrix& a, const Matrix& b);

double dot(std::span<const double> u, std::span<const double> v);
double norm2(std::span<const double> v);
double frobenius_norm(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);

inline constexpr double kDegenerateNorm = 1e-12;

/// <u,v> / (|u| |v|). Throws DegenerateVectorError when either norm is below kDegenerateNorm.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

/// Solves the symmetric positive definite system g * x = rhs by Cholesky; rhs may hold several
/// columns. Throws SingularError when a pivot drops below 1e-12 (relative to the diagonal scale).
Matrix cholesky_solve(const Matrix& g, const Matrix& rhs);

/// Tikhonov-regularized least squares mapping domain A prototypes onto domain B:
///   beta = phi_b phi_a^T (phi_a phi_a^T + lambda I)^-1
/// phi_a is A_dim x n, phi_b is B_dim x n (prototypes as columns). Returns B_dim x A_dim.
Matrix ridge_solve(const Matrix& phi_a, const Matrix& phi_b, double lambda_beta);

}  // namespace gzsl
