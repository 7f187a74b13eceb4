#include "gzsl/model.hpp"

#include <cmath>
#include <string>

#include "gzsl/error.hpp"

namespace gzsl {

namespace {

Matrix add_bias(Matrix m, const Matrix& bias) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] += bias(0, c);
  }
  return m;
}

Matrix relu(Matrix m) {
  for (double& v : m.values()) v = v > 0.0 ? v : 0.0;
  return m;
}

Matrix column_sums(const Matrix& m) {
  Matrix s(1, m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) s(0, c) += m(r, c);
  }
  return s;
}

Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  Matrix mask(rows, cols, 1.0);
  if (rate <= 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& v : mask.values()) v = rng.uniform() < rate ? 0.0 : keep_scale;
  return mask;
}

void hadamard_inplace(Matrix& a, const Matrix& b) {
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) av[i] *= bv[i];
}

// Zeroes entries of grad wherever the matching pre-activation was not positive.
void relu_backward_inplace(Matrix& grad, const Matrix& pre) {
  auto g = grad.values();
  auto p = pre.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(p[i] > 0.0)) g[i] = 0.0;
  }
}

Matrix fan_in_normal(std::size_t out, std::size_t in, Rng& rng) {
  Matrix w(out, in);
  const double stddev = std::sqrt(2.0 / static_cast<double>(in));
  for (double& v : w.values()) v = stddev * rng.normal();
  return w;
}

}  // namespace

void ModelConfig::validate() const {
  if (input_dim < 1 || embed_dim < 1 || hidden1 < 1 || hidden2 < 1) {
    throw ArgumentError("ModelConfig: all dimensions must be >= 1");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw ArgumentError("ModelConfig: dropout must lie in [0, 1)");
  }
  if (capacity_multiplier != 1 && capacity_multiplier != 2) {
    throw ArgumentError("ModelConfig: capacity_multiplier must be 1 or 2");
  }
}

std::size_t MapperParams::parameter_count() const {
  std::size_t n = 0;
  for (const Matrix* t : tensors()) n += t->size();
  return n;
}

MapperParams MapperParams::zeros_like() const {
  MapperParams z;
  auto dst = z.tensors();
  auto src = tensors();
  for (std::size_t i = 0; i < dst.size(); ++i) *dst[i] = Matrix(src[i]->rows(), src[i]->cols());
  return z;
}

void MapperParams::validate() const {
  const bool ok = b1.rows() == 1 && b1.cols() == w1.rows() && w2.cols() == w1.rows() &&
                  b2.rows() == 1 && b2.cols() == w2.rows() && w3.cols() == w2.rows() &&
                  b3.rows() == 1 && b3.cols() == w3.rows() && w1.cols() >= 1 && w3.rows() >= 1;
  if (!ok) throw ShapeError("MapperParams: inconsistent tensor shapes");
}

MapperParams init_params(const ModelConfig& config, Rng& rng) {
  config.validate();
  MapperParams p;
  const std::size_t h1 = config.width1();
  const std::size_t h2 = config.width2();
  p.w1 = fan_in_normal(h1, config.input_dim, rng);
  p.b1 = Matrix(1, h1);
  p.w2 = fan_in_normal(h2, h1, rng);
  p.b2 = Matrix(1, h2);
  p.w3 = fan_in_normal(config.embed_dim, h2, rng);
  p.b3 = Matrix(1, config.embed_dim);
  return p;
}

ForwardResult forward(const MapperParams& params, const Matrix& x_batch, Mode mode,
                      double dropout, Rng& rng) {
  if (x_batch.cols() != params.input_dim()) {
    throw ShapeError("forward: input has " + std::to_string(x_batch.cols()) +
                     " features, mapper expects " + std::to_string(params.input_dim()));
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ArgumentError("forward: dropout must lie in [0, 1)");

  ForwardResult result;
  ForwardTrace& t = result.trace;
  const bool train = mode == Mode::Train;

  Matrix pre1 = add_bias(matmul_nt(x_batch, params.w1), params.b1);
  Matrix out1 = relu(pre1);
  Matrix mask1;
  if (train) {
    mask1 = dropout_mask(out1.rows(), out1.cols(), dropout, rng);
    hadamard_inplace(out1, mask1);
  }
  Matrix pre2 = add_bias(matmul_nt(out1, params.w2), params.b2);
  Matrix out2 = relu(pre2);
  Matrix mask2;
  if (train) {
    mask2 = dropout_mask(out2.rows(), out2.cols(), dropout, rng);
    hadamard_inplace(out2, mask2);
  }
  result.embeddings = add_bias(matmul_nt(out2, params.w3), params.b3);

  if (train) {
    t.input = x_batch;
    t.pre1 = std::move(pre1);
    t.out1 = std::move(out1);
    t.mask1 = std::move(mask1);
    t.pre2 = std::move(pre2);
    t.out2 = std::move(out2);
    t.mask2 = std::move(mask2);
    t.recorded = true;
  }
  return result;
}

Matrix embed(const MapperParams& params, const Matrix& x_batch) {
  Rng unused(0);
  return forward(params, x_batch, Mode::Eval, 0.0, unused).embeddings;
}

MapperGrads backward(const ForwardTrace& trace, const Matrix& grad_embeddings,
                     const MapperParams& params) {
  if (!trace.recorded) throw ArgumentError("backward: trace was not recorded in train mode");
  if (trace.input.cols() != params.input_dim() || trace.pre1.cols() != params.w1.rows() ||
      trace.pre2.cols() != params.w2.rows()) {
    throw ShapeError("backward: trace does not match params");
  }
  if (grad_embeddings.rows() != trace.input.rows() || grad_embeddings.cols() != params.embed_dim()) {
    throw ShapeError("backward: upstream gradient has the wrong shape");
  }

  MapperGrads g;
  g.w3 = matmul_tn(grad_embeddings, trace.out2);
  g.b3 = column_sums(grad_embeddings);

  Matrix d2 = matmul(grad_embeddings, params.w3);
  hadamard_inplace(d2, trace.mask2);
  relu_backward_inplace(d2, trace.pre2);
  g.w2 = matmul_tn(d2, trace.out1);
  g.b2 = column_sums(d2);

  Matrix d1 = matmul(d2, params.w2);
  hadamard_inplace(d1, trace.mask1);
  relu_backward_inplace(d1, trace.pre1);
  g.w1 = matmul_tn(d1, trace.input);
  g.b1 = column_sums(d1);
  return g;
}

}  // namespace gzsl
