#pragma once

#include <array>
#include <cstddef>
#include <string_view>

#include "gzsl/linalg.hpp"
#include "gzsl/rng.hpp"

namespace gzsl {

struct ModelConfig {
  std::size_t input_dim = 0;
  std::size_t embed_dim = 0;
  std::size_t hidden1 = 2048;
  std::size_t hidden2 = 1024;
  double dropout = 0.5;
  /// 2 doubles both hidden layers (used with sentence prototypes).
  int capacity_multiplier = 1;

  std::size_t width1() const { return hidden1 * static_cast<std::size_t>(capacity_multiplier); }
  std::size_t width2() const { return hidden2 * static_cast<std::size_t>(capacity_multiplier); }
  void validate() const;
};

/// Weights of the three-layer mapper x -> ReLU -> dropout -> ReLU -> dropout -> linear.
/// Biases are stored as 1 x n matrices. The same struct doubles as the gradient buffer.
struct MapperParams {
  Matrix w1, b1, w2, b2, w3, b3;

  static constexpr std::array<std::string_view, 6> kNames = {"W1", "b1", "W2", "b2", "W3", "b3"};

  std::array<Matrix*, 6> tensors() { return {&w1, &b1, &w2, &b2, &w3, &b3}; }
  std::array<const Matrix*, 6> tensors() const { return {&w1, &b1, &w2, &b2, &w3, &b3}; }

  std::size_t input_dim() const { return w1.cols(); }
  std::size_t embed_dim() const { return w3.rows(); }
  std::size_t parameter_count() const;

  /// Zero tensors with the same shapes.
  MapperParams zeros_like() const;
  /// Throws ShapeError unless the six tensors chain together.
  void validate() const;

  friend bool operator==(const MapperParams&, const MapperParams&) = default;
};

using MapperGrads = MapperParams;

enum class Mode { Train, Eval };

/// Activations cached by a training-mode forward pass. Masks hold 0 or 1/(1-p).
struct ForwardTrace {
  Matrix input;
  Matrix pre1, out1, mask1;
  Matrix pre2, out2, mask2;
  bool recorded = false;
};

struct ForwardResult {
  Matrix embeddings;
  ForwardTrace trace;
};

/// Fan-in scaled normal init (variance 2 / fan_in), zero biases.
MapperParams init_params(const ModelConfig& config, Rng& rng);

/// Maps a batch (rows = samples) into the embedding space. Train mode applies inverted dropout
/// with the given rate and records a trace; eval mode is deterministic and needs no rescaling.
ForwardResult forward(const MapperParams& params, const Matrix& x_batch, Mode mode,
                      double dropout, Rng& rng);

/// Eval-mode forward, embeddings only.
Matrix embed(const MapperParams& params, const Matrix& x_batch);

/// Reverse-mode pass: dL/dtheta for every tensor given dL/d(embeddings).
MapperGrads backward(const ForwardTrace& trace, const Matrix& grad_embeddings,
                     const MapperParams& params);

}  // namespace gzsl
