#include "gzsl/optimizer.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "gzsl/error.hpp"

namespace gzsl {

void ScheduleConfig::validate() const {
  if (!(eta_min >= 0.0) || !(lr0 > eta_min) || !std::isfinite(lr0)) {
    throw ArgumentError("schedule: need lr0 > eta_min >= 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ArgumentError("schedule: momentum must lie in [0, 1)");
}

double cosine_lr(const ScheduleConfig& cfg, std::size_t t, std::size_t t_max) {
  if (t_max < 1) throw ArgumentError("cosine_lr: t_max must be >= 1");
  if (t > t_max) {
    throw ArgumentError("cosine_lr: step " + std::to_string(t) + " beyond horizon " +
                        std::to_string(t_max));
  }
  const double frac = static_cast<double>(t) / static_cast<double>(t_max);
  return cfg.eta_min + 0.5 * (cfg.lr0 - cfg.eta_min) * (1.0 + std::cos(std::numbers::pi * frac));
}

OptState OptState::create(const MapperParams& params, std::size_t total_steps) {
  OptState s;
  s.velocity = params.zeros_like();
  s.total_steps = total_steps;
  return s;
}

void nesterov_update(MapperParams& params, const MapperGrads& grads, MapperParams& velocity,
                     double lr, double momentum, std::size_t step_index) {
  auto p = params.tensors();
  auto g = grads.tensors();
  auto v = velocity.tensors();
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (p[t]->rows() != g[t]->rows() || p[t]->cols() != g[t]->cols() ||
        v[t]->rows() != p[t]->rows() || v[t]->cols() != p[t]->cols()) {
      throw ShapeError("optimizer: shape mismatch in tensor " + std::string(MapperParams::kNames[t]));
    }
    if (!g[t]->all_finite()) {
      throw NumericalError("optimizer: non-finite gradient in tensor " +
                           std::string(MapperParams::kNames[t]) + " at step " +
                           std::to_string(step_index));
    }
  }
  for (std::size_t t = 0; t < p.size(); ++t) {
    auto pv = p[t]->values();
    auto gv = g[t]->values();
    auto vv = v[t]->values();
    for (std::size_t i = 0; i < pv.size(); ++i) {
      vv[i] = momentum * vv[i] - lr * gv[i];
      pv[i] += momentum * vv[i] - lr * gv[i];
    }
  }
}

void step(MapperParams& params, const MapperGrads& grads, OptState& state,
          const ScheduleConfig& cfg) {
  if (state.step >= state.total_steps) {
    throw ArgumentError("optimizer: schedule exhausted after " + std::to_string(state.total_steps) +
                        " steps");
  }
  const double lr = cosine_lr(cfg, state.step, state.total_steps);
  nesterov_update(params, grads, state.velocity, lr, cfg.momentum, state.step);
  ++state.step;
}

}  // namespace gzsl
