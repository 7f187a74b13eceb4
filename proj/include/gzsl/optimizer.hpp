#pragma once

#include <cstddef>

#include "gzsl/model.hpp"

namespace gzsl {

struct ScheduleConfig {
  double lr0 = 0.01;
  double eta_min = 0.0;
  double momentum = 0.9;
  void validate() const;
};

/// eta_t = eta_min + (lr0 - eta_min) * (1 + cos(pi t / t_max)) / 2, for 0 <= t <= t_max.
double cosine_lr(const ScheduleConfig& cfg, std::size_t t, std::size_t t_max);

struct OptState {
  MapperParams velocity;
  std::size_t step = 0;
  std::size_t total_steps = 0;

  static OptState create(const MapperParams& params, std::size_t total_steps);
};

/// Nesterov momentum in the folded form, where the stored parameters are the look-ahead point:
///   v <- mu v - lr g;   theta <- theta + mu v - lr g
/// Throws NumericalError naming the step and tensor if a gradient is not finite.
void nesterov_update(MapperParams& params, const MapperGrads& grads, MapperParams& velocity,
                     double lr, double momentum, std::size_t step_index);

/// One scheduled step: lr = cosine_lr(cfg, state.step, state.total_steps), then the Nesterov
/// update, then state.step++. Throws ArgumentError once the schedule is exhausted.
void step(MapperParams& params, const MapperGrads& grads, OptState& state,
          const ScheduleConfig& cfg);

}  // namespace gzsl
