#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gzsl/data.hpp"
#include "gzsl/eval.hpp"
#include "gzsl/model.hpp"
#include "gzsl/objectives.hpp"
#include "gzsl/optimizer.hpp"

namespace gzsl {

enum class TrainMode { Standalone, Joint };

/// Everything a training/evaluation run needs. Defaults: lr 0.01 with cosine annealing,
/// momentum 0.9, batch 64, T 0.05, lambda_ent 0.1, margin 0.2, dropout 0.5, 100 epochs.
struct RunConfig {
  TrainMode mode = TrainMode::Standalone;
  ModelConfig model;
  ScheduleConfig schedule;
  double temperature = 0.05;
  RegConfig reg;
  std::size_t epochs = 100;
  std::size_t batch = 64;
  std::vector<std::uint64_t> seeds = {0};
  double lambda_beta = 1.0;
  std::optional<double> gamma;  // unset: select by sweep on the validation split

  /// "low-lr": lr 0.0001 and lambda_ent 0.5, margin unchanged.
  void apply_preset(const std::string& name);
  void validate() const;
  nlohmann::json to_json() const;
  /// Overlays the fields present in j onto *this; unknown keys are rejected.
  void merge_json(const nlohmann::json& j);
};

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  double ce_real = 0.0;
  double ce_gen = 0.0;
  double h_s_real = 0.0;
  double h_s_gen = 0.0;
  double h_u_real = 0.0;
  double h_u_gen = 0.0;
  double r_s = 0.0;
  double r_u = 0.0;

  nlohmann::json to_json() const;
};

struct TrainResult {
  MapperParams params;
  std::vector<EpochLog> log;
  std::size_t steps = 0;
  bool diverged = false;
  std::string failure;
  /// Loss of the initial parameters over the training set (eval mode).
  double initial_loss = 0.0;
};

/// Runs the selected regime: stand-alone (seen-only softmax) or joint (real seen batch plus an
/// equal-size generated unseen batch per step, regularized loss). Stops early on a non-finite
/// loss or gradient, returning the last parameters that produced a finite step.
TrainResult train(const RunConfig& config, const Dataset& dataset, const GeneratedSet* generated,
                  std::uint64_t seed, const std::function<void(const EpochLog&)>& on_epoch = {});

/// Mean training loss of params over the train split in eval mode (no dropout).
double training_loss(const RunConfig& config, const MapperParams& params, const Dataset& dataset,
                     const GeneratedSet* generated);

struct RunOutcome {
  TrainResult training;
  std::vector<SweepRow> val_sweep;
  GzslReport report;
};

/// Train, pick gamma (config.gamma or sweep on the validation split), report on the test split.
RunOutcome train_and_evaluate(const RunConfig& config, const Dataset& dataset,
                              const GeneratedSet* generated, std::uint64_t seed,
                              const PrototypeSet* eval_prototypes = nullptr);

/// Directory holding one GZM1 file per tensor (W1.gzm, ...) plus manifest.json.
void save_checkpoint(const std::filesystem::path& dir, const MapperParams& params,
                     const nlohmann::json& manifest);
MapperParams load_checkpoint(const std::filesystem::path& dir, nlohmann::json* manifest = nullptr);

}  // namespace gzsl
