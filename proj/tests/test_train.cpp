#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "gzsl/error.hpp"
#include "gzsl/train.hpp"

using namespace gzsl;
namespace fs = std::filesystem;

namespace {

SynthData small_task(double rho = 0.3) {
  SynthConfig c;
  c.num_seen = 4;
  c.num_unseen = 2;
  c.feature_dim = 10;
  c.proto_dim = 6;
  c.samples_per_class = 40;
  c.rho = rho;
  c.seed = 1;
  return synth_generate(c);
}

RunConfig small_config() {
  RunConfig c;
  c.model.hidden1 = 32;
  c.model.hidden2 = 16;
  c.epochs = 5;
  c.batch = 16;
  return c;
}

}  // namespace

TEST_CASE("run config defaults, preset and validation") {
  RunConfig c;
  CHECK(c.schedule.lr0 == 0.01);
  CHECK(c.schedule.momentum == 0.9);
  CHECK(c.batch == 64);
  CHECK(c.temperature == 0.05);
  CHECK(c.reg.lambda_ent == 0.1);
  CHECK(c.reg.margin == 0.2);
  CHECK(c.model.dropout == 0.5);
  c.apply_preset("low-lr");
  CHECK(c.schedule.lr0 == 0.0001);
  CHECK(c.reg.lambda_ent == 0.5);
  CHECK(c.reg.margin == 0.2);
  CHECK_THROWS_AS(c.apply_preset("fast"), ArgumentError);
  c.batch = 0;
  CHECK_THROWS_AS(c.validate(), ArgumentError);
}

TEST_CASE("json overlay") {
  RunConfig c;
  c.merge_json({{"epochs", 7}, {"mode", "joint"}, {"lambda_ent", 0.3}});
  CHECK(c.epochs == 7);
  CHECK(c.mode == TrainMode::Joint);
  CHECK(c.reg.lambda_ent == 0.3);
  CHECK_THROWS_AS(c.merge_json({{"epoch", 7}}), ValidationError);
  CHECK_THROWS_AS(c.merge_json({{"mode", "both"}}), ValidationError);
  CHECK_THROWS_AS(c.merge_json({{"epochs", "many"}}), ValidationError);
  RunConfig round;
  round.merge_json(c.to_json());
  CHECK(round.to_json() == c.to_json());
}

TEST_CASE("zero epochs leave the initialization untouched") {
  const SynthData d = small_task();
  RunConfig c = small_config();
  c.epochs = 0;
  const TrainResult r = train(c, d.dataset, nullptr, 3);
  ModelConfig mc = c.model;
  mc.input_dim = 10;
  mc.embed_dim = 6;
  Rng init = Rng(3).fork(10);
  CHECK(r.params == init_params(mc, init));
  CHECK(r.log.empty());
  CHECK(r.steps == 0);
}

TEST_CASE("standalone training lowers the loss and is deterministic") {
  const SynthData d = small_task();
  const RunConfig c = small_config();
  const TrainResult a = train(c, d.dataset, nullptr, 5);
  const TrainResult b = train(c, d.dataset, nullptr, 5);
  CHECK(a.params == b.params);
  REQUIRE(a.log.size() == 5);
  CHECK(a.steps == 5 * ((4 * 28 + 15) / 16));
  CHECK(training_loss(c, a.params, d.dataset, nullptr) < a.initial_loss);
  CHECK(a.log.back().loss < a.log.front().loss);
  CHECK(a.log.front().lr == c.schedule.lr0);
  CHECK_FALSE(a.diverged);
  CHECK(train(c, d.dataset, nullptr, 6).params != a.params);
}

TEST_CASE("joint training reports the entropy margins") {
  const SynthData d = small_task(0.8);
  RunConfig c = small_config();
  c.mode = TrainMode::Joint;
  const TrainResult r = train(c, d.dataset, &d.generated, 2);
  REQUIRE(r.log.size() == 5);
  for (const auto& e : r.log) {
    CHECK(e.ce_gen > 0.0);
    CHECK(e.r_s >= 0.0);
    CHECK(e.r_u >= 0.0);
  }
  CHECK(training_loss(c, r.params, d.dataset, &d.generated) < r.initial_loss);
  CHECK_THROWS_AS(train(c, d.dataset, nullptr, 2), ValidationError);
}

TEST_CASE("a huge learning rate stops with a diagnostic") {
  const SynthData d = small_task();
  RunConfig c = small_config();
  c.schedule.lr0 = 1e200;
  c.model.dropout = 0.0;
  const TrainResult r = train(c, d.dataset, nullptr, 0);
  CHECK(r.diverged);
  CHECK(r.failure.find("step") != std::string::npos);
  for (const Matrix* t : r.params.tensors()) CHECK(t->all_finite());
  // The fallback parameters still give a finite loss.
  CHECK(std::isfinite(training_loss(c, r.params, d.dataset, nullptr)));
}

TEST_CASE("train and evaluate produces a consistent report") {
  const SynthData d = small_task();
  RunConfig c = small_config();
  const RunOutcome o = train_and_evaluate(c, d.dataset, nullptr, 4);
  CHECK(o.val_sweep.size() == 41);
  CHECK(o.report.h == doctest::Approx(harmonic_mean(o.report.s, o.report.u)));
  CHECK(o.report.gamma == select_gamma(o.val_sweep));
  c.gamma = 0.0;
  const RunOutcome fixed = train_and_evaluate(c, d.dataset, nullptr, 4);
  CHECK(fixed.val_sweep.empty());
  CHECK(fixed.report.gamma == 0.0);
}

TEST_CASE("checkpoint round trip") {
  const fs::path dir = fs::temp_directory_path() / "gzsl_test_train_ckpt";
  fs::remove_all(dir);
  Rng rng(7);
  ModelConfig mc;
  mc.input_dim = 5;
  mc.embed_dim = 3;
  mc.hidden1 = 8;
  mc.hidden2 = 4;
  MapperParams p = init_params(mc, rng);
  for (Matrix* t : p.tensors())
    for (double& v : t->values()) v = static_cast<double>(static_cast<float>(v));
  save_checkpoint(dir, p, {{"seed", 7}});
  nlohmann::json manifest;
  CHECK(load_checkpoint(dir, &manifest) == p);
  CHECK(manifest["seed"] == 7);
  CHECK(manifest["input_dim"] == 5);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing"), IoError);
}
