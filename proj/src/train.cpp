#include "gzsl/train.hpp"

#include <cmath>

#include "gzsl/error.hpp"
#include "gzsl/io.hpp"

namespace gzsl {

namespace {

const char* mode_name(TrainMode m) { return m == TrainMode::Joint ? "joint" : "standalone"; }

ProbModelConfig prob_config(const RunConfig& config) {
  return {config.temperature,
          config.mode == TrainMode::Joint ? Universe::Joint : Universe::SeenOnly};
}

}  // namespace

void RunConfig::apply_preset(const std::string& name) {
  if (name == "low-lr") {
    schedule.lr0 = 0.0001;
    reg.lambda_ent = 0.5;
    return;
  }
  throw ArgumentError("unknown preset '" + name + "'");
}

void RunConfig::validate() const {
  model.validate();
  schedule.validate();
  ProbModelConfig{temperature, Universe::Joint}.validate();
  reg.validate();
  if (batch < 1) throw ArgumentError("batch size must be >= 1");
  if (seeds.empty()) throw ArgumentError("at least one seed is required");
  if (!(lambda_beta >= 0.0)) throw ArgumentError("lambda_beta must be >= 0");
  if (gamma && !(*gamma >= 0.0)) throw ArgumentError("gamma must be >= 0");
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = {{"mode", mode_name(mode)},
                      {"input_dim", model.input_dim},
                      {"embed_dim", model.embed_dim},
                      {"hidden1", model.hidden1},
                      {"hidden2", model.hidden2},
                      {"dropout", model.dropout},
                      {"capacity_multiplier", model.capacity_multiplier},
                      {"lr", schedule.lr0},
                      {"eta_min", schedule.eta_min},
                      {"momentum", schedule.momentum},
                      {"temperature", temperature},
                      {"margin", reg.margin},
                      {"lambda_ent", reg.lambda_ent},
                      {"seen_direction", reg.seen_direction},
                      {"unseen_direction", reg.unseen_direction},
                      {"epochs", epochs},
                      {"batch", batch},
                      {"seeds", seeds},
                      {"lambda_beta", lambda_beta}};
  j["gamma"] = gamma ? nlohmann::json(*gamma) : nlohmann::json(nullptr);
  return j;
}

void RunConfig::merge_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("run config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "mode") {
        const auto m = v.get<std::string>();
        if (m == "standalone") mode = TrainMode::Standalone;
        else if (m == "joint") mode = TrainMode::Joint;
        else throw ValidationError("mode must be 'standalone' or 'joint'");
      } else if (key == "input_dim") model.input_dim = v.get<std::size_t>();
      else if (key == "embed_dim") model.embed_dim = v.get<std::size_t>();
      else if (key == "hidden1") model.hidden1 = v.get<std::size_t>();
      else if (key == "hidden2") model.hidden2 = v.get<std::size_t>();
      else if (key == "dropout") model.dropout = v.get<double>();
      else if (key == "capacity_multiplier") model.capacity_multiplier = v.get<int>();
      else if (key == "lr") schedule.lr0 = v.get<double>();
      else if (key == "eta_min") schedule.eta_min = v.get<double>();
      else if (key == "momentum") schedule.momentum = v.get<double>();
      else if (key == "temperature") temperature = v.get<double>();
      else if (key == "margin") reg.margin = v.get<double>();
      else if (key == "lambda_ent") reg.lambda_ent = v.get<double>();
      else if (key == "seen_direction") reg.seen_direction = v.get<bool>();
      else if (key == "unseen_direction") reg.unseen_direction = v.get<bool>();
      else if (key == "epochs") epochs = v.get<std::size_t>();
      else if (key == "batch") batch = v.get<std::size_t>();
      else if (key == "seeds") seeds = v.get<std::vector<std::uint64_t>>();
      else if (key == "seed") seeds = {v.get<std::uint64_t>()};
      else if (key == "lambda_beta") lambda_beta = v.get<double>();
      else if (key == "gamma") {
        if (v.is_null()) gamma.reset();
        else gamma = v.get<double>();
      } else if (key == "preset") apply_preset(v.get<std::string>());
      else throw ValidationError("unknown config field '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  }
}

nlohmann::json EpochLog::to_json() const {
  return {{"type", "epoch"},   {"epoch", epoch},       {"lr", lr},
          {"loss", loss},      {"ce_real", ce_real},   {"ce_gen", ce_gen},
          {"H_s_real", h_s_real}, {"H_s_gen", h_s_gen}, {"H_u_real", h_u_real},
          {"H_u_gen", h_u_gen}, {"R_s", r_s},           {"R_u", r_u}};
}

double training_loss(const RunConfig& config, const MapperParams& params, const Dataset& dataset,
                     const GeneratedSet* generated) {
  const auto rows = dataset.indices(Split::Train);
  if (rows.empty()) throw ValidationError("training split is empty");
  const Matrix emb = embed(params, select_rows(dataset.features(), rows));
  const auto labels = label_columns_of(dataset, rows);
  const ProbModelConfig prob = prob_config(config);
  if (config.mode == TrainMode::Standalone) {
    return loss_seen(emb, labels, dataset.prototypes(), prob).loss;
  }
  const Matrix gen_emb = embed(params, generated->features);
  return loss_final(emb, labels, gen_emb, generated->label_columns, dataset.prototypes(), prob,
                    config.reg)
      .loss;
}

TrainResult train(const RunConfig& config_in, const Dataset& dataset, const GeneratedSet* generated,
                  std::uint64_t seed, const std::function<void(const EpochLog&)>& on_epoch) {
  RunConfig config = config_in;
  if (config.model.input_dim == 0) config.model.input_dim = dataset.feature_dim();
  if (config.model.embed_dim == 0) config.model.embed_dim = dataset.prototypes().dim();
  config.validate();
  if (config.model.input_dim != dataset.feature_dim() ||
      config.model.embed_dim != dataset.prototypes().dim()) {
    throw ShapeError("model dimensions do not match the dataset");
  }
  const bool joint = config.mode == TrainMode::Joint;
  if (joint && (generated == nullptr || generated->empty())) {
    throw ValidationError("joint mode needs a generated unseen feature set");
  }
  const auto train_rows = dataset.indices(Split::Train);
  if (train_rows.empty()) throw ValidationError("training split is empty");

  const Rng root(seed);
  Rng init_rng = root.fork(10);
  Rng dropout_rng = root.fork(11);
  const Rng batch_rng = root.fork(12);
  const Rng gen_rng = root.fork(13);

  TrainResult out;
  out.params = init_params(config.model, init_rng);
  out.initial_loss = training_loss(config, out.params, dataset, joint ? generated : nullptr);

  const std::size_t batches_per_epoch = (train_rows.size() + config.batch - 1) / config.batch;
  const std::size_t total = std::max<std::size_t>(1, config.epochs * batches_per_epoch);
  OptState state = OptState::create(out.params, total);
  const ProbModelConfig prob = prob_config(config);
  const PrototypeSet& protos = dataset.prototypes();

  // Generated samples are consumed from their own permutation stream, wrapping around.
  std::size_t gen_epoch = 0;
  std::size_t gen_cursor = 0;
  std::vector<std::size_t> gen_perm;
  auto next_gen_batch = [&](std::size_t count) {
    std::vector<std::size_t> picked;
    picked.reserve(count);
    while (picked.size() < count) {
      if (gen_cursor >= gen_perm.size()) {
        gen_perm = gen_rng.fork(gen_epoch++).permutation(generated->size());
        gen_cursor = 0;
      }
      picked.push_back(gen_perm[gen_cursor++]);
    }
    return picked;
  };

  // A failed step means the current parameters are bad. The fallback is the start point of the
  // last step that completed, i.e. the latest parameters known to give a finite loss and gradient.
  MapperParams last_good = out.params;
  MapperParams pending = out.params;

  for (std::size_t epoch = 0; epoch < config.epochs && !out.diverged; ++epoch) {
    EpochLog log;
    log.epoch = epoch + 1;
    log.lr = cosine_lr(config.schedule, state.step, state.total_steps);
    std::size_t n_batches = 0;
    for (const auto& batch : batch_iter(train_rows.size(), config.batch, batch_rng, epoch)) {
      std::vector<std::size_t> rows(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) rows[i] = train_rows[batch[i]];
      const auto labels = label_columns_of(dataset, rows);
      const Matrix x = select_rows(dataset.features(), rows);

      try {
        pending = out.params;
        if (!joint) {
          auto fwd = forward(out.params, x, Mode::Train, config.model.dropout, dropout_rng);
          const BatchLossResult loss = loss_seen(fwd.embeddings, labels, protos, prob);
          if (!std::isfinite(loss.loss)) throw NumericalError("non-finite loss");
          const MapperGrads g = backward(fwd.trace, loss.grad_real, out.params);
          step(out.params, g, state, config.schedule);
          log.loss += loss.loss;
          log.ce_real += loss.ce_real;
          log.h_s_real += loss.h_s_real;
        } else {
          const auto gen_rows = next_gen_batch(rows.size());
          std::vector<std::size_t> gen_labels(gen_rows.size());
          for (std::size_t i = 0; i < gen_rows.size(); ++i) gen_labels[i] = generated->label_columns[gen_rows[i]];
          const Matrix xg = select_rows(generated->features, gen_rows);
          auto fwd_real = forward(out.params, x, Mode::Train, config.model.dropout, dropout_rng);
          auto fwd_gen = forward(out.params, xg, Mode::Train, config.model.dropout, dropout_rng);
          const BatchLossResult loss = loss_final(fwd_real.embeddings, labels, fwd_gen.embeddings,
                                                  gen_labels, protos, prob, config.reg);
          if (!std::isfinite(loss.loss)) throw NumericalError("non-finite loss");
          MapperGrads g = backward(fwd_real.trace, loss.grad_real, out.params);
          const MapperGrads gg = backward(fwd_gen.trace, loss.grad_gen, out.params);
          auto gt = g.tensors();
          auto ggt = gg.tensors();
          for (std::size_t t = 0; t < gt.size(); ++t) *gt[t] += *ggt[t];
          step(out.params, g, state, config.schedule);
          log.loss += loss.loss;
          log.ce_real += loss.ce_real;
          log.ce_gen += loss.ce_gen;
          log.h_s_real += loss.h_s_real;
          log.h_s_gen += loss.h_s_gen;
          log.h_u_real += loss.h_u_real;
          log.h_u_gen += loss.h_u_gen;
          log.r_s += loss.r_s;
          log.r_u += loss.r_u;
        }
      } catch (const NumericalError& e) {
        out.params = last_good;
        out.diverged = true;
        out.failure = "epoch " + std::to_string(epoch + 1) + ", step " + std::to_string(state.step) +
                      ": " + e.what();
        break;
      }
      std::swap(last_good, pending);
      ++n_batches;
    }
    if (n_batches > 0) {
      const double inv = 1.0 / static_cast<double>(n_batches);
      for (double* v : {&log.loss, &log.ce_real, &log.ce_gen, &log.h_s_real, &log.h_s_gen,
                        &log.h_u_real, &log.h_u_gen, &log.r_s, &log.r_u}) {
        *v *= inv;
      }
    }
    if (out.diverged) break;
    out.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  out.steps = state.step;
  return out;
}

RunOutcome train_and_evaluate(const RunConfig& config, const Dataset& dataset,
                              const GeneratedSet* generated, std::uint64_t seed,
                              const PrototypeSet* eval_prototypes) {
  RunOutcome out;
  out.training = train(config, dataset, generated, seed);
  if (out.training.diverged) throw NumericalError("training diverged: " + out.training.failure);
  const PrototypeSet& protos = eval_prototypes ? *eval_prototypes : dataset.prototypes();
  double gamma = 0.0;
  if (config.gamma) {
    gamma = *config.gamma;
  } else {
    const auto rows = dataset.indices(Split::Val);
    std::vector<std::size_t> labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = protos.column_of(dataset.labels()[rows[i]]);
    const Matrix scores = score_matrix(out.training.params, select_rows(dataset.features(), rows),
                                       protos, config.temperature);
    const auto grid = default_gamma_grid();
    out.val_sweep = gamma_sweep(scores, labels, protos, grid);
    gamma = select_gamma(out.val_sweep);
  }
  out.report = evaluate(out.training.params, dataset, Split::Test, protos, config.temperature, gamma);
  out.report.seed = seed;
  out.report.config = config.to_json();
  return out;
}

void save_checkpoint(const std::filesystem::path& dir, const MapperParams& params,
                     const nlohmann::json& manifest) {
  std::filesystem::create_directories(dir);
  const auto tensors = params.tensors();
  nlohmann::json m = manifest;
  nlohmann::json shapes = nlohmann::json::object();
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    const std::string name(MapperParams::kNames[t]);
    io::save_matrix(dir / (name + ".gzm"), *tensors[t]);
    shapes[name] = {tensors[t]->rows(), tensors[t]->cols()};
  }
  m["tensors"] = shapes;
  m["input_dim"] = params.input_dim();
  m["embed_dim"] = params.embed_dim();
  io::save_json(dir / "manifest.json", m);
}

MapperParams load_checkpoint(const std::filesystem::path& dir, nlohmann::json* manifest) {
  if (!std::filesystem::is_directory(dir)) throw IoError("checkpoint directory not found: " + dir.string());
  MapperParams p;
  auto tensors = p.tensors();
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    *tensors[t] = io::load_matrix(dir / (std::string(MapperParams::kNames[t]) + ".gzm"));
  }
  p.validate();
  if (manifest) *manifest = io::load_json(dir / "manifest.json");
  return p;
}

}  // namespace gzsl
