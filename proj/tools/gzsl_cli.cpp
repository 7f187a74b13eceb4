#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gzsl/data.hpp"
#include "gzsl/error.hpp"
#include "gzsl/eval.hpp"
#include "gzsl/gradcheck.hpp"
#include "gzsl/io.hpp"
#include "gzsl/prototypes.hpp"
#include "gzsl/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode : int { kOk = 0, kValidation = 1, kNumerical = 2, kIo = 3 };

// Training flags. Unset optionals leave the JSON/default value in place.
struct TrainFlags {
  std::string config_path;
  std::string preset;
  std::string mode;
  std::optional<std::size_t> epochs, batch, hidden1, hidden2;
  std::optional<int> capacity_multiplier;
  std::optional<double> lr, momentum, temperature, lambda_ent, margin, lambda_beta, dropout, gamma;
  std::optional<bool> seen_direction, unseen_direction;
  std::vector<std::uint64_t> seeds;
  bool gamma_sweep = false;
};

// Where the data comes from: a directory written by `synth`, or an in-memory synthetic task.
struct DataFlags {
  std::string data_dir;
  std::string synth_config;
  std::optional<double> rho, sigma;
  std::optional<std::uint64_t> data_seed;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f, bool with_gamma) {
  cmd->add_option("--config", f.config_path, "JSON run config (CLI flags take precedence)");
  cmd->add_option("--preset", f.preset, "Named preset")->check(CLI::IsMember({"low-lr"}));
  cmd->add_option("--mode", f.mode, "Training regime")->check(CLI::IsMember({"standalone", "joint"}));
  cmd->add_option("--epochs", f.epochs, "Training epochs");
  cmd->add_option("--lr", f.lr, "Initial learning rate");
  cmd->add_option("--momentum", f.momentum, "Nesterov momentum");
  cmd->add_option("--batch", f.batch, "Mini-batch size");
  cmd->add_option("--temperature", f.temperature, "Softmax temperature");
  cmd->add_option("--lambda-ent", f.lambda_ent, "Entropy regularization weight");
  cmd->add_option("--margin", f.margin, "Entropy margin");
  cmd->add_option("--lambda-beta", f.lambda_beta, "Ridge weight for prototype swapping");
  cmd->add_option("--dropout", f.dropout, "Dropout probability");
  cmd->add_option("--hidden1", f.hidden1, "First hidden width");
  cmd->add_option("--hidden2", f.hidden2, "Second hidden width");
  cmd->add_option("--capacity-multiplier", f.capacity_multiplier, "Hidden width multiplier (1 or 2)");
  cmd->add_option("--seen-direction", f.seen_direction, "Include the seen-side margin term");
  cmd->add_option("--unseen-direction", f.unseen_direction, "Include the unseen-side margin term");
  cmd->add_option("--seed", f.seeds, "Seed(s); several seeds run sequentially")->delimiter(',');
  if (with_gamma) {
    auto* g = cmd->add_option("--gamma", f.gamma, "Fixed calibration gamma");
    auto* s = cmd->add_flag("--gamma-sweep", f.gamma_sweep,
                            "Select gamma on the validation split and write sweep.csv");
    g->excludes(s);
  }
}

void add_data_flags(CLI::App* cmd, DataFlags& f) {
  cmd->add_option("--data", f.data_dir, "Data directory written by `gzsl synth`");
  cmd->add_option("--synth-config", f.synth_config, "JSON synthetic task config (used without --data)");
  cmd->add_option("--rho", f.rho, "Synthetic prototype correlation (without --data)");
  cmd->add_option("--sigma", f.sigma, "Synthetic feature noise (without --data)");
  cmd->add_option("--data-seed", f.data_seed, "Synthetic data seed (without --data)");
}

gzsl::RunConfig resolve_config(const TrainFlags& f) {
  gzsl::RunConfig c;
  if (!f.config_path.empty()) c.merge_json(gzsl::io::load_json(f.config_path));
  if (!f.preset.empty()) c.apply_preset(f.preset);
  if (!f.mode.empty()) c.merge_json({{"mode", f.mode}});
  if (f.epochs) c.epochs = *f.epochs;
  if (f.batch) c.batch = *f.batch;
  if (f.hidden1) c.model.hidden1 = *f.hidden1;
  if (f.hidden2) c.model.hidden2 = *f.hidden2;
  if (f.capacity_multiplier) c.model.capacity_multiplier = *f.capacity_multiplier;
  if (f.dropout) c.model.dropout = *f.dropout;
  if (f.lr) c.schedule.lr0 = *f.lr;
  if (f.momentum) c.schedule.momentum = *f.momentum;
  if (f.temperature) c.temperature = *f.temperature;
  if (f.lambda_ent) c.reg.lambda_ent = *f.lambda_ent;
  if (f.margin) c.reg.margin = *f.margin;
  if (f.seen_direction) c.reg.seen_direction = *f.seen_direction;
  if (f.unseen_direction) c.reg.unseen_direction = *f.unseen_direction;
  if (f.lambda_beta) c.lambda_beta = *f.lambda_beta;
  if (!f.seeds.empty()) c.seeds = f.seeds;
  if (f.gamma) c.gamma = *f.gamma;
  if (f.gamma_sweep) c.gamma.reset();
  return c;
}

// Unset model dimensions follow the data.
void bind_dims(gzsl::RunConfig& c, const gzsl::Dataset& d) {
  if (c.model.input_dim == 0) c.model.input_dim = d.feature_dim();
  if (c.model.embed_dim == 0) c.model.embed_dim = d.prototypes().dim();
  c.validate();
}

gzsl::SynthConfig resolve_synth(const DataFlags& f) {
  gzsl::SynthConfig s;
  if (!f.synth_config.empty()) s = gzsl::io::load_json(f.synth_config).get<gzsl::SynthConfig>();
  if (f.rho) s.rho = *f.rho;
  if (f.sigma) s.noise_sigma = *f.sigma;
  if (f.data_seed) s.seed = *f.data_seed;
  s.validate();
  return s;
}

struct LoadedData {
  gzsl::Dataset dataset;
  std::optional<gzsl::GeneratedSet> generated;
  json source;
};

LoadedData load_data(const DataFlags& f) {
  LoadedData out;
  if (!f.data_dir.empty()) {
    const gzsl::DataLayout layout{f.data_dir};
    out.dataset = gzsl::load_dataset(layout);
    if (fs::exists(layout.generated_features())) {
      out.generated = gzsl::load_generated(layout, out.dataset.prototypes());
    }
    out.source = {{"data", f.data_dir}};
    return out;
  }
  const gzsl::SynthConfig s = resolve_synth(f);
  gzsl::SynthData d = gzsl::synth_generate(s);
  out.dataset = std::move(d.dataset);
  out.generated = std::move(d.generated);
  out.source = {{"synth", s}};
  return out;
}

// One output directory per seed when several seeds are requested.
fs::path seed_dir(const fs::path& out, const gzsl::RunConfig& c, std::uint64_t seed) {
  return c.seeds.size() > 1 ? out / ("seed-" + std::to_string(seed)) : out;
}

json resolved_json(const gzsl::RunConfig& c, const json& source) {
  json j = c.to_json();
  j["source"] = source;
  return j;
}

// Trains one seed, streaming the JSON-lines log. Returns the trained result; on divergence the
// last-good checkpoint is still written and a failure record ends the log.
gzsl::TrainResult train_one(const gzsl::RunConfig& c, const LoadedData& data, std::uint64_t seed,
                            const fs::path& dir) {
  fs::create_directories(dir);
  std::ostringstream log;
  const json cfg = resolved_json(c, data.source);
  log << json{{"type", "config"}, {"config", cfg}, {"seed", seed}}.dump() << "\n";
  const gzsl::GeneratedSet* gen = data.generated ? &*data.generated : nullptr;
  if (c.mode == gzsl::TrainMode::Standalone) gen = nullptr;
  gzsl::TrainResult r = gzsl::train(c, data.dataset, gen, seed, [&](const gzsl::EpochLog& e) {
    log << e.to_json().dump() << "\n";
  });
  const std::size_t epochs_done = r.log.size();
  if (r.diverged) log << json{{"type", "failure"}, {"message", r.failure}}.dump() << "\n";
  gzsl::io::save_text(dir / "log.jsonl", log.str());
  gzsl::save_checkpoint(dir / "checkpoint", r.params,
                        {{"config", cfg}, {"seed", seed}, {"epoch", epochs_done}});
  return r;
}

int cmd_synth(const DataFlags& f, const std::string& out) {
  const gzsl::SynthConfig s = resolve_synth(f);
  const gzsl::SynthData d = gzsl::synth_generate(s);
  const gzsl::DataLayout layout{out};
  gzsl::save_dataset(layout, d.dataset);
  gzsl::save_generated(layout, d.generated);
  gzsl::io::save_json(fs::path(out) / "synth.json", s);
  std::cout << json{{"out", out},
                    {"samples", d.dataset.size()},
                    {"generated", d.generated.size()},
                    {"linkage", gzsl::average_linkage(d.prototypes)}}
                   .dump()
            << "\n";
  return kOk;
}

int cmd_train(const TrainFlags& tf, const DataFlags& df, const std::string& out) {
  gzsl::RunConfig c = resolve_config(tf);
  const LoadedData data = load_data(df);
  bind_dims(c, data.dataset);
  int code = kOk;
  for (std::uint64_t seed : c.seeds) {
    const fs::path dir = seed_dir(out, c, seed);
    const gzsl::TrainResult r = train_one(c, data, seed, dir);
    if (r.diverged) {
      std::cerr << "gzsl: seed " << seed << ": training diverged (" << r.failure
                << "); last-good checkpoint saved in " << (dir / "checkpoint").string() << "\n";
      code = kNumerical;
    }
  }
  return code;
}

gzsl::GzslReport evaluate_params(const gzsl::RunConfig& c, const gzsl::MapperParams& params,
                                 const gzsl::Dataset& dataset, const gzsl::PrototypeSet& protos,
                                 bool write_sweep, const fs::path& dir) {
  double gamma = 0.0;
  if (c.gamma) {
    gamma = *c.gamma;
  } else {
    const auto rows = dataset.indices(gzsl::Split::Val);
    std::vector<std::size_t> labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = protos.column_of(dataset.labels()[rows[i]]);
    const gzsl::Matrix scores =
        gzsl::score_matrix(params, gzsl::select_rows(dataset.features(), rows), protos, c.temperature);
    const auto sweep = gzsl::gamma_sweep(scores, labels, protos, gzsl::default_gamma_grid());
    gamma = gzsl::select_gamma(sweep);
    if (write_sweep) gzsl::io::save_text(dir / "sweep.csv", gzsl::sweep_csv(sweep));
  }
  gzsl::GzslReport r = gzsl::evaluate(params, dataset, gzsl::Split::Test, protos, c.temperature, gamma);
  r.linkage = gzsl::average_linkage(protos);
  return r;
}

int cmd_eval(const TrainFlags& tf, const DataFlags& df, const std::string& checkpoint,
             const std::string& prototypes, const std::string& out) {
  json manifest;
  const gzsl::MapperParams params = gzsl::load_checkpoint(checkpoint, &manifest);
  // The checkpoint's config is the base; explicit flags still win.
  gzsl::RunConfig base;
  if (manifest.contains("config")) {
    json cfg = manifest["config"];
    cfg.erase("source");
    base.merge_json(cfg);
  }
  const TrainFlags& flags = tf;
  gzsl::RunConfig c = base;
  if (!flags.config_path.empty()) c.merge_json(gzsl::io::load_json(flags.config_path));
  if (flags.temperature) c.temperature = *flags.temperature;
  c.gamma.reset();
  if (flags.gamma) c.gamma = *flags.gamma;
  c.validate();

  const LoadedData data = load_data(df);
  if (params.input_dim() != data.dataset.feature_dim()) {
    throw gzsl::ShapeError("checkpoint expects " + std::to_string(params.input_dim()) +
                           "-dimensional features, data has " +
                           std::to_string(data.dataset.feature_dim()));
  }
  const gzsl::PrototypeSet protos =
      prototypes.empty() ? data.dataset.prototypes() : gzsl::load_prototypes(prototypes);
  if (params.embed_dim() != protos.dim()) {
    throw gzsl::ShapeError("checkpoint embeds into " + std::to_string(params.embed_dim()) +
                           " dimensions, prototypes have " + std::to_string(protos.dim()));
  }
  gzsl::GzslReport r = evaluate_params(c, params, data.dataset, protos, flags.gamma_sweep, out);
  r.seed = manifest.value("seed", std::uint64_t{0});
  r.config = resolved_json(c, data.source);
  r.config["checkpoint"] = checkpoint;
  const json j = r.to_json();
  gzsl::io::save_json(fs::path(out) / "report.json", j);
  std::cout << j.dump(2) << "\n";
  return kOk;
}

int cmd_run(const TrainFlags& tf, const DataFlags& df, const std::string& out) {
  gzsl::RunConfig c = resolve_config(tf);
  const LoadedData data = load_data(df);
  bind_dims(c, data.dataset);
  json runs = json::array();
  double su = 0, ss = 0, sh = 0;
  for (std::uint64_t seed : c.seeds) {
    const fs::path dir = seed_dir(out, c, seed);
    const gzsl::TrainResult t = train_one(c, data, seed, dir);
    if (t.diverged) {
      std::cerr << "gzsl: seed " << seed << ": training diverged (" << t.failure << ")\n";
      return kNumerical;
    }
    gzsl::GzslReport r = evaluate_params(c, t.params, data.dataset, data.dataset.prototypes(), true, dir);
    r.seed = seed;
    r.config = resolved_json(c, data.source);
    gzsl::io::save_json(dir / "report.json", r.to_json());
    runs.push_back({{"seed", seed}, {"u", r.u}, {"s", r.s}, {"H", r.h}, {"gamma", r.gamma}});
    su += r.u;
    ss += r.s;
    sh += r.h;
  }
  const double n = static_cast<double>(c.seeds.size());
  const json summary = {{"runs", runs},
                        {"mean", {{"u", su / n}, {"s", ss / n}, {"H", sh / n}}},
                        {"config", resolved_json(c, data.source)}};
  gzsl::io::save_json(fs::path(out) / "summary.json", summary);
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

int cmd_linkage(const std::string& path, const std::string& out) {
  const gzsl::PrototypeSet ps = gzsl::load_prototypes(path);
  const double l = gzsl::average_linkage(ps);
  if (!out.empty()) {
    const gzsl::Matrix table = gzsl::pairwise_cosine(ps.seen_matrix(), ps.unseen_matrix());
    const auto seen = ps.seen_columns();
    const auto unseen = ps.unseen_columns();
    std::ostringstream csv;
    csv.precision(17);
    csv << "seen_class,unseen_class,cosine\n";
    for (std::size_t i = 0; i < seen.size(); ++i)
      for (std::size_t j = 0; j < unseen.size(); ++j)
        csv << ps.class_ids()[seen[i]] << "," << ps.class_ids()[unseen[j]] << "," << table(i, j) << "\n";
    gzsl::io::save_text(fs::path(out) / "linkage.csv", csv.str());
    gzsl::io::save_json(fs::path(out) / "linkage.json", {{"linkage", l}, {"prototypes", path}});
  }
  std::cout << json{{"linkage", l}}.dump() << "\n";
  return kOk;
}

int cmd_swap(const std::string& from, const std::string& to, double lambda_beta, const std::string& out) {
  const gzsl::PrototypeSet a = gzsl::load_prototypes(from);
  const gzsl::PrototypeSet b = gzsl::load_prototypes(to);
  const gzsl::PrototypeSet swapped = gzsl::swap_prototypes(a, b, lambda_beta);
  gzsl::save_prototypes(out, swapped);
  std::cout << json{{"out", out}, {"lambda_beta", lambda_beta}, {"domain", swapped.domain()}}.dump() << "\n";
  return kOk;
}

int cmd_gradcheck(const gzsl::GradcheckConfig& cfg, const std::string& out) {
  const gzsl::GradcheckReport r = gzsl::run_gradcheck(cfg);
  const json j = r.to_json();
  if (!out.empty()) gzsl::io::save_json(fs::path(out) / "gradcheck.json", j);
  std::cout << j.dump(2) << "\n";
  if (!r.passed) {
    std::cerr << "gzsl: gradient check failed: max relative error " << r.max_rel_error
              << " exceeds " << r.tolerance << "\n";
    return kNumerical;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bias-aware generalized zero-shot learning: training, evaluation and diagnostics"};
  app.require_subcommand(1);

  std::string out;
  TrainFlags tf;
  DataFlags df;

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset directory");
  add_data_flags(synth, df);
  synth->add_option("--out", out, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train a mapper and write checkpoint + JSON-lines log");
  add_train_flags(train, tf, false);
  add_data_flags(train, df);
  train->add_option("--out", out, "Output directory")->required();

  std::string checkpoint, eval_protos;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
  eval->add_option("--prototypes", eval_protos, "Evaluate against these prototypes instead");
  eval->add_option("--config", tf.config_path, "JSON config overlay");
  eval->add_option("--temperature", tf.temperature, "Softmax temperature");
  auto* eg = eval->add_option("--gamma", tf.gamma, "Fixed calibration gamma");
  auto* es = eval->add_flag("--gamma-sweep", tf.gamma_sweep, "Select gamma by sweep and write sweep.csv");
  eg->excludes(es);
  add_data_flags(eval, df);
  eval->add_option("--out", out, "Output directory")->required();

  auto* run = app.add_subcommand("run", "Train and evaluate for each seed, then average");
  add_train_flags(run, tf, true);
  add_data_flags(run, df);
  run->add_option("--out", out, "Output directory")->required();

  std::string linkage_path;
  auto* linkage = app.add_subcommand("linkage", "Average seen/unseen prototype linkage");
  linkage->add_option("--prototypes", linkage_path, "Prototype file")->required();
  linkage->add_option("--out", out, "Directory for linkage.csv and linkage.json");

  std::string swap_from, swap_to;
  double swap_lambda = 1.0;
  auto* swap = app.add_subcommand("swap", "Regress unseen prototypes from one domain into another");
  swap->add_option("--from", swap_from, "Source-domain prototype file")->required();
  swap->add_option("--to", swap_to, "Target-domain prototype file")->required();
  swap->add_option("--lambda-beta", swap_lambda, "Ridge weight");
  swap->add_option("--out", out, "Output prototype file")->required();

  gzsl::GradcheckConfig gc;
  auto* grad = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  grad->add_option("--seed", gc.seed, "Seed for the toy network and batch");
  grad->add_option("--dropout", gc.dropout, "Dropout probability (must be 0)");
  grad->add_option("--step", gc.step, "Finite-difference step");
  grad->add_option("--tolerance", gc.tolerance, "Maximum relative error");
  grad->add_option("--temperature", gc.temperature, "Softmax temperature");
  grad->add_flag("--corrupt-gradient", gc.corrupt, "Perturb one analytic gradient entry")->group("");
  grad->add_option("--out", out, "Directory for gradcheck.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }

  try {
    if (*synth) return cmd_synth(df, out);
    if (*train) return cmd_train(tf, df, out);
    if (*eval) return cmd_eval(tf, df, checkpoint, eval_protos, out);
    if (*run) return cmd_run(tf, df, out);
    if (*linkage) return cmd_linkage(linkage_path, out);
    if (*swap) return cmd_swap(swap_from, swap_to, swap_lambda, out);
    if (*grad) return cmd_gradcheck(gc, out);
  } catch (const gzsl::IoError& e) {
    std::cerr << "gzsl: I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "gzsl: I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const gzsl::NumericalError& e) {
    std::cerr << "gzsl: numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const gzsl::ValidationError& e) {
    std::cerr << "gzsl: invalid input: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "gzsl: invalid input: " << e.what() << "\n";
    return kValidation;
  }
  return kValidation;
}
