#include "gzsl/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "gzsl/error.hpp"
#include "gzsl/model.hpp"
#include "gzsl/objectives.hpp"

namespace gzsl {

namespace {

struct Problem {
  PrototypeSet prototypes;
  Matrix x_real;
  Matrix x_gen;
  std::vector<std::size_t> real_labels;
  std::vector<std::size_t> gen_labels;
};

Problem make_problem(const GradcheckConfig& cfg, Rng& rng) {
  const std::size_t classes = cfg.num_seen + cfg.num_unseen;
  Matrix phi(cfg.embed_dim, classes);
  for (double& v : phi.values()) v = rng.normal();
  std::vector<std::int64_t> ids(classes);
  std::vector<bool> seen(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    ids[c] = static_cast<std::int64_t>(c);
    seen[c] = c < cfg.num_seen;
  }
  Problem p{PrototypeSet(phi, ids, seen, "toy"), Matrix(cfg.batch, cfg.input_dim),
            Matrix(cfg.batch, cfg.input_dim), {}, {}};
  for (double& v : p.x_real.values()) v = rng.normal();
  for (double& v : p.x_gen.values()) v = rng.normal();
  for (std::size_t i = 0; i < cfg.batch; ++i) {
    p.real_labels.push_back(i % cfg.num_seen);
    p.gen_labels.push_back(cfg.num_seen + i % cfg.num_unseen);
  }
  return p;
}

// Loss value and analytic gradient of one objective at params.
using Objective = std::function<double(const MapperParams&, MapperGrads*)>;

GradcheckEntry check_tensor(const std::string& objective_name, const Objective& objective,
                            MapperParams params, const MapperGrads& analytic, std::size_t t,
                            double h) {
  GradcheckEntry e;
  e.objective = objective_name;
  e.tensor = std::string(MapperParams::kNames[t]);
  Matrix& target = *params.tensors()[t];
  const Matrix& grad = *analytic.tensors()[t];
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double orig = target.values()[i];
    target.values()[i] = orig + h;
    const double plus = objective(params, nullptr);
    target.values()[i] = orig - h;
    const double minus = objective(params, nullptr);
    target.values()[i] = orig;
    const double numeric = (plus - minus) / (2.0 * h);
    const double err = relative_error(grad.values()[i], numeric);
    if (err > e.max_rel_error || i == 0) {
      e.max_rel_error = std::max(err, e.max_rel_error);
      e.worst_index = i;
      e.analytic = grad.values()[i];
      e.numeric = numeric;
    }
  }
  return e;
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradcheckFloor});
  return std::abs(analytic - numeric) / denom;
}

nlohmann::json GradcheckReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : entries) {
    rows.push_back({{"objective", e.objective},
                    {"tensor", e.tensor},
                    {"worst_index", e.worst_index},
                    {"analytic", e.analytic},
                    {"numeric", e.numeric},
                    {"max_rel_error", e.max_rel_error}});
  }
  return {{"entries", rows}, {"max_rel_error", max_rel_error}, {"tolerance", tolerance}, {"passed", passed}};
}

GradcheckReport run_gradcheck(const GradcheckConfig& cfg) {
  if (cfg.dropout != 0.0) {
    throw ArgumentError(
        "gradcheck: dropout must be 0; random masks make the loss a different function on every "
        "evaluation, so finite differences are meaningless");
  }
  if (cfg.batch < 1 || cfg.num_seen < 1 || cfg.num_unseen < 1) {
    throw ArgumentError("gradcheck: batch and class counts must be >= 1");
  }
  Rng rng(cfg.seed);
  Rng data_rng = rng.fork(1);
  Rng init_rng = rng.fork(2);
  const Problem problem = make_problem(cfg, data_rng);
  ModelConfig mc{cfg.input_dim, cfg.embed_dim, cfg.hidden1, cfg.hidden2, 0.0, 1};
  const MapperParams params = init_params(mc, init_rng);

  const ProbModelConfig seen_cfg{cfg.temperature, Universe::SeenOnly};
  const ProbModelConfig joint_cfg{cfg.temperature, Universe::Joint};
  const RegConfig reg{cfg.margin, cfg.lambda_ent, true, true};

  const Objective loss_s = [&](const MapperParams& p, MapperGrads* grads) {
    Rng unused(0);
    auto fwd = forward(p, problem.x_real, Mode::Train, 0.0, unused);
    const auto r = loss_seen(fwd.embeddings, problem.real_labels, problem.prototypes, seen_cfg);
    if (grads) *grads = backward(fwd.trace, r.grad_real, p);
    return r.loss;
  };
  const Objective loss_f = [&](const MapperParams& p, MapperGrads* grads) {
    Rng unused(0);
    auto fr = forward(p, problem.x_real, Mode::Train, 0.0, unused);
    auto fg = forward(p, problem.x_gen, Mode::Train, 0.0, unused);
    const auto r = loss_final(fr.embeddings, problem.real_labels, fg.embeddings, problem.gen_labels,
                              problem.prototypes, joint_cfg, reg);
    if (grads) {
      *grads = backward(fr.trace, r.grad_real, p);
      const MapperGrads g2 = backward(fg.trace, r.grad_gen, p);
      auto a = grads->tensors();
      auto b = g2.tensors();
      for (std::size_t t = 0; t < a.size(); ++t) *a[t] += *b[t];
    }
    return r.loss;
  };

  GradcheckReport report;
  report.tolerance = cfg.tolerance;
  const std::pair<const char*, const Objective*> objectives[] = {{"L_s", &loss_s}, {"L_f", &loss_f}};
  for (const auto& [name, objective] : objectives) {
    MapperGrads analytic;
    (*objective)(params, &analytic);
    if (cfg.corrupt) {
      double& v = analytic.w2.values()[0];
      v += 1e-2 * (1.0 + std::abs(v));
    }
    for (std::size_t t = 0; t < MapperParams::kNames.size(); ++t) {
      report.entries.push_back(check_tensor(name, *objective, params, analytic, t, cfg.step));
      report.max_rel_error = std::max(report.max_rel_error, report.entries.back().max_rel_error);
    }
  }
  report.passed = report.max_rel_error < cfg.tolerance;
  return report;
}

}  // namespace gzsl
