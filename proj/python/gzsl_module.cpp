#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gzsl/data.hpp"
#include "gzsl/error.hpp"
#include "gzsl/eval.hpp"
#include "gzsl/gradcheck.hpp"
#include "gzsl/objectives.hpp"
#include "gzsl/prototypes.hpp"
#include "gzsl/train.hpp"

namespace py = pybind11;
using namespace gzsl;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-D array");
  const auto r = static_cast<std::size_t>(a.shape(0));
  const auto c = static_cast<std::size_t>(a.shape(1));
  return Matrix(r, c, std::vector<double>(a.data(), a.data() + r * c));
}

Array to_array(const Matrix& m) {
  Array a({m.rows(), m.cols()});
  std::copy(m.values().begin(), m.values().end(), a.mutable_data());
  return a;
}

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_py(const py::object& o) {
  if (o.is_none()) return nlohmann::json::object();
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

// Classes 0..C-1; the first num_seen columns are seen.
PrototypeSet make_prototypes(const Array& prototypes, std::size_t num_seen) {
  Matrix m = to_matrix(prototypes);
  if (num_seen > m.cols()) throw ArgumentError("num_seen exceeds the number of prototypes");
  std::vector<std::int64_t> ids(m.cols());
  std::vector<bool> seen(m.cols());
  for (std::size_t c = 0; c < m.cols(); ++c) {
    ids[c] = static_cast<std::int64_t>(c);
    seen[c] = c < num_seen;
  }
  return PrototypeSet(std::move(m), ids, seen);
}

Universe parse_universe(const std::string& u) {
  if (u == "joint") return Universe::Joint;
  if (u == "seen") return Universe::SeenOnly;
  throw ArgumentError("universe must be 'joint' or 'seen'");
}

SynthConfig synth_config(const py::object& cfg) { return from_py(cfg).get<SynthConfig>(); }

RunConfig run_config(const py::object& cfg) {
  RunConfig c;
  c.merge_json(from_py(cfg));
  return c;
}

}  // namespace

PYBIND11_MODULE(_gzsl, m) {
  m.doc() = "Bias-aware generalized zero-shot learning core";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def(
      "class_probabilities",
      [](const Array& embeddings, const Array& prototypes, std::size_t num_seen, double temperature,
         const std::string& universe) {
        const PrototypeSet ps = make_prototypes(prototypes, num_seen);
        return to_array(class_probabilities(to_matrix(embeddings), ps, {temperature, parse_universe(universe)}));
      },
      py::arg("embeddings"), py::arg("prototypes"), py::arg("num_seen"), py::arg("temperature") = 0.05,
      py::arg("universe") = "joint",
      "Cosine softmax of embeddings (B x A) over prototype columns (A x C).");

  m.def(
      "directional_entropy",
      [](const std::vector<double>& probs, const std::vector<std::size_t>& subset) {
        return directional_entropy(probs, subset);
      },
      py::arg("probs"), py::arg("subset"));

  m.def(
      "margin_regularizers",
      [](double h_s_real, double h_s_gen, double h_u_real, double h_u_gen, double margin) {
        const MarginTerms t = margin_regularizers(h_s_real, h_s_gen, h_u_real, h_u_gen, margin);
        return py::make_tuple(t.r_s, t.r_u);
      },
      py::arg("h_s_real"), py::arg("h_s_gen"), py::arg("h_u_real"), py::arg("h_u_gen"), py::arg("margin") = 0.2,
      "Returns (R_s, R_u).");

  m.def("harmonic_mean", &harmonic_mean, py::arg("s"), py::arg("u"));

  m.def(
      "per_class_accuracy",
      [](const std::vector<std::size_t>& predictions, const std::vector<std::size_t>& labels,
         const std::vector<std::size_t>& classes) { return per_class_accuracy(predictions, labels, classes); },
      py::arg("predictions"), py::arg("labels"), py::arg("classes"));

  m.def(
      "calibrated_predict",
      [](const std::vector<double>& scores, const std::vector<bool>& seen_mask, double gamma) {
        return calibrated_predict(scores, seen_mask, gamma);
      },
      py::arg("scores"), py::arg("seen_mask"), py::arg("gamma"));

  m.def(
      "ridge_solve",
      [](const Array& phi_a, const Array& phi_b, double lambda) {
        return to_array(ridge_solve(to_matrix(phi_a), to_matrix(phi_b), lambda));
      },
      py::arg("phi_a"), py::arg("phi_b"), py::arg("lambda_beta"),
      "beta = phi_b phi_a^T (phi_a phi_a^T + lambda I)^-1.");

  m.def(
      "swap_unseen",
      [](const Array& a_seen, const Array& b_seen, const Array& a_unseen, double lambda) {
        return to_array(swap_unseen(to_matrix(a_seen), to_matrix(b_seen), to_matrix(a_unseen), lambda));
      },
      py::arg("a_seen"), py::arg("b_seen"), py::arg("a_unseen"), py::arg("lambda_beta") = 1.0);

  m.def(
      "average_linkage",
      [](const Array& seen, const Array& unseen) { return average_linkage(to_matrix(seen), to_matrix(unseen)); },
      py::arg("seen"), py::arg("unseen"));

  m.def(
      "synth_generate",
      [](const py::object& cfg) {
        const SynthData d = synth_generate(synth_config(cfg));
        std::vector<std::int64_t> split;
        for (Split s : d.dataset.split()) split.push_back(static_cast<std::int64_t>(s));
        py::dict out;
        out["features"] = to_array(d.dataset.features());
        out["labels"] = d.dataset.labels();
        out["split"] = split;
        out["prototypes"] = to_array(d.prototypes.matrix());
        out["num_seen"] = d.prototypes.seen_columns().size();
        out["generated_features"] = to_array(d.generated.features);
        out["generated_labels"] = d.generated.labels;
        return out;
      },
      py::arg("config") = py::none(), "Synthetic task as numpy arrays; classes 0..num_seen-1 are seen.");

  m.def(
      "train_and_evaluate",
      [](const py::object& run_cfg, const py::object& synth_cfg, std::uint64_t seed) {
        const RunConfig c = run_config(run_cfg);
        const SynthData d = synth_generate(synth_config(synth_cfg));
        RunOutcome o;
        {
          py::gil_scoped_release release;
          o = train_and_evaluate(c, d.dataset, &d.generated, seed);
        }
        nlohmann::json j = o.report.to_json();
        j["initial_loss"] = o.training.initial_loss;
        j["final_loss"] = o.training.log.empty() ? o.training.initial_loss : o.training.log.back().loss;
        return to_py(j);
      },
      py::arg("config") = py::none(), py::arg("synth") = py::none(), py::arg("seed") = 0,
      "Train on a synthetic task and return the test-split report as a dict.");

  m.def(
      "gradcheck",
      [](std::uint64_t seed, bool corrupt) {
        GradcheckConfig c;
        c.seed = seed;
        c.corrupt = corrupt;
        return to_py(run_gradcheck(c).to_json());
      },
      py::arg("seed") = 0, py::arg("corrupt") = false);
}
