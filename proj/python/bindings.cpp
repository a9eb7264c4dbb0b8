#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "grip/config.hpp"
#include "grip/dataset.hpp"
#include "grip/losses.hpp"
#include "grip/metrics.hpp"
#include "grip/model.hpp"
#include "grip/purify.hpp"
#include "grip/softlabel.hpp"
#include "grip/trainer.hpp"
#include "grip/version.hpp"

namespace py = pybind11;
using namespace grip;

namespace {

Matrix dataset_features(const Dataset& d) {
  Matrix x(d.size(), d.feature_dim);
  for (int i = 0; i < d.size(); ++i) x.row(i) = d.samples[i].features.transpose();
  return x;
}

std::vector<int> dataset_given(const Dataset& d) {
  std::vector<int> v(d.size());
  for (int i = 0; i < d.size(); ++i) v[i] = d.samples[i].given_label;
  return v;
}

std::vector<int> dataset_true(const Dataset& d) {
  std::vector<int> v(d.size());
  for (int i = 0; i < d.size(); ++i) v[i] = d.samples[i].true_label;
  return v;
}

Dataset py_inject_noise(const Dataset& clean, const std::string& kind, double ratio,
                        std::uint64_t seed) {
  NoiseSpec spec;
  spec.kind = noise_kind_from_string(kind);
  spec.ratio = ratio;
  spec.seed = seed;
  return inject_noise(clean, spec);
}

py::tuple py_train(const std::string& config_json, const Dataset& train_set,
                   const Dataset& test_set, std::optional<std::string> run_dir) {
  const TrainConfig config = config_from_json(config_json);
  TrainIO io;
  if (run_dir) io.run_dir = *run_dir;
  const TrainResult result = train(config, train_set, test_set, io);

  std::ostringstream jsonl;
  for (const EpochLog& log : result.logs) jsonl << to_jsonl_line(log) << "\n";
  py::object final_aca = py::none();
  for (auto it = result.logs.rbegin(); it != result.logs.rend(); ++it) {
    if (!std::isnan(it->test_aca)) {
      final_aca = py::float_(it->test_aca);
      break;
    }
  }
  return py::make_tuple(final_aca, jsonl.str(), result.soft_labels.S);
}

}  // namespace

PYBIND11_MODULE(_grip, m) {
  m.doc() = "GRIP core operations";
  m.attr("__version__") = kVersion;

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("num_classes", &Dataset::num_classes)
      .def_readonly("feature_dim", &Dataset::feature_dim)
      .def("__len__", &Dataset::size)
      .def("has_ground_truth", &Dataset::has_ground_truth)
      .def("features", &dataset_features)
      .def("given_labels", &dataset_given)
      .def("true_labels", &dataset_true);

  m.def("generate_blobs", &generate_blobs, py::arg("num_classes"),
        py::arg("per_class"), py::arg("dim"), py::arg("separation"), py::arg("seed"));
  m.def("inject_noise", &py_inject_noise, py::arg("clean"), py::arg("kind"),
        py::arg("ratio"), py::arg("seed"));
  m.def("make_transition_matrix",
        [](const std::string& kind, double ratio, int num_classes) {
          return make_transition_matrix(noise_kind_from_string(kind), ratio,
                                        num_classes);
        },
        py::arg("kind"), py::arg("ratio"), py::arg("num_classes"));
  m.def("split",
        [](const Dataset& d, double test_fraction, std::uint64_t seed) {
          auto [train_set, test_set] = split(d, test_fraction, seed);
          return py::make_tuple(std::move(train_set), std::move(test_set));
        },
        py::arg("data"), py::arg("test_fraction"), py::arg("seed"));
  m.def("load_csv",
        [](const std::string& path) { return load_csv(path); }, py::arg("path"));
  m.def("save_csv",
        [](const Dataset& d, const std::string& path) { save_csv(d, path); },
        py::arg("data"), py::arg("path"));

  m.def("softmax_rows", &softmax_rows, py::arg("logits"));
  m.def("js_divergence",
        [](const ProbRow& p, const ProbRow& q) { return js_divergence(p, q); },
        py::arg("p"), py::arg("q"));
  m.def("compute_threshold", &compute_threshold, py::arg("d_values"),
        py::arg("alpha"));
  m.def("mean_std",
        [](const std::vector<double>& v) {
          auto [mean, sd] = mean_std(v);
          return py::make_tuple(mean, sd);
        },
        py::arg("values"));

  m.def("ce_loss",
        [](const Matrix& probs, const std::vector<int>& labels) {
          const LossResult r = ce_loss(probs, labels);
          return py::make_tuple(r.value, r.dlogits);
        },
        py::arg("probs"), py::arg("labels"));
  m.def("soft_loss",
        [](const Matrix& probs, const Matrix& targets) {
          const LossResult r = soft_loss(probs, targets);
          return py::make_tuple(r.value, r.dlogits);
        },
        py::arg("probs"), py::arg("soft_targets"));
  m.def("me_loss",
        [](const Matrix& probs) {
          const LossResult r = me_loss(probs);
          return py::make_tuple(r.value, r.dlogits);
        },
        py::arg("probs"));
  m.def("gr_loss",
        [](const Matrix& probs, const std::vector<int>& labels, const Matrix& targets,
           double w, double gamma) {
          const GrResult r = gr_loss(probs, labels, targets, {w, gamma});
          py::dict out;
          out["ce"] = r.parts.ce;
          out["soft"] = r.parts.soft;
          out["me"] = r.parts.me;
          out["total"] = r.parts.total;
          out["dlogits"] = r.dlogits;
          return out;
        },
        py::arg("probs"), py::arg("labels"), py::arg("soft_targets"), py::arg("w"),
        py::arg("gamma"));

  m.def("preset_config_json",
        [](const std::string& name) { return config_to_json(preset_config(name)); },
        py::arg("name"));
  m.def("train", &py_train, py::arg("config_json"), py::arg("train_set"),
        py::arg("test_set"), py::arg("run_dir") = py::none(),
        "Returns (final_test_aca or None, epochs jsonl text, soft-label matrix)");
}
