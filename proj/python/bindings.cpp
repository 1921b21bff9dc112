#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "qfsl/cli.hpp"
#include "qfsl/error.hpp"
#include "qfsl/eval.hpp"
#include "qfsl/gradcheck.hpp"

namespace py = pybind11;
using namespace qfsl;

namespace {

py::array_t<double> to_array(const Matrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["setting"] = to_string(r.setting);
  d["mca_t"] = r.mca_t;
  d["mca_overall"] = r.mca_overall;
  d["bias_rate"] = r.bias_rate;
  d["n_test"] = r.n_test;
  d["mca_s"] = r.mca_s ? py::cast(*r.mca_s) : py::none();
  d["h"] = r.h ? py::cast(*r.h) : py::none();
  d["per_class_acc"] = r.per_class_acc;
  return d;
}

Setting parse_setting(const std::string& s) {
  if (s == "conventional") return Setting::Conventional;
  if (s == "generalized") return Setting::Generalized;
  throw ConfigError("setting must be 'conventional' or 'generalized'");
}

}  // namespace

PYBIND11_MODULE(_qfsl, m) {
  m.doc() = "QFSL core bindings";

  auto base = py::register_exception<Error>(m, "QfslError");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  py::class_<SynthSpec>(m, "SynthSpec")
      .def(py::init<>())
      .def_readwrite("num_source", &SynthSpec::num_source)
      .def_readwrite("num_target", &SynthSpec::num_target)
      .def_readwrite("attr_dim", &SynthSpec::attr_dim)
      .def_readwrite("feature_dim", &SynthSpec::feature_dim)
      .def_readwrite("per_class", &SynthSpec::per_class)
      .def_readwrite("noise_sigma", &SynthSpec::noise_sigma)
      .def_readwrite("mixing_seed", &SynthSpec::mixing_seed)
      .def_readwrite("data_seed", &SynthSpec::data_seed);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("iterations", &TrainConfig::iterations)
      .def_readwrite("lambda_", &TrainConfig::lambda)
      .def_readwrite("gamma", &TrainConfig::gamma)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("visual_trainable", &TrainConfig::visual_trainable)
      .def_readwrite("regularize_biases", &TrainConfig::regularize_biases)
      .def_readwrite("momentum", &TrainConfig::momentum)
      .def_readwrite("visual_layer", &TrainConfig::visual_layer)
      .def_property(
          "mode", [](const TrainConfig& c) { return c.mode == TrainMode::Qfsl ? "qfsl" : "inductive"; },
          [](TrainConfig& c, const std::string& v) {
            if (v == "qfsl") c.mode = TrainMode::Qfsl;
            else if (v == "inductive") c.mode = TrainMode::Inductive;
            else throw ConfigError("mode must be 'qfsl' or 'inductive'");
          });

  py::class_<ZslData>(m, "Dataset")
      .def_property_readonly("class_names", [](const ZslData& d) { return d.attributes.class_names(); })
      .def_property_readonly("num_source", [](const ZslData& d) { return d.attributes.num_source(); })
      .def_property_readonly("num_target", [](const ZslData& d) { return d.attributes.num_target(); })
      .def_property_readonly("feature_dim", [](const ZslData& d) { return d.dataset.feature_dim(); })
      .def_property_readonly("attributes", [](const ZslData& d) { return to_array(d.attributes.raw()); })
      .def("count",
           [](const ZslData& d, const std::string& role) {
             const auto r = parse_role(role);
             if (!r) throw ConfigError("unknown role '" + role + "'");
             return d.dataset.count(*r);
           })
      .def("__len__", [](const ZslData& d) { return d.dataset.instances().size(); });

  py::class_<QfslModel>(m, "Model")
      .def_property_readonly("num_source", &QfslModel::num_source)
      .def_property_readonly("num_classes", &QfslModel::num_classes)
      .def_property_readonly("scoring", [](const QfslModel& q) { return to_array(q.scoring); })
      .def("scores",
           [](const QfslModel& q, const std::vector<double>& x) { return forward_scores(q, x).scores; })
      .def(
          "predict",
          [](const QfslModel& q, const std::vector<double>& x, const std::string& setting) {
            return predict(q, x,
                           parse_setting(setting) == Setting::Conventional ? SearchSpace::TargetOnly : SearchSpace::All);
          },
          py::arg("features"), py::arg("setting") = "generalized")
      .def("save", [](const QfslModel& q, const std::string& path) { save_model(path, q); })
      .def("checksum", [](const QfslModel& q) { return model_checksum(q); })
      .def("to_text", [](const QfslModel& q) {
        std::ostringstream out;
        write_model(out, q);
        return out.str();
      });

  m.def("generate_synthetic", &generate_synthetic, py::arg("spec") = SynthSpec{});
  m.def("load_dataset", &load_dataset_dir, py::arg("directory"));
  m.def("save_dataset", [](const ZslData& d, const std::string& dir) { save_dataset_dir(dir, d); });
  m.def("load_model", &load_model, py::arg("path"));

  m.def(
      "train",
      [](const ZslData& d, const TrainConfig& cfg) {
        py::gil_scoped_release release;
        return train(d.dataset, d.attributes, cfg);
      },
      py::arg("data"), py::arg("config") = TrainConfig{});
  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("model", &TrainResult::model)
      .def_property_readonly("losses", [](const TrainResult& r) {
        std::vector<double> v;
        for (const auto& e : r.log.entries) v.push_back(e.total);
        return v;
      });

  m.def(
      "evaluate",
      [](const QfslModel& q, const ZslData& d, const std::string& setting) {
        const Setting s = parse_setting(setting);
        return report_dict(evaluate(q, standard_test_set(d.dataset, s), s));
      },
      py::arg("model"), py::arg("data"), py::arg("setting") = "generalized");

  m.def("harmonic", &harmonic, py::arg("mca_s"), py::arg("mca_t"));
  m.def("mca", [](const std::vector<double>& accs) { return mca(accs); }, py::arg("per_class_acc"));

  m.def(
      "gradcheck",
      [](std::uint64_t seed, double tolerance) {
        GradcheckOptions opt;
        opt.seed = seed;
        opt.tolerance = tolerance;
        const auto r = run_gradcheck(opt);
        return py::make_tuple(r.passed, r.max_relative_error);
      },
      py::arg("seed") = 1, py::arg("tolerance") = 1e-5);

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  });
}
