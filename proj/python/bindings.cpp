#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dfaprint/collector.hpp"
#include "dfaprint/evaluation.hpp"
#include "dfaprint/features.hpp"
#include "dfaprint/manifest.hpp"
#include "dfaprint/model_io.hpp"
#include "dfaprint/pipeline.hpp"
#include "dfaprint/selection.hpp"
#include "dfaprint/synth.hpp"
#include "dfaprint/trace.hpp"

namespace py = pybind11;
using namespace dfaprint;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw py::value_error("expected a one-dimensional array");
  return {a.data(), a.data() + a.size()};
}

py::array_t<double> to_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

// (length, metrics) array of a trace, row per sample.
py::array_t<double> trace_values(const Trace& t) {
  py::array_t<double> out({t.length(), t.num_metrics()});
  auto w = out.mutable_unchecked<2>();
  for (std::size_t m = 0; m < t.num_metrics(); ++m) {
    const auto s = t.series(m);
    for (std::size_t i = 0; i < t.length(); ++i) w(i, m) = s[i];
  }
  return out;
}

Trace make_trace(std::vector<std::string> names, const Array& values, double sampling_interval, std::string run_id,
                 double start_time) {
  if (values.ndim() != 2) throw py::value_error("values must be a (length, metrics) array");
  const auto r = values.unchecked<2>();
  std::vector<std::vector<double>> series(static_cast<std::size_t>(r.shape(1)),
                                          std::vector<double>(static_cast<std::size_t>(r.shape(0))));
  for (py::ssize_t i = 0; i < r.shape(0); ++i)
    for (py::ssize_t m = 0; m < r.shape(1); ++m) series[static_cast<std::size_t>(m)][static_cast<std::size_t>(i)] = r(i, m);
  return Trace(MetricSchema(std::move(names)), std::move(series), sampling_interval, std::move(run_id), start_time);
}

std::vector<std::string> manifest_groups(const std::vector<ManifestEntry>& entries, std::size_t q_runs) {
  return sample_ids(entries, q_runs);
}

}  // namespace

PYBIND11_MODULE(_dfaprint, m) {
  m.doc() = "Behavioural fingerprints from multivariate resource traces";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  py::class_<DfaConfig>(m, "DfaConfig")
      .def(py::init([](std::size_t min_box, double max_box_fraction, std::size_t boxes_per_decade,
                       std::size_t detrend_order) {
             DfaConfig c{min_box, max_box_fraction, boxes_per_decade, detrend_order};
             c.validate();
             return c;
           }),
           py::arg("min_box") = 4, py::arg("max_box_fraction") = 0.25, py::arg("boxes_per_decade") = 8,
           py::arg("detrend_order") = 1)
      .def_readwrite("min_box", &DfaConfig::min_box)
      .def_readwrite("max_box_fraction", &DfaConfig::max_box_fraction)
      .def_readwrite("boxes_per_decade", &DfaConfig::boxes_per_decade)
      .def_readwrite("detrend_order", &DfaConfig::detrend_order);

  py::class_<DfaResult>(m, "DfaResult")
      .def_readonly("alpha", &DfaResult::alpha)
      .def_readonly("degenerate", &DfaResult::degenerate)
      .def_readonly("box_sizes", &DfaResult::box_sizes)
      .def_readonly("fluctuations", &DfaResult::fluctuations);

  m.def("dfa", [](const Array& x, const DfaConfig& c) { return dfa(to_vector(x), c); }, py::arg("series"),
        py::arg("config") = DfaConfig{});
  m.def("dfa_exponent", [](const Array& x, const DfaConfig& c) { return dfa_exponent(to_vector(x), c); },
        py::arg("series"), py::arg("config") = DfaConfig{});
  m.def("dfa_box_sizes", &dfa_box_sizes, py::arg("length"), py::arg("config") = DfaConfig{});
  m.def("pearson", [](const Array& x, const Array& y) { return pearson(to_vector(x), to_vector(y)).r; }, py::arg("x"),
        py::arg("y"));

  py::class_<Trace>(m, "Trace")
      .def(py::init(&make_trace), py::arg("names"), py::arg("values"), py::arg("sampling_interval") = 0.25,
           py::arg("run_id") = "", py::arg("start_time") = 0.0)
      .def_property_readonly("names", [](const Trace& t) { return t.schema().names(); })
      .def_property_readonly("values", &trace_values)
      .def_property_readonly("length", &Trace::length)
      .def_property_readonly("num_metrics", &Trace::num_metrics)
      .def_property_readonly("sampling_interval", &Trace::sampling_interval)
      .def_property_readonly("start_time", &Trace::start_time)
      .def_property_readonly("run_id", &Trace::run_id)
      .def("series", [](const Trace& t, std::size_t i) {
        const auto s = t.series(i);
        return to_array({s.begin(), s.end()});
      })
      .def("__eq__", [](const Trace& a, const Trace& b) { return a == b; })
      .def("__repr__", [](const Trace& t) {
        return "<Trace " + std::to_string(t.num_metrics()) + " metrics x " + std::to_string(t.length()) + " samples>";
      });

  m.def("load_trace", [](const std::string& path) { return load_trace(path); }, py::arg("path"));
  m.def("parse_trace", [](const std::string& text) { return parse_trace(text); }, py::arg("text"));
  m.def("write_trace", &write_trace, py::arg("trace"));

  py::class_<FeatureVector>(m, "FeatureVector")
      .def_readonly("names", &FeatureVector::names)
      .def_property_readonly("values", [](const FeatureVector& f) { return to_array(f.values); })
      .def_readonly("degenerate", &FeatureVector::degenerate)
      .def("__len__", &FeatureVector::size)
      .def("to_csv", &write_fingerprint_csv);

  m.def("fingerprint", &fingerprint, py::arg("trace"), py::arg("config") = DfaConfig{});
  m.def("fingerprint_size", &fingerprint_size, py::arg("num_metrics"));

  m.def("mutual_information",
        [](const Array& f, const std::vector<std::string>& labels, int bins) {
          return mutual_information(to_vector(f), std::span<const FamilyLabel>(labels), bins);
        },
        py::arg("feature"), py::arg("labels"), py::arg("bins") = 10);

  py::class_<FamilySpec>(m, "FamilySpec")
      .def_readonly("name", &FamilySpec::name)
      .def_readonly("metric_names", &FamilySpec::metric_names)
      .def_readonly("alpha_targets", &FamilySpec::alpha_targets)
      .def_readonly("correlation", &FamilySpec::correlation)
      .def_readonly("sampling_interval", &FamilySpec::sampling_interval)
      .def("to_json", &family_spec_to_json);
  m.def("load_family_spec", &load_family_spec, py::arg("path"));
  m.def("parse_family_spec", [](const std::string& text) { return parse_family_spec(text); }, py::arg("text"));
  m.def("generate_synthetic_trace", &generate_synthetic_trace, py::arg("spec"), py::arg("seed"), py::arg("length"));
  m.def("power_law_noise", [](double beta, std::size_t n, std::uint64_t seed) { return to_array(power_law_noise(beta, n, seed)); },
        py::arg("beta"), py::arg("length"), py::arg("seed"));

  py::class_<PipelineConfig>(m, "PipelineConfig")
      .def(py::init<>())
      .def_readwrite("bins", &PipelineConfig::bins)
      .def_readwrite("q_grid", &PipelineConfig::q_grid)
      .def_readwrite("variance_fraction", &PipelineConfig::variance_fraction)
      .def_readwrite("c_grid", &PipelineConfig::c_grid)
      .def_readwrite("gamma_scales", &PipelineConfig::gamma_scales)
      .def_readwrite("folds", &PipelineConfig::folds)
      .def_readwrite("seed", &PipelineConfig::seed);

  py::class_<Prediction>(m, "Prediction")
      .def_readonly("label", &Prediction::label)
      .def_readonly("class_index", &Prediction::class_index)
      .def_readonly("votes", &Prediction::votes)
      .def_readonly("margins", &Prediction::margins);

  py::class_<ModelFile>(m, "Model")
      .def_property_readonly("classes", [](const ModelFile& f) { return f.pipeline.svm.classes; })
      .def_property_readonly("names", [](const ModelFile& f) { return f.schema.names(); })
      .def_property_readonly("q", [](const ModelFile& f) { return f.pipeline.chosen().q; })
      .def_property_readonly("c", [](const ModelFile& f) { return f.pipeline.chosen().params.c; })
      .def_property_readonly("gamma", [](const ModelFile& f) { return f.pipeline.chosen().params.gamma; })
      .def_property_readonly("cv_accuracy", [](const ModelFile& f) { return f.pipeline.chosen().cv_accuracy; })
      .def("classify", &classify_trace, py::arg("trace"))
      .def("classify_fingerprint",
           [](const ModelFile& f, const Array& v) { return f.pipeline.classify(to_vector(v)); }, py::arg("features"))
      .def("save", [](const ModelFile& f, const std::string& path) { save_model(f, path); }, py::arg("path"))
      .def("to_json", &model_to_json);
  m.def("load_model", &load_model, py::arg("path"));
  m.def("model_from_json", [](const std::string& text) { return model_from_json(text); }, py::arg("text"));

  m.def("train",
        [](const std::vector<Trace>& traces, const std::vector<std::string>& families,
           std::optional<std::vector<std::string>> groups, const PipelineConfig& config, const DfaConfig& dfa) {
          if (families.size() != traces.size()) throw py::value_error("one family label per trace is required");
          std::vector<LabeledTrace> labeled;
          for (std::size_t i = 0; i < traces.size(); ++i) labeled.push_back({traces[i], families[i]});
          std::vector<std::string> ids;
          if (groups) {
            ids = *groups;
          } else {
            for (std::size_t i = 0; i < traces.size(); ++i) ids.push_back(std::to_string(i));
          }
          py::gil_scoped_release release;
          return train_model(labeled, ids, config, dfa);
        },
        py::arg("traces"), py::arg("families"), py::arg("groups") = py::none(), py::arg("config") = PipelineConfig{},
        py::arg("dfa") = DfaConfig{});

  m.def("train_manifest",
        [](const std::string& manifest, std::size_t q_runs, const PipelineConfig& config, const DfaConfig& dfa) {
          py::gil_scoped_release release;
          const auto entries = load_manifest(manifest);
          return train_model(load_labeled_traces(entries), manifest_groups(entries, q_runs), config, dfa);
        },
        py::arg("manifest"), py::arg("q_runs") = 1, py::arg("config") = PipelineConfig{}, py::arg("dfa") = DfaConfig{});

  // Returns the report as JSON text; the Python wrapper decodes it.
  m.def("evaluate_manifest",
        [](const std::string& manifest, std::size_t repetitions, double train_fraction, std::size_t q_runs,
           const PipelineConfig& config, const DfaConfig& dfa) {
          py::gil_scoped_release release;
          dfa.validate();
          const auto entries = load_manifest(manifest);
          const auto traces = load_labeled_traces(entries);
          const auto samples = build_samples(traces, manifest_groups(entries, q_runs), dfa);
          HoldoutConfig h;
          h.repetitions = repetitions;
          h.train_fraction = train_fraction;
          h.seed = config.seed;
          h.pipeline = config;
          return report_json(repeated_holdout(samples, h));
        },
        py::arg("manifest"), py::arg("repetitions") = 20, py::arg("train_fraction") = 0.7, py::arg("q_runs") = 2,
        py::arg("config") = PipelineConfig{}, py::arg("dfa") = DfaConfig{});

  m.def("default_metric_names", [] { return default_schema().names(); });

  // Samples a proc-style tree with the built-in rules and returns the
  // (samples, metrics) matrix.
  m.def("sample_proc",
        [](const std::filesystem::path& root, std::size_t samples, const std::string& pid, const std::string& iface) {
          ProcSourceSpec spec;
          spec.root = root;
          spec.pid = pid;
          spec.rules = default_linux_rules(iface);
          ProcSampler sampler(spec);
          py::array_t<double> out({samples, spec.rules.size()});
          auto w = out.mutable_unchecked<2>();
          for (std::size_t i = 0; i < samples; ++i) {
            const auto row = sampler.sample_once();
            for (std::size_t j = 0; j < row.size(); ++j) w(i, j) = row[j];
          }
          return out;
        },
        py::arg("root") = "/proc", py::arg("samples") = 2, py::arg("pid") = "self", py::arg("iface") = "eth0");

  m.def("collect",
        [](const std::string& out, double interval, std::size_t samples, const std::filesystem::path& root,
           const std::string& pid, const std::string& iface) {
          ProcSourceSpec spec;
          spec.root = root;
          spec.pid = pid;
          spec.rules = default_linux_rules(iface);
          SamplerConfig cfg;
          cfg.interval = interval;
          cfg.max_samples = samples;
          CollectResult r;
          {
            py::gil_scoped_release release;
            r = collect(spec, cfg, out);
          }
          py::dict d;
          d["trace_path"] = r.trace_path.string();
          d["metadata_path"] = r.metadata_path.string();
          d["samples"] = r.samples;
          d["max_jitter"] = r.max_jitter;
          d["error"] = r.error ? py::object(py::str(*r.error)) : py::object(py::none());
          return d;
        },
        py::arg("out"), py::arg("interval") = 0.25, py::arg("samples") = 40, py::arg("root") = "/proc",
        py::arg("pid") = "self", py::arg("iface") = "eth0");
}
