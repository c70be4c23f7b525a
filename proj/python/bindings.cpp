// Python bindings. Structured values cross the boundary as JSON text; the
// package wrapper decodes them.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "evlog/error.hpp"
#include "evlog/matching.hpp"
#include "evlog/pipeline.hpp"

namespace py = pybind11;
using namespace evlog;

namespace {

using json = nlohmann::json;

std::string events_json(const std::vector<BehaviorEvent>& events) {
  auto arr = json::array();
  for (const auto& e : events) arr.push_back(event_to_json(e));
  return arr.dump();
}

std::vector<BehaviorEvent> events_from(const std::string& text, const Catalog& catalog) {
  std::vector<BehaviorEvent> out;
  for (const auto& j : json::parse(text)) out.push_back(event_from_json(j, catalog));
  return out;
}

struct PyWorkload {
  WorkloadParams params;
  Workload workload;
};

struct PyPipeline {
  PipelineState state;
  bool vhan = true;
};

std::string sizes_json(const SizeReport& s) {
  return json{{"data_bytes", s.data_bytes},
              {"index_address_bytes", s.index_address_bytes},
              {"metadata_bytes", s.metadata_bytes},
              {"total_bytes", s.total_bytes}}
      .dump();
}

}  // namespace

PYBIND11_MODULE(_evlog, m) {
  m.doc() = "Behavior-log storage engine and layout optimizer";

  static py::exception<Error> error(m, "EvlogError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      error(e.what());
    }
  });

  m.def("default_params", [] { return WorkloadParams{}.to_json().dump(); });

  py::class_<PyWorkload>(m, "Workload")
      .def(py::init([](const std::string& params_json) {
             auto p = WorkloadParams::from_json(json::parse(params_json));
             return PyWorkload{p, generate(p)};
           }),
           py::arg("params_json"))
      .def_property_readonly("params_json", [](const PyWorkload& w) { return w.params.to_json().dump(); })
      .def_property_readonly("catalog_json", [](const PyWorkload& w) { return w.workload.catalog.to_json().dump(); })
      .def_property_readonly("event_count", [](const PyWorkload& w) { return w.workload.events.size(); })
      .def_property_readonly("days", [](const PyWorkload& w) { return w.workload.day_end.size(); })
      .def("day_json", [](const PyWorkload& w, std::size_t d) { return events_json(w.workload.day(d)); })
      .def("events_json", [](const PyWorkload& w) { return events_json(w.workload.events); })
      .def("day_start_ms", [](const PyWorkload& w, std::size_t d) { return w.workload.day_start_ms(d, w.params); })
      .def("verification_times",
           [](const PyWorkload& w, std::size_t per_day) {
             return verification_times(w.params, w.workload.day_end.size(), per_day);
           },
           py::arg("per_day") = 3);

  py::class_<PyPipeline>(m, "Pipeline")
      .def(py::init([](const std::string& catalog_json, bool vhan) {
             auto c = Catalog::from_json(json::parse(catalog_json));
             c.freeze();
             return PyPipeline{PipelineState::fresh(c, vhan), vhan};
           }),
           py::arg("catalog_json"), py::arg("vhan") = true)
      .def(
          "run_day",
          [](PyPipeline& p, std::size_t day, const std::string& events, bool check_rebuild) {
            const auto evs = events_from(events, p.state.catalog);
            py::gil_scoped_release release;
            return run_day(p.state, day, evs, {p.vhan, check_rebuild}).to_json().dump();
          },
          py::arg("day"), py::arg("events_json"), py::arg("check_rebuild") = false)
      .def(
          "compute",
          [](const PyPipeline& p, FeatureId feature, std::int64_t now, bool baseline) {
            const auto& layout = baseline ? p.state.baseline_layout : p.state.layout;
            const auto& store = baseline ? p.state.baseline : p.state.optimized;
            return compute(p.state.catalog.feature(feature), p.state.catalog,
                           retrieve(feature, p.state.catalog, layout, store, now))
                .to_json()
                .dump();
          },
          py::arg("feature"), py::arg("now"), py::arg("baseline") = false)
      .def("verify",
           [](const PyPipeline& p, const std::vector<std::int64_t>& nows) {
             return verify_features(p.state.catalog, p.state.baseline_layout, p.state.baseline, p.state.layout,
                                    p.state.optimized, nows)
                 .to_json()
                 .dump();
           })
      .def("baseline_sizes", [](const PyPipeline& p) { return sizes_json(p.state.baseline.measure_sizes()); })
      .def("optimized_sizes", [](const PyPipeline& p) { return sizes_json(p.state.optimized.measure_sizes()); })
      .def("compression_ratio",
           [](const PyPipeline& p) {
             return compression_ratio(p.state.baseline.measure_sizes(), p.state.optimized.measure_sizes(),
                                      config_bytes(p.state.layout, p.state.catalog));
           })
      .def("shard_count", [](const PyPipeline& p) { return p.state.optimized.shards().size(); })
      .def("layout_kind", [](const PyPipeline& p) { return std::string(to_string(p.state.layout.kind())); })
      .def("workload_stats",
           [](const PyPipeline& p, const std::string& events) {
             return calibrate_stats(events_from(events, p.state.catalog), p.state.baseline).to_json().dump();
           })
      .def("write", [](const PyPipeline& p, const std::filesystem::path& dir) {
        p.state.baseline.write_dir(dir / "baseline");
        p.state.optimized.write_dir(dir / "optimized");
      });

  m.def(
      "max_weight_matching",
      [](std::size_t n, const std::vector<std::tuple<std::size_t, std::size_t, std::int64_t>>& edges) {
        std::vector<WeightedEdge> es;
        for (const auto& [u, v, w] : edges) {
          if (u >= n || v >= n) throw Error(ErrorCode::InvalidArgument, "edge endpoint out of range");
          es.push_back({u, v, w});
        }
        return max_weight_matching(n, es);
      },
      py::arg("vertex_count"), py::arg("edges"));

  m.def(
      "run_pipeline",
      [](const std::filesystem::path& ws, std::size_t day, bool vhan) {
        return workspace::run_pipeline(ws, day, {vhan, false}).to_json().dump();
      },
      py::arg("workspace"), py::arg("day"), py::arg("vhan") = true);
  m.def("init_workspace", [](const std::filesystem::path& ws, const std::string& params_json) {
    const auto p = WorkloadParams::from_json(json::parse(params_json));
    workspace::init(ws, generate(p), p);
  });
}
