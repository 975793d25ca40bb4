#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cmdforge/bench.h"
#include "cmdforge/errors.h"
#include "cmdforge/run_config.h"
#include "cmdforge/symmetry.h"

namespace py = pybind11;
using namespace cmdforge;
using nlohmann::json;

// JSON crosses the boundary as text; the Python wrapper decodes it.
PYBIND11_MODULE(_cmd_forge, m) {
  m.doc() = "Native core of cmd_forge";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<SpecError>(m, "SpecError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<DatasetError>(m, "DatasetError", error.ptr());
  py::register_exception<CapExceeded>(m, "CapExceeded", error.ptr());

  m.def("symmetry_json", [](const std::string& spec) {
    return to_json(symmetry_group(parse_mechanism(spec))).dump();
  });

  m.def(
      "render_system_prompt",
      [](bool step_by_step, bool task_description, bool response_format, bool one_shot,
         std::optional<std::string> hold_view) {
        PromptSpec spec{step_by_step, task_description, response_format, one_shot, std::nullopt};
        if (hold_view) {
          spec.hold_view = verdict_from_string(*hold_view);
          if (!spec.hold_view) throw ConfigError("hold_view must be Correct, Incorrect or Unknown");
        }
        return render_system_prompt(spec);
      },
      py::arg("step_by_step") = false, py::arg("task_description") = false,
      py::arg("response_format") = false, py::arg("one_shot") = false,
      py::arg("hold_view") = py::none());

  m.def("render_question", [](const std::string& task) {
    return render_question(task_from_json(json::parse(task)));
  });

  m.def("parse_verdict", [](const std::string& text) -> std::optional<std::string> {
    auto v = find_verdict(text);
    if (!v) return std::nullopt;
    return std::string(to_string(*v));
  });

  m.def("group_map", [](std::size_t n, bool secretary_mode, std::size_t group_size) {
    return gen_group_map(n, secretary_mode, group_size).levels;
  });

  m.def("discuss_json", [](const std::string& config, const std::string& task) {
    const RunConfig rc = RunConfig::from_json(json::parse(config));
    const TaskInstance t = task_from_json(json::parse(task));
    json out;
    {
      py::gil_scoped_release release;
      const Runtime rt = make_runtime(rc);
      DiscussionResult r = run_case(rc, t, rt.agents);
      out = {{"verdict", to_string(r.verdict)},
             {"resolution", to_string(r.resolution)},
             {"transcript", to_json(r.transcript)}};
    }
    return out.dump();
  });

  m.def("bench_json", [](const std::string& config, const std::string& dataset, const std::string& out_dir,
                         bool resume, bool exclude_errored) {
    const RunConfig rc = RunConfig::from_json(json::parse(config));
    const Dataset d = load_dataset(dataset);
    BenchOptions options{out_dir, resume, exclude_errored, std::nullopt};
    py::gil_scoped_release release;
    return summary_json(run_benchmark(d, rc, options)).dump();
  });
}
