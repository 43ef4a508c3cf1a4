#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "limitlearn/harness.hpp"

namespace py = pybind11;
using namespace limitlearn;
using nlohmann::json;

namespace {

json verdict_json(const HorizonVerdict& v) {
  json j = {{"verdict", to_string(v.verdict)}, {"horizon", v.horizon}};
  if (v.witness) j["witness"] = *v.witness;
  return j;
}

std::string rows_json(const std::vector<TraceRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) out.push_back(r.to_json());
  return out.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "limitlearn core bindings; JSON crosses the boundary as strings";

  py::register_exception<Error>(m, "LimitlearnError", PyExc_ValueError);

  m.def("pair", &limitlearn::pair);
  m.def("unpair", &limitlearn::unpair);

  m.def("prefix", [](const std::string& literal, std::uint64_t n) {
    return bits_to_string(Real::from_descriptor(literal).prefix(n));
  });
  m.def("normalize", [](const std::string& literal) { return Real::from_descriptor(literal).describe(); });

  m.def("decide_exact", [](const std::string& rel, const std::string& a, const std::string& b) {
    const auto x = Real::from_descriptor(a), y = Real::from_descriptor(b);
    switch (parse_relation(rel)) {
      case RelationId::kE0: return decide_E0_exact(x, y);
      case RelationId::kE2: return decide_E2_exact(x, y);
      case RelationId::kZ0: return decide_Z0_exact(x, y);
      default: throw Error(Error::Kind::kConfig, "no exact decider for " + rel);
    }
  });
  m.def(
      "approx",
      [](const std::string& rel, const std::string& a, const std::string& b, std::uint64_t horizon,
         std::uint64_t budget) {
        return verdict_json(approx_relation(parse_relation(rel), Real::from_descriptor(a), Real::from_descriptor(b),
                                            horizon, budget))
            .dump();
      },
      py::arg("relation"), py::arg("a"), py::arg("b"), py::arg("horizon") = 4096, py::arg("column_budget") = 8);

  m.def("operator_names", &operator_names);

  m.def("apply_pipeline", [](const std::string& trial_json, const std::string& bits) {
    const auto cfg = TrialConfig::from_json(json::parse(trial_json));
    py::gil_scoped_release release;
    return bits_to_string(make_pipeline(cfg).apply(bits_from_string(bits)));
  });
  m.def("target_prefix", [](const std::string& target, std::uint64_t seed, std::uint64_t horizon) {
    return bits_to_string(target_prefix(target, seed, horizon, kDefaultJmax));
  });

  m.def("learn", [](const std::string& trial_json, const std::string& target, std::uint64_t seed) {
    auto cfg = TrialConfig::from_json(json::parse(trial_json));
    cfg.kind = TrialKind::kLearn;
    cfg.validate();
    py::gil_scoped_release release;
    return rows_json(run_learning_trial(cfg, target, seed));
  });
  m.def("stabilization", [](const std::string& rows_text, std::uint64_t window) {
    std::vector<TraceRow> rows;
    for (const auto& r : json::parse(rows_text)) rows.push_back(TraceRow::from_json(r));
    return detect_stabilization(rows, window).to_json().dump();
  });

  m.def("run_suite", [](const std::string& config_json, const std::string& output_dir) {
    SuiteOptions opt;
    if (!output_dir.empty()) opt.output_dir = output_dir;
    const auto cfg = json::parse(config_json);
    SuiteResult res;
    {
      py::gil_scoped_release release;
      res = run_suite(cfg, opt);
    }
    return json{{"report", res.report}, {"exit_code", res.exit_code}, {"failures", res.failures}}.dump();
  });
}
