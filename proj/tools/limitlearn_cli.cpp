#include <iostream>

#include "CLI11.hpp"
#include "limitlearn/harness.hpp"

using namespace limitlearn;
using nlohmann::json;

namespace {

void add_common(CLI::App* cmd, TrialConfig& cfg) {
  cmd->add_option("--horizon", cfg.horizon, "Input length (bits, or elements for structure reduction targets)");
  cmd->add_option("--seeds", cfg.seeds, "Copy seeds")->delimiter(',');
  cmd->add_option("--jmax", cfg.jmax, "Box predicates kept from infinite signatures");
}

void add_pipeline(CLI::App* cmd, TrialConfig& cfg, std::string& variant) {
  cmd->add_option("--pipeline", cfg.pipeline, "Operator names, first applied first")->delimiter(',')->required();
  cmd->add_option("--witness", cfg.witnesses, "Witness literal (prefix~period or cols:<lit>,<lit>)");
  cmd->add_option("--column-budget", cfg.column_budget);
  cmd->add_option("--search-bound", cfg.search_bound);
  cmd->add_option("--q0", cfg.q0, "Z0 threshold, e.g. 1/4");
  cmd->add_option("--variant", variant, "Box variant: predicate or graph");
}

json verdict_json(const HorizonVerdict& v) {
  json j = {{"verdict", to_string(v.verdict)}, {"horizon", v.horizon}};
  if (v.witness) j["witness"] = *v.witness;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"limitlearn: learning in the limit and Borel reductions at finite horizon"};
  app.require_subcommand(1);

  TrialConfig cfg;
  std::string variant = "predicate";
  std::string relation = "E0";
  std::string trace_path;
  std::string target;

  auto* learn = app.add_subcommand("learn", "Run a learner on seeded copies of a family member");
  learn->add_option("--family", cfg.family, "Structure names")->delimiter(',')->required();
  learn->add_option("--target", target, "Family member to copy")->required();
  learn->add_option("--learner", cfg.learner, "sigma2, reduction, constant:<i>, least-reactive");
  learn->add_option("--window", cfg.window, "Stabilization window K");
  learn->add_option("--witness", cfg.witnesses, "Witness literals for the reduction learner");
  learn->add_option("--pipeline", cfg.pipeline, "Operator pipeline for the reduction learner")->delimiter(',');
  learn->add_option("--trace", trace_path, "Write the JSONL trace of the first seed here");
  add_common(learn, cfg);

  std::vector<std::string> targets;
  auto* reduce = app.add_subcommand("reduce", "Run an operator pipeline on two inputs and compare outputs");
  reduce->add_option("--targets", targets, "Two structure names or real:<lit>[@flips]")->expected(2)->required();
  reduce->add_option("--relation", relation, "E0, E1, E2, E3, Z0, ESET");
  reduce->add_option("--trace", trace_path, "Write output traces with this path prefix");
  add_pipeline(reduce, cfg, variant);
  add_common(reduce, cfg);

  std::uint64_t seed = 1;
  auto* adversary = app.add_subcommand("adversary", "Build an order that defeats a learner on {omega, zeta}");
  adversary->add_option("--learner", cfg.learner, "constant:<i> or least-reactive")->required();
  adversary->add_option("--horizon", cfg.horizon, "Steps");
  adversary->add_option("--seed", seed);

  std::string a_lit, b_lit;
  std::uint64_t budget = 8;
  auto* relations = app.add_subcommand("relations", "Decide a relation on two descriptor literals");
  relations->add_option("--relation", relation)->required();
  relations->add_option("a", a_lit)->required();
  relations->add_option("b", b_lit)->required();
  relations->add_option("--horizon", cfg.horizon);
  relations->add_option("--column-budget", budget);

  std::string config_path;
  auto* suite = app.add_subcommand("suite", "Run a JSON suite config");
  suite->add_option("config", config_path)->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    cfg.variant = parse_box_variant(variant);
    cfg.relation = parse_relation(relation);

    if (*learn) {
      cfg.kind = TrialKind::kLearn;
      cfg.name = "learn";
      cfg.targets = {target};
      cfg.validate();
      const auto want = std::find(cfg.family.begin(), cfg.family.end(), target) - cfg.family.begin();
      for (std::size_t k = 0; k < cfg.seeds.size(); ++k) {
        auto rows = run_learning_trial(cfg, target, cfg.seeds[k]);
        auto v = detect_stabilization(rows, cfg.window);
        json out = {{"target", target}, {"seed", cfg.seeds[k]}, {"stabilization", v.to_json()},
                    {"correct", v.index && static_cast<std::ptrdiff_t>(*v.index) == want},
                    {"final", rows.back().value}};
        std::cout << out.dump() << '\n';
        if (k == 0 && !trace_path.empty()) write_jsonl(trace_path, trace_header(cfg, "learn/" + target), rows);
      }
      return 0;
    }
    if (*reduce) {
      cfg.kind = TrialKind::kReduce;
      cfg.name = "reduce";
      cfg.targets = targets;
      cfg.validate();
      const auto s2 = cfg.seeds.size() > 1 ? cfg.seeds[1] : cfg.seeds[0];
      auto r = run_reduction_trial(cfg, targets[0], targets[1], cfg.seeds[0], s2);
      json out = verdict_json(r.verdict);
      out["relation"] = to_string(cfg.relation);
      out["output_bits"] = {r.traces[0].size(), r.traces[1].size()};
      std::cout << out.dump() << '\n';
      if (!trace_path.empty()) {
        for (int k = 0; k < 2; ++k)
          write_jsonl(trace_path + "-" + std::to_string(k) + ".jsonl", trace_header(cfg, "reduce/" + targets[k]),
                      r.traces[k]);
      }
      return 0;
    }
    if (*adversary) {
      cfg.kind = TrialKind::kAdversary;
      cfg.name = "adversary";
      cfg.family = {"omega", "zeta"};
      auto t = run_adversary_trial(cfg, seed);
      std::string conj;
      for (const auto& c : t.result.conjectures) conj += c.str();
      json out = {{"learner", cfg.learner},   {"flips", t.result.flips},     {"elements", t.result.elements},
                  {"minima_inserted", t.result.minima_inserted}, {"conjectures", conj}};
      std::cout << out.dump() << '\n';
      return 0;
    }
    if (*relations) {
      const Real a = Real::from_descriptor(a_lit), b = Real::from_descriptor(b_lit);
      json out = {{"relation", to_string(cfg.relation)}};
      switch (cfg.relation) {
        case RelationId::kE0: out["exact"] = decide_E0_exact(a, b); break;
        case RelationId::kE2: out["exact"] = decide_E2_exact(a, b); break;
        case RelationId::kZ0: out["exact"] = decide_Z0_exact(a, b); break;
        default: break;
      }
      out["approx"] = verdict_json(approx_relation(cfg.relation, a, b, cfg.horizon, budget));
      std::cout << out.dump() << '\n';
      return 0;
    }
    if (*suite) {
      auto res = run_suite(std::filesystem::path(config_path));
      std::cout << res.report.dump(2) << '\n';
      for (const auto& f : res.failures) std::cerr << "FAIL " << f << '\n';
      return res.exit_code;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
