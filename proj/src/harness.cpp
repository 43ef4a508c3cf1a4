#include "limitlearn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace limitlearn {

using nlohmann::json;

std::string to_string(TrialKind k) {
  switch (k) {
    case TrialKind::kLearn: return "learn";
    case TrialKind::kReduce: return "reduce";
    case TrialKind::kAdversary: return "adversary";
  }
  return "?";
}

TrialKind parse_trial_kind(std::string_view name) {
  if (name == "learn") return TrialKind::kLearn;
  if (name == "reduce") return TrialKind::kReduce;
  if (name == "adversary") return TrialKind::kAdversary;
  throw Error(Error::Kind::kConfig, "unknown trial kind '" + std::string(name) + "'");
}

namespace {

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto p = text.find(sep, start);
    out.emplace_back(text.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
    if (p == std::string_view::npos) return out;
    start = p + 1;
  }
}

std::uint64_t parse_u64(std::string_view text, std::string_view what) {
  std::uint64_t v = 0;
  std::size_t pos = 0;
  try {
    v = std::stoull(std::string(text), &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (text.empty() || pos != text.size())
    throw Error(Error::Kind::kConfig, "bad " + std::string(what) + " '" + std::string(text) + "'");
  return v;
}

// "cols:<lit>,<lit>" gives a real by its columns; anything else is a descriptor literal.
Real parse_witness(std::string_view text) {
  if (text.rfind("cols:", 0) == 0) {
    std::vector<Real> cols;
    for (const auto& c : split(text.substr(5), ',')) cols.push_back(Real::from_descriptor(c));
    return Real::from_columns(std::move(cols));
  }
  return Real::from_descriptor(text);
}

bool is_real_target(std::string_view t) { return t.rfind("real:", 0) == 0; }

Real parse_real_target(std::string_view t) {
  const auto body = t.substr(5);
  const auto at = body.find('@');
  Real base = Real::from_descriptor(body.substr(0, at));
  if (at == std::string_view::npos) return base;
  std::vector<std::uint64_t> flips;
  for (const auto& f : split(body.substr(at + 1), ',')) flips.push_back(parse_u64(f, "flip position"));
  std::sort(flips.begin(), flips.end());
  return Real::lazy(
      [base, flips](std::uint64_t n) { return base(n) != std::binary_search(flips.begin(), flips.end(), n); },
      std::string(t));
}

std::vector<SpecPtr> family_specs(const TrialConfig& cfg) {
  std::vector<SpecPtr> out;
  for (const auto& f : cfg.family) out.push_back(make_structure(f, cfg.jmax));
  return out;
}

std::string bit_str(bool b) { return b ? "1" : "0"; }

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

// ---------------------------------------------------------------- config

void TrialConfig::validate() const {
  auto fail = [&](const std::string& what) { throw Error(Error::Kind::kConfig, "trial '" + name + "': " + what); };
  if (horizon == 0) fail("horizon must be positive");
  if (seeds.empty()) fail("no seeds");
  switch (kind) {
    case TrialKind::kLearn:
      if (window == 0 || window > horizon) fail("need horizon >= K >= 1");
      if (family.empty()) fail("empty family");
      if (targets.empty()) fail("no targets");
      for (const auto& t : targets) {
        if (std::find(family.begin(), family.end(), t) == family.end()) fail("target '" + t + "' is not in the family");
      }
      break;
    case TrialKind::kReduce:
      if (targets.size() != 2) fail("a reduction trial compares exactly two targets");
      if (pipeline.empty()) fail("empty pipeline");
      for (const auto& t : targets) {
        if (is_real_target(t)) parse_real_target(t);
        else make_structure(t, jmax);
      }
      break;
    case TrialKind::kAdversary:
      break;
  }
  for (const auto& f : family) make_structure(f, jmax);
  for (const auto& w : witnesses) parse_witness(w);
  if (q0) parse_rational(*q0);
  if (!expect.empty()) {
    const bool ok = (kind == TrialKind::kLearn && expect == "correct") ||
                    (kind == TrialKind::kReduce && (expect == "equivalent" || expect == "separated")) ||
                    (kind == TrialKind::kAdversary && expect.rfind("flips>=", 0) == 0);
    if (!ok) fail("unsupported expectation '" + expect + "'");
    if (kind == TrialKind::kAdversary) parse_u64(expect.substr(7), "flip count");
  }
  if (kind == TrialKind::kReduce) make_pipeline(*this);
  if (kind != TrialKind::kReduce) make_learner(*this);
}

TrialConfig TrialConfig::from_json(const json& j) {
  if (!j.is_object()) throw Error(Error::Kind::kConfig, "trial entry must be an object");
  static const std::vector<std::string> known = {
      "name",   "kind",  "family",        "targets",      "learner", "pipeline", "witnesses", "relation",
      "horizon", "seeds", "window",       "column_budget", "search_bound", "q0",   "variant",  "jmax", "expect"};
  for (const auto& [k, v] : j.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw Error(Error::Kind::kConfig, "unknown trial key '" + k + "'");
  }
  TrialConfig c;
  try {
    read_opt(j, "name", c.name);
    if (j.contains("kind")) c.kind = parse_trial_kind(j.at("kind").get<std::string>());
    read_opt(j, "family", c.family);
    read_opt(j, "targets", c.targets);
    read_opt(j, "learner", c.learner);
    read_opt(j, "pipeline", c.pipeline);
    read_opt(j, "witnesses", c.witnesses);
    if (j.contains("relation")) c.relation = parse_relation(j.at("relation").get<std::string>());
    read_opt(j, "horizon", c.horizon);
    read_opt(j, "seeds", c.seeds);
    read_opt(j, "window", c.window);
    read_opt(j, "column_budget", c.column_budget);
    read_opt(j, "search_bound", c.search_bound);
    if (j.contains("q0")) c.q0 = j.at("q0").get<std::string>();
    if (j.contains("variant")) c.variant = parse_box_variant(j.at("variant").get<std::string>());
    read_opt(j, "jmax", c.jmax);
    read_opt(j, "expect", c.expect);
  } catch (const json::exception& e) {
    throw Error(Error::Kind::kConfig, std::string("bad trial entry: ") + e.what());
  }
  return c;
}

json TrialConfig::to_json() const {
  json j = {{"name", name},
            {"kind", to_string(kind)},
            {"family", family},
            {"targets", targets},
            {"learner", learner},
            {"pipeline", pipeline},
            {"witnesses", witnesses},
            {"relation", limitlearn::to_string(relation)},
            {"horizon", horizon},
            {"seeds", seeds},
            {"window", window},
            {"column_budget", column_budget},
            {"search_bound", search_bound},
            {"variant", limitlearn::to_string(variant)},
            {"jmax", jmax},
            {"expect", expect}};
  if (q0) j["q0"] = *q0;
  return j;
}

// ---------------------------------------------------------------- traces

json TraceRow::to_json() const {
  json j = {{"trial", trial}, {"seed", seed}, {"stage", stage}, {"value", value}};
  if (!state.empty()) {
    json s = json::object();
    for (const auto& [k, v] : state) s[k] = v;
    j["state"] = s;
  }
  return j;
}

TraceRow TraceRow::from_json(const json& j) {
  TraceRow r;
  r.trial = j.at("trial").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.stage = j.at("stage").get<std::uint64_t>();
  r.value = j.at("value").get<std::string>();
  if (j.contains("state")) {
    for (const auto& [k, v] : j.at("state").items()) r.state.push_back({k, v.get<std::int64_t>()});
  }
  return r;
}

json trace_header(const TrialConfig& cfg, const std::string& trial_id) {
  return {{"header", true}, {"rng", kRngId}, {"trial", trial_id}, {"config", cfg.to_json()}};
}

void write_jsonl(const std::filesystem::path& path, const json& header, const std::vector<TraceRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Error::Kind::kConfig, "cannot write " + path.string());
  out << header.dump() << '\n';
  for (const auto& r : rows) out << r.to_json().dump() << '\n';
  if (!out) throw Error(Error::Kind::kConfig, "write failed for " + path.string());
}

// ---------------------------------------------------------------- stabilization

json StabilizationVerdict::to_json() const {
  json j = {{"stabilized", stabilized()}, {"window", window}, {"horizon", horizon}};
  if (index) {
    j["index"] = *index;
    j["at_stage"] = at_stage;
  }
  return j;
}

StabilizationVerdict detect_stabilization(const std::vector<TraceRow>& trace, std::uint64_t window) {
  StabilizationVerdict v;
  v.window = window;
  v.horizon = trace.empty() ? 0 : trace.back().stage;
  if (window == 0 || trace.size() < window) return v;
  const std::string& last = trace.back().value;
  if (last == "?") return v;
  std::size_t start = trace.size();
  while (start > 0 && trace[start - 1].value == last) --start;
  if (trace.size() - start < window) return v;
  v.index = static_cast<std::size_t>(parse_u64(last, "conjecture"));
  v.at_stage = trace[start].stage;
  return v;
}

// ---------------------------------------------------------------- builders

WitnessSet make_witnesses(const TrialConfig& cfg) {
  WitnessSet ws;
  ws.relation = cfg.relation;
  for (const auto& w : cfg.witnesses) ws.betas.push_back(parse_witness(w));
  return ws;
}

ContinuousOperator make_pipeline(const TrialConfig& cfg) {
  OperatorParams params;
  params.witnesses = make_witnesses(cfg);
  params.column_budget = cfg.column_budget;
  params.search_bound = cfg.search_bound;
  if (cfg.q0) params.q0 = parse_rational(*cfg.q0);
  params.variant = cfg.variant;
  params.jmax = cfg.jmax;
  ContinuousOperator op;
  for (const auto& name : cfg.pipeline) {
    params.inner = op;
    op = make_operator(name, params);
  }
  if (!op) throw Error(Error::Kind::kConfig, "empty pipeline");
  return op;
}

Learner make_learner(const TrialConfig& cfg) {
  const auto& l = cfg.learner;
  const std::size_t n = std::max<std::size_t>(cfg.family.size(), 2);
  if (l == "sigma2") return sigma2_learner({least_greatest_pair()}, family_specs(cfg));
  if (l == "least-reactive") return least_reactive_learner();
  if (l.rfind("constant:", 0) == 0) {
    const auto i = parse_u64(std::string_view(l).substr(9), "learner index");
    if (i >= n) throw Error(Error::Kind::kConfig, "constant learner index out of range");
    return constant_learner(i, n);
  }
  if (l == "reduction") {
    auto ws = make_witnesses(cfg);
    if (ws.betas.size() != cfg.family.size())
      throw Error(Error::Kind::kConfig, "the reduction learner needs one witness per family member");
    return learner_from_reduction(make_pipeline(cfg), ws.betas);
  }
  throw Error(Error::Kind::kConfig, "unknown learner '" + l + "'");
}

// ---------------------------------------------------------------- trials

std::vector<TraceRow> run_learning_trial(const TrialConfig& cfg, const std::string& target, std::uint64_t seed) {
  cfg.validate();
  const Learner m = make_learner(cfg);
  const std::string id = cfg.name + "/" + target;
  const Bits input = diagram_stream(make_structure(target, cfg.jmax), Enumeration(seed)).real().prefix(cfg.horizon);
  auto session = m.start();
  std::vector<TraceRow> rows;
  rows.reserve(cfg.horizon + 1);
  rows.push_back({id, seed, 0, session->current().str(), session->snapshot()});
  for (std::uint64_t n = 0; n < cfg.horizon; ++n) {
    session->push_bit(input[n]);
    rows.push_back({id, seed, n + 1, session->current().str(), session->snapshot()});
  }
  return rows;
}

Bits target_prefix(const std::string& target, std::uint64_t seed, std::uint64_t horizon, std::size_t jmax) {
  if (is_real_target(target)) return parse_real_target(target).prefix(horizon);
  return diagram_stream(make_structure(target, jmax), Enumeration(seed)).prefix_elements(horizon);
}

ReductionResult run_reduction_trial(const TrialConfig& cfg, const std::string& a, const std::string& b,
                                    std::uint64_t seed_a, std::uint64_t seed_b) {
  const auto op = make_pipeline(cfg);
  ReductionResult r;
  Bits outs[2];
  const std::string targets[2] = {a, b};
  const std::uint64_t seeds[2] = {seed_a, seed_b};
  for (int k = 0; k < 2; ++k) {
    auto session = op.start();
    session->push(target_prefix(targets[k], seeds[k], cfg.horizon, cfg.jmax));
    outs[k] = session->output();
    const std::string id = cfg.name + "/" + targets[k];
    for (std::uint64_t s = 0; s < outs[k].size(); ++s) r.traces[k].push_back({id, seeds[k], s, bit_str(outs[k][s]), {}});
    if (!r.traces[k].empty()) r.traces[k].back().state = session->snapshot();
  }
  r.verdict = approx_relation(cfg.relation, outs[0], outs[1], cfg.column_budget);
  return r;
}

AdversaryTrial run_adversary_trial(const TrialConfig& cfg, std::uint64_t seed) {
  AdversaryTrial t;
  t.result = adversary_omega_zeta(make_learner(cfg), cfg.horizon, seed);
  for (std::size_t k = 0; k < t.result.conjectures.size(); ++k)
    t.trace.push_back({cfg.name + "/adversary", seed, k, t.result.conjectures[k].str(), {}});
  return t;
}

// ---------------------------------------------------------------- concurrency

std::size_t thread_count() {
  if (const char* env = std::getenv("LIMITLEARN_THREADS")) {
    try {
      const long v = std::stol(env);
      return v < 1 ? 1 : static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      return 1;
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& task) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------- suite

namespace {

struct Unit {
  std::size_t trial = 0;
  std::string target;
  std::string other;  // second target of a reduction
  std::uint64_t seed = 0;
  std::uint64_t seed2 = 0;
};

struct UnitOutcome {
  std::string id;
  json header;
  std::vector<std::vector<TraceRow>> traces;
  json verdict;
  bool pass = true;
  std::string failure;
};

std::string sanitize(std::string s) {
  for (auto& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  }
  return s;
}

std::string csv_field(const std::string& s) {
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::vector<Unit> expand(const std::vector<TrialConfig>& trials) {
  std::vector<Unit> units;
  for (std::size_t t = 0; t < trials.size(); ++t) {
    const auto& c = trials[t];
    switch (c.kind) {
      case TrialKind::kLearn:
        for (const auto& target : c.targets)
          for (auto seed : c.seeds) units.push_back({t, target, "", seed, 0});
        break;
      case TrialKind::kReduce:
        units.push_back({t, c.targets[0], c.targets[1], c.seeds[0], c.seeds.size() > 1 ? c.seeds[1] : c.seeds[0]});
        break;
      case TrialKind::kAdversary:
        for (auto seed : c.seeds) units.push_back({t, "adversary", "", seed, 0});
        break;
    }
  }
  return units;
}

UnitOutcome run_unit(const TrialConfig& c, const Unit& u) {
  UnitOutcome o;
  switch (c.kind) {
    case TrialKind::kLearn: {
      o.id = c.name + "-" + u.target + "-" + std::to_string(u.seed);
      auto rows = run_learning_trial(c, u.target, u.seed);
      const auto v = detect_stabilization(rows, c.window);
      const auto want = static_cast<std::size_t>(std::find(c.family.begin(), c.family.end(), u.target) - c.family.begin());
      const bool correct = v.index && *v.index == want;
      o.verdict = v.to_json();
      o.verdict["correct"] = correct;
      if (c.expect == "correct" && !correct) {
        o.pass = false;
        o.failure = "did not stabilize to " + u.target;
      }
      o.traces.push_back(std::move(rows));
      break;
    }
    case TrialKind::kReduce: {
      o.id = c.name + "-" + u.target + "-" + std::to_string(u.seed) + "-vs-" + u.other + "-" + std::to_string(u.seed2);
      auto r = run_reduction_trial(c, u.target, u.other, u.seed, u.seed2);
      o.verdict = {{"relation", to_string(c.relation)},
                   {"verdict", to_string(r.verdict.verdict)},
                   {"horizon", r.verdict.horizon}};
      if (r.verdict.witness) o.verdict["witness"] = *r.verdict.witness;
      if ((c.expect == "equivalent" && !r.verdict.equivalent()) || (c.expect == "separated" && !r.verdict.separated())) {
        o.pass = false;
        o.failure = "expected " + c.expect + ", got " + to_string(r.verdict.verdict);
      }
      o.traces.push_back(std::move(r.traces[0]));
      o.traces.push_back(std::move(r.traces[1]));
      break;
    }
    case TrialKind::kAdversary: {
      o.id = c.name + "-adversary-" + std::to_string(u.seed);
      auto a = run_adversary_trial(c, u.seed);
      o.verdict = {{"flips", a.result.flips},
                   {"minima_inserted", a.result.minima_inserted},
                   {"elements", a.result.elements},
                   {"learner", c.learner}};
      if (!c.expect.empty()) {
        const auto need = parse_u64(c.expect.substr(7), "flip count");
        if (a.result.flips < need) {
          o.pass = false;
          o.failure = "only " + std::to_string(a.result.flips) + " conjecture changes";
        }
      }
      o.traces.push_back(std::move(a.trace));
      break;
    }
  }
  o.header = trace_header(c, o.id);
  return o;
}

}  // namespace

SuiteResult run_suite(const json& config, SuiteOptions options) {
  std::vector<TrialConfig> trials;
  if (config.contains("trials")) {
    if (!config.at("trials").is_array()) throw Error(Error::Kind::kConfig, "'trials' must be an array");
    for (const auto& t : config.at("trials")) trials.push_back(TrialConfig::from_json(t));
  }
  for (const auto& t : trials) t.validate();
  if (config.contains("csv")) options.csv = config.at("csv").get<bool>();

  const auto units = expand(trials);
  std::vector<UnitOutcome> outcomes(units.size());
  parallel_for(units.size(), options.threads.value_or(thread_count()), [&](std::size_t i) {
    const auto& u = units[i];
    try {
      outcomes[i] = run_unit(trials[u.trial], u);
    } catch (const Error& e) {
      outcomes[i].id = trials[u.trial].name + "-" + u.target + "-" + std::to_string(u.seed);
      outcomes[i].pass = false;
      outcomes[i].failure = e.what();
    }
  });

  SuiteResult res;
  json report = {{"rng", kRngId}, {"trials", json::array()}};
  std::size_t passed = 0;
  std::ostringstream csv;
  csv << "trial,unit,pass,verdict\n";
  std::size_t k = 0;
  for (std::size_t t = 0; t < trials.size(); ++t) {
    json tj = {{"name", trials[t].name}, {"kind", to_string(trials[t].kind)}, {"units", json::array()}};
    bool all = true;
    for (; k < units.size() && units[k].trial == t; ++k) {
      auto& o = outcomes[k];
      json uj = {{"id", o.id}, {"pass", o.pass}, {"verdict", o.verdict}};
      if (!o.pass) {
        uj["failure"] = o.failure;
        res.failures.push_back(o.id + ": " + o.failure);
      }
      all = all && o.pass;
      if (!options.output_dir.empty()) {
        for (std::size_t x = 0; x < o.traces.size(); ++x) {
          const std::string file = sanitize(o.id) + (o.traces.size() > 1 ? "-" + std::to_string(x) : "") + ".jsonl";
          write_jsonl(options.output_dir / "traces" / file, o.header, o.traces[x]);
          uj["traces"].push_back("traces/" + file);
        }
      }
      csv << csv_field(trials[t].name) << ',' << csv_field(o.id) << ',' << (o.pass ? 1 : 0) << ','
          << csv_field(o.verdict.dump()) << '\n';
      tj["units"].push_back(uj);
    }
    tj["pass"] = all;
    if (all) ++passed;
    report["trials"].push_back(tj);
  }
  report["passed"] = passed;
  report["failed"] = trials.size() - passed;
  res.exit_code = passed == trials.size() ? 0 : 1;
  res.report = report;
  if (!options.output_dir.empty()) {
    std::filesystem::create_directories(options.output_dir);
    std::ofstream(options.output_dir / "report.json", std::ios::binary) << report.dump(2) << '\n';
    if (options.csv) std::ofstream(options.output_dir / "report.csv", std::ios::binary) << csv.str();
  }
  return res;
}

SuiteResult run_suite(const std::filesystem::path& config_path) {
  SuiteResult res;
  try {
    std::ifstream in(config_path);
    if (!in) throw Error(Error::Kind::kConfig, "cannot read " + config_path.string());
    json config;
    try {
      in >> config;
    } catch (const json::exception& e) {
      throw Error(Error::Kind::kConfig, std::string("bad JSON: ") + e.what());
    }
    SuiteOptions options;
    if (config.contains("output_dir")) {
      std::filesystem::path dir = config.at("output_dir").get<std::string>();
      options.output_dir = dir.is_absolute() ? dir : config_path.parent_path() / dir;
    }
    return run_suite(config, options);
  } catch (const Error& e) {
    res.exit_code = 2;
    res.failures.push_back(e.what());
    res.report = {{"error", e.what()}};
  } catch (const std::filesystem::filesystem_error& e) {
    res.exit_code = 2;
    res.failures.push_back(e.what());
    res.report = {{"error", e.what()}};
  }
  return res;
}

}  // namespace limitlearn
