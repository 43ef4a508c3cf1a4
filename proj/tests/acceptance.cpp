// Acceptance suite: one line per criterion, exit status 1 if any criterion fails.
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <mutex>
#include <random>
#include <set>
#include <sstream>

#include "limitlearn/harness.hpp"

using namespace limitlearn;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Real flipped(const Real& base, const std::set<std::uint64_t>& at) {
  std::vector<std::uint64_t> v(at.begin(), at.end());
  return Real::lazy([base, v](std::uint64_t n) { return base(n) != std::binary_search(v.begin(), v.end(), n); },
                    "flipped");
}

std::set<std::uint64_t> random_flips(std::uint64_t seed, std::size_t count, std::uint64_t below) {
  std::mt19937_64 rng(splitmix64(seed));
  std::set<std::uint64_t> out;
  while (out.size() < count) out.insert(bounded_draw(rng, below));
  return out;
}

// Witnesses for A3 and A6: every column of each pair differs, pairwise densities 1, 1/2, 1/2.
WitnessSet periodic_witnesses(RelationId rel) {
  return {{Real::zeros(), Real::ones(), Real::from_descriptor("~01")}, rel};
}

const std::size_t kThreads = thread_count();

// ---------------------------------------------------------------- A1 / A2

TrialConfig a1_config() {
  TrialConfig cfg;
  cfg.name = "A1";
  cfg.family = {"omega", "omega_star"};
  cfg.targets = cfg.family;
  cfg.learner = "sigma2";
  cfg.horizon = 4096;
  cfg.window = 200;
  return cfg;
}

constexpr std::uint64_t kA1Copies = 50;

struct A1Data {
  std::vector<StabilizationVerdict> verdicts[2];
};

A1Data a1_data() {
  static A1Data data = [] {
    A1Data d;
    const auto cfg = a1_config();
    for (auto& v : d.verdicts) v.resize(kA1Copies);
    parallel_for(2 * kA1Copies, kThreads, [&](std::size_t u) {
      const std::size_t t = u / kA1Copies, k = u % kA1Copies;
      d.verdicts[t][k] = detect_stabilization(run_learning_trial(cfg, cfg.family[t], k + 1), cfg.window);
    });
    return d;
  }();
  return data;
}

Outcome a1() {
  const auto d = a1_data();
  std::size_t ok = 0;
  std::uint64_t worst = 0;
  for (std::size_t t = 0; t < 2; ++t)
    for (const auto& v : d.verdicts[t]) {
      if (v.index && *v.index == t) {
        ++ok;
        worst = std::max(worst, v.at_stage);
      }
    }
  return {ok == 2 * kA1Copies, std::to_string(ok) + "/" + std::to_string(2 * kA1Copies) +
                                   " copies stabilized correctly (H=4096 bits, K=200), latest stabilization at bit " +
                                   std::to_string(worst)};
}

Outcome a2() {
  const auto d = a1_data();
  const auto cfg = a1_config();
  const Learner m = make_learner(cfg);
  const auto op = reduction_from_learner(m, default_transversal(2));
  const std::uint64_t H = cfg.horizon;
  std::vector<Bits> outs[2];
  for (auto& o : outs) o.resize(kA1Copies);
  parallel_for(2 * kA1Copies, kThreads, [&](std::size_t u) {
    const std::size_t t = u / kA1Copies, k = u % kA1Copies;
    const auto real = diagram_stream(make_structure(cfg.family[t]), Enumeration(k + 1)).real();
    outs[t][k] = run_operator(op, real, H);
  });
  std::size_t same_ok = 0, same_total = 0, cross_ok = 0, cross_total = 0;
  std::uint64_t least_cross = ~0ull;
  for (std::size_t t = 0; t < 2; ++t) {
    for (std::size_t k = 0; k + 1 < kA1Copies; ++k) {
      ++same_total;
      const auto& a = outs[t][k];
      const auto& b = outs[t][k + 1];
      const std::uint64_t stab = std::max(d.verdicts[t][k].at_stage, d.verdicts[t][k + 1].at_stage);
      bool eq = a.size() >= H && b.size() >= H;
      for (std::uint64_t s = stab; eq && s < H; ++s) eq = a[s] == b[s];
      same_ok += eq;
    }
  }
  for (std::size_t k = 0; k < kA1Copies; ++k) {
    ++cross_total;
    std::uint64_t diff = 0;
    const auto& a = outs[0][k];
    const auto& b = outs[1][k];
    for (std::uint64_t s = 0; s < std::min<std::uint64_t>({H, a.size(), b.size()}); ++s) diff += a[s] != b[s];
    least_cross = std::min(least_cross, diff);
    cross_ok += diff >= 100;
  }
  return {same_ok == same_total && cross_ok == cross_total,
          "same-structure pairs equal past stabilization: " + std::to_string(same_ok) + "/" +
              std::to_string(same_total) + "; cross pairs with >= 100 disagreements: " + std::to_string(cross_ok) +
              "/" + std::to_string(cross_total) + " (least " + std::to_string(least_cross) + ")"};
}

// ---------------------------------------------------------------- A3

Outcome a3() {
  const std::uint64_t H = 8192;
  const auto ws1 = periodic_witnesses(RelationId::kE1);
  const auto ws2 = periodic_witnesses(RelationId::kE2);
  const auto m = e1_index_set(ws1, H);
  const auto e1 = e1_collapse(ws1, identity_operator());
  const auto e2 = e2_collapse(ws2, identity_operator());
  struct Row {
    std::uint64_t e1_last = 0, e2_last = 0, i_last = 0;
    bool e1_full = false, e2_full = false, ib = true, i_right = false;
  };
  std::vector<Row> rows(6);
  parallel_for(rows.size(), kThreads, [&](std::size_t u) {
    const std::size_t target = u % 3;
    const auto alpha = flipped(ws1.betas[target], random_flips(100 + u, 16, 64));
    Row r;
    // E1: output s samples the input at m_s.
    const Bits out1 = run_operator(e1, alpha, *std::max_element(m.begin(), m.begin() + H) + 1);
    r.e1_full = out1.size() >= H;
    for (std::uint64_t s = 0; s < std::min<std::uint64_t>(H, out1.size()); ++s)
      if (out1[s] != ws1.betas[target](m[s])) r.e1_last = s + 1;
    // E2: stepwise, watching the state.
    auto sess = e2.start();
    std::int64_t last_i = -1, last_b = 1;
    for (std::uint64_t n = 0; n < H; ++n) {
      sess->push_bit(alpha(n));
      std::int64_t i = 0, b = 0;
      for (const auto& [k, v] : sess->snapshot()) {
        if (k == "i") i = v;
        if (k == "b") b = v;
      }
      r.ib = r.ib && i <= b && b >= last_b;
      last_b = b;
      if (i != last_i) r.i_last = n;
      last_i = i;
    }
    r.i_right = last_i == static_cast<std::int64_t>(target);
    const Bits out2 = sess->output();
    r.e2_full = out2.size() >= H;
    for (std::uint64_t s = 0; s < std::min<std::uint64_t>(H, out2.size()); ++s)
      if (out2[s] != ws2.betas[target](s)) r.e2_last = s + 1;
    rows[u] = r;
  });
  bool pass = true;
  std::uint64_t e1_worst = 0, e2_worst = 0, i_worst = 0;
  for (const auto& r : rows) {
    pass = pass && r.e1_full && r.e2_full && r.ib && r.i_right && r.e1_last < 3 * H / 4 && r.e2_last < 3 * H / 4 &&
           r.i_last < 3 * H / 4;
    e1_worst = std::max(e1_worst, r.e1_last);
    e2_worst = std::max(e2_worst, r.e2_last);
    i_worst = std::max(i_worst, r.i_last);
  }
  return {pass, "6 inputs with 16 flips: E1 output matches the sampled witness from stage " + std::to_string(e1_worst) +
                    ", E2 output matches from stage " + std::to_string(e2_worst) + ", i[s] settles by bit " +
                    std::to_string(i_worst) + ", i <= b and b monotone throughout (H=8192)"};
}

// ---------------------------------------------------------------- A4 / A5

constexpr std::uint64_t kBoxElements = 8192;
constexpr std::uint64_t kThetaBudget = 6;

// Bits of each Θ column after the input prefix of a box structure copy.
std::vector<Bits> theta_columns(const std::string& structure, BoxVariant variant, std::uint64_t seed,
                                std::uint64_t elements) {
  auto sess = theta(kThetaBudget, variant).start();
  auto spec = make_structure(structure);
  auto cur = diagram_stream(spec, Enumeration(seed)).cursor();
  Bits chunk;
  for (std::uint64_t n = 0; n < elements; ++n) {
    chunk.clear();
    cur.append_layer(chunk);
    sess->push(chunk);
  }
  const auto* cols = dynamic_cast<const ColumnarSession*>(sess.get());
  std::vector<Bits> out;
  for (std::size_t j = 0; j < kThetaBudget; ++j) out.push_back(cols->column_bits(j));
  return out;
}

// Horizon class of a column over its last quarter: 0, 1 or -1 (mixed or empty).
int tail_class(const Bits& c) {
  const std::size_t from = c.size() - c.size() / 4;
  if (from >= c.size()) return -1;
  const bool v = c[from];
  for (std::size_t k = from; k < c.size(); ++k)
    if (c[k] != v) return -1;
  return v ? 1 : 0;
}

Outcome a4() {
  const std::vector<std::string> sigmas = {"", "0", "1", "01", "010"};
  struct Unit {
    std::string sigma;
    BoxVariant variant;
    std::uint64_t seed;
  };
  std::vector<Unit> units;
  for (auto v : {BoxVariant::kPredicate, BoxVariant::kGraph})
    for (const auto& s : sigmas)
      for (std::uint64_t seed = 1; seed <= 5; ++seed) units.push_back({s, v, seed});
  std::vector<std::size_t> correct(units.size(), 0);
  std::vector<std::size_t> shortest(units.size(), 0);
  parallel_for(units.size(), kThreads, [&](std::size_t u) {
    const auto& x = units[u];
    const std::string lit = x.sigma + "1~0";
    const Real beta = Real::from_descriptor(lit);
    const std::string name = (x.variant == BoxVariant::kPredicate ? "box:" : "graphbox:") + lit;
    const auto cols = theta_columns(name, x.variant, x.seed, kBoxElements);
    std::size_t minlen = ~std::size_t{0};
    for (std::size_t j = 0; j < kThetaBudget; ++j) {
      correct[u] += tail_class(cols[j]) == static_cast<int>(beta(j));
      minlen = std::min(minlen, cols[j].size());
    }
    shortest[u] = minlen;
  });
  std::size_t ok = 0;
  for (auto c : correct) ok += c;
  const std::size_t total = units.size() * kThetaBudget;
  return {ok == total, std::to_string(ok) + "/" + std::to_string(total) +
                           " columns in the right class (5 sigmas x 5 seeds x 2 variants, 6 columns, H=8192 elements, "
                           "shortest column " +
                           std::to_string(*std::min_element(shortest.begin(), shortest.end())) + " bits)"};
}

Outcome a5() {
  // A_0 = D(0 1 0^∞), A_1 = D(1 1 0^∞); Θ sends them to columns (0,1,0,..) and (1,1,0,..).
  WitnessSet ws{{Real::from_columns({Real::zeros(), Real::ones()}), Real::from_columns({Real::ones(), Real::ones()})},
                RelationId::kE3};
  const auto op = compose(e3_finite_collapse(ws, kThetaBudget), theta(kThetaBudget, BoxVariant::kPredicate));
  const std::string A[2] = {"box:01~0", "box:11~0"};
  std::vector<Bits> outs(30);
  parallel_for(outs.size(), kThreads, [&](std::size_t u) {
    const std::uint64_t seed = u % 10 + 1;
    const std::size_t kind = u / 10;  // 0: A_0 seed, 1: A_0 other seed, 2: A_1 seed
    const std::string& target = A[kind == 2 ? 1 : 0];
    auto sess = op.start();
    auto cur = diagram_stream(make_structure(target), Enumeration(kind == 1 ? seed + 1000 : seed)).cursor();
    Bits chunk;
    for (std::uint64_t n = 0; n < kBoxElements; ++n) {
      chunk.clear();
      cur.append_layer(chunk);
      sess->push(chunk);
    }
    outs[u] = sess->output();
  });
  std::size_t same = 0, cross = 0;
  std::size_t shortest = ~std::size_t{0};
  for (std::size_t k = 0; k < 10; ++k) {
    Bits a = outs[k], b = outs[10 + k], c = outs[20 + k];
    const auto n = std::min({a.size(), b.size(), c.size()});
    shortest = std::min(shortest, n);
    a.resize(n);
    b.resize(n);
    c.resize(n);
    same += n >= 16 && approx_e0_bits(a, b).equivalent();
    cross += n >= 16 && approx_e0_bits(a, c).separated();
  }
  return {same == 10 && cross == 10, "same-type pairs equivalent " + std::to_string(same) +
                                         "/10, cross pairs separated " + std::to_string(cross) +
                                         "/10 (H=8192 elements, shortest output " + std::to_string(shortest) + " bits)"};
}

// ---------------------------------------------------------------- A6

Outcome a6() {
  const std::uint64_t H = 8192;
  const auto ws = periodic_witnesses(RelationId::kZ0);
  const auto op = z0_collapse(ws, Rational(1, 4), identity_operator());
  std::uint64_t worst = 0;
  std::int64_t least_m = -1;
  bool pass = true;
  for (std::uint64_t u = 0; u < 6; ++u) {
    const std::size_t target = u % 3;
    const auto alpha = flipped(ws.betas[target], random_flips(200 + u, 16, 64));
    auto sess = op.start();
    sess->push(alpha.prefix(H));
    const Bits out = sess->output();
    std::uint64_t last = 0;
    for (std::uint64_t s = 0; s < H; ++s)
      if (s >= out.size() || out[s] != ws.betas[target](s)) last = s + 1;
    worst = std::max(worst, last);
    pass = pass && last < 3 * H / 4;
    for (const auto& [k, v] : sess->snapshot()) {
      if (k.size() > 1 && k[0] == 'm' && k != "m" + std::to_string(target)) {
        pass = pass && v > 100;
        least_m = least_m < 0 ? v : std::min(least_m, v);
      }
    }
  }
  return {pass, "6 inputs with 16 flips: output equals the right witness from stage " + std::to_string(worst) +
                    "; least wrong-index counter " + std::to_string(least_m) + " (q0=1/4, H=8192)"};
}

// ---------------------------------------------------------------- A7

Outcome a7() {
  const std::uint64_t H = 8192, tracked = 32, copies = 10;
  std::size_t omega_ok = 0, zeta_ok = 0, zeta_flipped = 0, zeta_tracked = 0;
  bool even_exact = true;
  for (auto kind : {LinearKind::kOmega, LinearKind::kZeta}) {
    for (std::uint64_t seed = 1; seed <= copies; ++seed) {
      const Enumeration e(seed);
      const auto spec = make_linear(kind);
      auto sess = eset_pair_operator().start();
      sess->push(diagram_stream(spec, e).real().prefix(H));
      // Elements decoded within H bits; element n needs (n+1)^2 bits.
      std::uint64_t decoded = 0;
      while ((decoded + 1) * (decoded + 1) <= H) ++decoded;
      auto all_zero = [&](std::uint64_t m) {
        for (std::uint64_t s = 0; s + m <= H; ++s)
          if (sess->at(pair(m, s))) return false;
        return true;
      };
      for (std::uint64_t i = 0; i < tracked && even_exact; ++i)
        for (std::uint64_t s = 0; s + 2 * i <= H; s += 7) even_exact = even_exact && sess->at(pair(2 * i, s)) == (s >= i);
      if (kind == LinearKind::kOmega) {
        std::size_t zeros = 0;
        bool right = true;
        for (std::uint64_t i = 0; i < tracked; ++i) {
          if (!all_zero(2 * i + 1)) continue;
          ++zeros;
          right = right && e(i) == 0;  // label 0 is the minimum of ω
        }
        omega_ok += zeros == 1 && right;
      } else {
        // Displacement stage from the labels: the first decoded element below element i.
        bool ok = true;
        for (std::uint64_t i = 0; i < tracked; ++i) {
          ++zeta_tracked;
          std::optional<std::uint64_t> stage;
          for (std::uint64_t y = 0; y < decoded && !stage; ++y)
            if (!spec->holds2(0, e(i), e(y))) stage = (std::max(i, y) + 1) * (std::max(i, y) + 1);
          if (stage && *stage < H / 2) {
            ++zeta_flipped;
            ok = ok && !all_zero(2 * i + 1);
          }
        }
        zeta_ok += ok;
      }
    }
  }
  return {omega_ok == copies && zeta_ok == copies && even_exact,
          "omega copies with exactly the minimum's odd column all-zero: " + std::to_string(omega_ok) +
              "/10; zeta copies with no displaced column all-zero: " + std::to_string(zeta_ok) + "/10 (" +
              std::to_string(zeta_flipped) + "/" + std::to_string(zeta_tracked) +
              " tracked columns displaced before H/2); even columns exact: " + (even_exact ? "yes" : "no")};
}

// ---------------------------------------------------------------- A8

Outcome a8() {
  std::string detail;
  bool pass = true;
  for (const auto& m : {constant_learner(0), constant_learner(1), least_reactive_learner()}) {
    const auto r = adversary_omega_zeta(m, 2048, 1);
    pass = pass && r.flips >= 5;
    if (!detail.empty()) detail += "; ";
    detail += m.name() + ": " + std::to_string(r.flips) + " changes, final conjecture " + r.conjectures.back().str() +
              ", " + std::to_string(r.minima_inserted) + " minima inserted";
  }
  return {pass, detail + " (H=2048 steps; a constant learner never changes its conjecture)"};
}

// ---------------------------------------------------------------- A9

Outcome a9() {
  std::mt19937_64 rng(2024);
  const std::uint64_t H = 100000;
  std::size_t sampled = 0, ok = 0;
  double worst = 0;
  while (sampled < 20) {
    auto gen = [&rng](std::size_t plen, std::size_t qlen) {
      Bits prefix(plen), period(qlen);
      for (std::size_t j = 0; j < plen; ++j) prefix[j] = rng() & 1;
      for (std::size_t j = 0; j < qlen; ++j) period[j] = rng() & 1;
      return Real::periodic(prefix, period);
    };
    const auto alpha = gen(rng() % 8, 1 + rng() % 5);
    Bits flips(rng() % 20);
    for (std::size_t j = 0; j < flips.size(); ++j) flips[j] = rng() & 1;
    const auto beta = sym_diff(alpha, Real::from_prefix(flips));
    const auto gamma = gen(rng() % 8, 1 + rng() % 5);
    if (!decide_Z0_exact(alpha, beta) || decide_Z0_exact(alpha, gamma)) continue;
    ++sampled;
    DensityCounter ag, bg;
    double max_a = 0, max_b = 0;
    for (std::uint64_t s = 0; s <= H; ++s) {
      ag.push(alpha(s) != gamma(s));
      bg.push(beta(s) != gamma(s));
      if (s >= H / 2) {
        max_a = std::max(max_a, ag.sample().value().to_double());
        max_b = std::max(max_b, bg.sample().value().to_double());
      }
    }
    const double gap = std::abs(max_a - max_b);
    worst = std::max(worst, gap);
    ok += gap <= 0.05;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", worst);
  return {ok == 20, std::to_string(ok) + "/20 triples within 0.05, largest gap " + buf + " (H=100000)"};
}

// ---------------------------------------------------------------- A10

bool is_prefix(const Bits& a, const Bits& b) { return a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin()); }

Outcome a10() {
  std::string detail;
  bool pass = true;

  // Pairing.
  {
    std::set<std::uint64_t> seen;
    bool ok = true;
    for (std::uint64_t m = 0; m < 1000; ++m)
      for (std::uint64_t k = 0; k < 1000; ++k) {
        const auto p = pair(m, k);
        ok = ok && unpair(p) == std::make_pair(m, k) && seen.insert(p).second;
      }
    // Codes of the diagonals m+k < 1000 fill an initial segment.
    std::uint64_t below = 0;
    for (auto p : seen) below += p < 1000 * 1001 / 2;
    ok = ok && below == 1000 * 1001 / 2;
    pass = pass && ok;
    detail += std::string("pairing ") + (ok ? "bijective" : "BROKEN");
  }

  // Monotone fuzz.
  {
    const auto ws = periodic_witnesses(RelationId::kE0);
    WitnessSet e3{{Real::from_columns({Real::zeros()}), Real::from_columns({Real::ones()})}, RelationId::kE3};
    const auto pairs = std::vector<FormulaPair>{least_greatest_pair()};
    const auto box = diagram_stream(make_box_structure(Real::from_descriptor("01~0")), Enumeration(8)).real();
    const auto graph = diagram_stream(make_graph_box(Real::from_descriptor("1~0")), Enumeration(8)).real();
    const auto omega = diagram_stream(make_linear(LinearKind::kOmega), Enumeration(8)).real();
    const auto zeta = diagram_stream(make_linear(LinearKind::kZeta), Enumeration(9)).real();
    const auto noisy = flipped(Real::from_descriptor("~01"), {3, 11, 12});
    struct Case {
      std::string name;
      ContinuousOperator op;
      std::vector<Real> inputs;
      std::uint64_t len;
    };
    const Learner a1 = make_learner(a1_config());
    std::vector<Case> cases = {
        {"identity", identity_operator(), {noisy}, 600},
        {"column", column_operator(2), {noisy}, 600},
        {"compose", compose(column_operator(0), column_operator(1)), {noisy}, 600},
        {"gamma", gamma_operator(least_greatest_pair(), order_signature()), {omega, zeta}, 600},
        {"merge-gamma", merge_gamma(pairs, order_signature()), {omega, zeta}, 600},
        {"order-classifier", order_classifier(), {omega, zeta}, 600},
        {"reduction-from-learner", reduction_from_learner(a1, default_transversal(2)), {omega, zeta}, 300},
        {"e1-collapse", e1_collapse(ws, identity_operator()), {noisy}, 600},
        {"e2-collapse", e2_collapse(ws, identity_operator()), {noisy}, 600},
        {"e3-finite", e3_finite_collapse(e3), {noisy}, 600},
        {"z0-collapse", z0_collapse(ws, Rational(1, 4), identity_operator()), {noisy}, 600},
        {"psi-gamma", psi_gamma(ws.betas), {noisy}, 40},
        {"box-extract:predicate", box_extract(0, BoxVariant::kPredicate), {box}, 600},
        {"box-extract:graph", box_extract(0, BoxVariant::kGraph), {graph}, 600},
        {"theta:predicate", theta(3, BoxVariant::kPredicate), {box}, 600},
        {"theta:graph", theta(2, BoxVariant::kGraph), {graph}, 600},
        {"cst-assemble", cst_assemble({psi_gamma(ws.betas)}, 3), {noisy}, 4},
        {"xi-embedding", xi_embedding(identity_operator(), WitnessSet{{Real::zeros(), Real::ones()}, RelationId::kE3}, 1),
         {noisy},
         8},
        {"eset-pair", eset_pair_operator(), {omega, zeta}, 600},
    };
    const std::size_t chains = 1000;
    std::vector<std::size_t> bad(cases.size(), 0);
    parallel_for(cases.size(), kThreads, [&](std::size_t c) {
      std::mt19937_64 rng(splitmix64(c + 77));
      const auto& cs = cases[c];
      for (std::size_t chain = 0; chain < chains; ++chain) {
        const Real& input = cs.inputs[chain % cs.inputs.size()];
        std::vector<std::uint64_t> lens(4);
        for (auto& l : lens) l = bounded_draw(rng, cs.len + 1);
        std::sort(lens.begin(), lens.end());
        const Bits full = input.prefix(lens.back());
        Bits last;
        for (std::size_t k = 0; k < lens.size(); ++k) {
          const Bits out = cs.op.apply(Bits(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(lens[k])));
          if (k > 0 && !is_prefix(last, out)) {
            ++bad[c];
            break;
          }
          last = out;
        }
      }
    });
    std::size_t failures = 0;
    std::string which;
    for (std::size_t c = 0; c < cases.size(); ++c) {
      failures += bad[c];
      if (bad[c]) which += " " + cases[c].name;
    }
    pass = pass && failures == 0;
    detail += "; monotone fuzz " + std::to_string(chains) + " chains x " + std::to_string(cases.size()) + " operators, " +
              std::to_string(failures) + " violations" + which;
  }

  // Exact deciders as equivalence relations, against a far-out comparison.
  {
    std::mt19937_64 rng(42);
    std::vector<Real> reals;
    for (std::size_t i = 0; i < 200; ++i) {
      Bits prefix(rng() % 6), period(1 + rng() % 4);
      for (std::size_t j = 0; j < prefix.size(); ++j) prefix[j] = rng() & 1;
      for (std::size_t j = 0; j < period.size(); ++j) period[j] = rng() & 1;
      reals.push_back(Real::periodic(prefix, period));
    }
    auto oracle = [](const Real& a, const Real& b) {
      for (std::uint64_t n = 64; n < 64 + 144; ++n)
        if (a(n) != b(n)) return false;
      return true;
    };
    std::size_t violations = 0;
    for (auto decide : {decide_E0_exact, decide_E2_exact, decide_Z0_exact}) {
      std::vector<std::vector<char>> rel(reals.size(), std::vector<char>(reals.size()));
      for (std::size_t i = 0; i < reals.size(); ++i)
        for (std::size_t j = 0; j < reals.size(); ++j) {
          rel[i][j] = decide(reals[i], reals[j]);
          violations += rel[i][j] != oracle(reals[i], reals[j]);
        }
      for (std::size_t i = 0; i < reals.size(); ++i) {
        violations += !rel[i][i];
        for (std::size_t j = 0; j < reals.size(); ++j) {
          violations += rel[i][j] != rel[j][i];
          if (!rel[i][j]) continue;
          for (std::size_t k = 0; k < reals.size(); ++k) violations += rel[j][k] && !rel[i][k];
        }
      }
    }
    pass = pass && violations == 0;
    detail += "; E0/E2/Z0 laws on 200 reals: " + std::to_string(violations) + " violations";
  }

  // Determinism of the suite: two runs, different thread counts, byte-identical files.
  {
    const nlohmann::json config = {
        {"trials",
         {{{"name", "learn"},
           {"kind", "learn"},
           {"family", {"omega", "omega_star"}},
           {"targets", {"omega", "omega_star"}},
           {"horizon", 1500},
           {"seeds", {1, 2, 3}},
           {"expect", "correct"}},
          {{"name", "theta"},
           {"kind", "reduce"},
           {"targets", {"box:01~0", "box:01~0"}},
           {"pipeline", {"theta"}},
           {"relation", "E3"},
           {"column_budget", 3},
           {"horizon", 400},
           {"seeds", {1, 2}}},
          {{"name", "adv"}, {"kind", "adversary"}, {"learner", "least-reactive"}, {"horizon", 200}, {"seeds", {1, 2}}}}}};
    const auto base = std::filesystem::temp_directory_path() / ("limitlearn-acceptance-" + std::to_string(::getpid()));
    std::filesystem::remove_all(base);
    SuiteOptions o1{base / "a", true, 1}, o2{base / "b", true, 4};
    const auto r1 = run_suite(config, o1);
    const auto r2 = run_suite(config, o2);
    std::size_t files = 0, differing = 0;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(base / "a")) {
      if (!entry.is_regular_file()) continue;
      ++files;
      const auto other = base / "b" / std::filesystem::relative(entry.path(), base / "a");
      std::ifstream fa(entry.path(), std::ios::binary), fb(other, std::ios::binary);
      const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
      differing += sa != sb;
    }
    std::filesystem::remove_all(base);
    const bool ok = files > 3 && differing == 0 && r1.exit_code == r2.exit_code;
    pass = pass && ok;
    detail += "; suite reruns: " + std::to_string(files) + " files, " + std::to_string(differing) + " differ";
  }
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5},
      {"A6", a6}, {"A7", a7}, {"A8", a8}, {"A9", a9}, {"A10", a10}};
  std::set<std::string> only;
  for (int i = 1; i < argc; ++i) only.insert(argv[i]);
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char t[32];
    std::snprintf(t, sizeof t, "%.1fs", secs);
    std::printf("%-4s %s  %s [%s]\n", name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str(), t);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
