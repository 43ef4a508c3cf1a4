#include "doctest.h"

#include <random>

#include "limitlearn/formula.hpp"
#include "limitlearn/learners.hpp"
#include "limitlearn/operator.hpp"

using namespace limitlearn;

namespace {

FinitePrefixStructure chain(std::size_t n) {
  return decode_prefix(order_signature(), diagram_stream(make_linear(LinearKind::kOmega), Enumeration()).prefix_elements(n));
}

// Least code over all tuples of the domain, straight from the definition.
std::optional<std::uint64_t> brute_least(const Sigma2Formula& f, const FinitePrefixStructure& fin, std::uint64_t stage) {
  const std::size_t e = f.exists_arity();
  const std::uint64_t n = fin.size();
  if (e == 0) return sigma2_compat(f, fin, {}, stage) ? std::optional<std::uint64_t>(0) : std::nullopt;
  std::optional<std::uint64_t> best;
  if (n == 0) return best;
  std::vector<std::uint64_t> t(e, 0);
  while (true) {
    if (sigma2_compat(f, fin, t, stage)) {
      const auto c = fold_pair(t);
      if (!best || c < *best) best = c;
    }
    std::size_t p = e;
    while (p > 0 && t[p - 1] == n - 1) t[--p] = 0;
    if (p == 0) return best;
    ++t[p - 1];
  }
}

void check_tracker(const Sigma2Formula& f, const SpecPtr& spec, std::uint64_t seed, std::size_t elements) {
  const auto& sig = spec->signature();
  auto stream = diagram_stream(spec, Enumeration(seed));
  auto cur = stream.cursor();
  FinitePrefixStructure fin(sig);
  CompatTracker tracker(f, sig);
  for (std::size_t n = 0; n < elements; ++n) {
    Bits layer;
    cur.append_layer(layer);
    fin.feed(layer);
    tracker.update(fin, fin.size());
    REQUIRE(tracker.least_code() == brute_least(f, fin, fin.size()));
  }
}

bool is_prefix(const Bits& a, const Bits& b) { return a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin()); }

void fuzz_monotone(const ContinuousOperator& op, const Real& input, std::uint64_t seed, std::uint64_t max_len) {
  std::mt19937_64 rng(seed);
  std::uint64_t len = 0;
  Bits last = op.apply({});
  while (len < max_len) {
    len += 1 + bounded_draw(rng, 97);
    const Bits next = op.apply(input.prefix(len));
    REQUIRE(is_prefix(last, next));
    last = next;
  }
}

}  // namespace

TEST_CASE("parse: builtin and s-expression forms agree") {
  auto a = builtin_formula("has_least");
  auto b = parse_sigma2("(exists (x) (forall (y) leq(x,y)))");
  CHECK(a.exists_arity() == 1);
  CHECK(b.exists_arity() == 1);
  REQUIRE(b.conjuncts().size() == 1);
  CHECK(b.conjuncts()[0].forall_arity == 1);
  auto fin = chain(5);
  for (std::uint64_t x = 0; x < 5; ++x) CHECK(sigma2_compat(a, fin, {x}) == sigma2_compat(b, fin, {x}));
  CHECK(resolve_formula("has_greatest").exists_arity() == 1);
  CHECK_THROWS_AS(parse_sigma2("(exists (x) (forall (y) leq(x,"), Error);
  CHECK_THROWS_AS(builtin_formula("nope"), Error);
}

TEST_CASE("parse: numeric first argument folds into the relation name") {
  auto f = parse_sigma2("(exists (x) box(2,x))");
  REQUIRE(f.conjuncts().size() == 1);
  CHECK(f.conjuncts()[0].matrix.op == Matrix::Op::kAtom);
  CHECK(f.conjuncts()[0].matrix.relation == "box2");
  CHECK(f.conjuncts()[0].matrix.args.size() == 1);
}

TEST_CASE("sigma2_compat on the chain 0<1<2") {
  auto f = builtin_formula("has_least");
  auto fin = chain(3);
  CHECK(sigma2_compat(f, fin, {0}));
  // y = 0 is the counterexample for x = 1.
  CHECK_FALSE(fin.holds2(0, 1, 0));
  CHECK_FALSE(sigma2_compat(f, fin, {1}));
  CHECK_FALSE(sigma2_compat(f, fin, {2}));
  CHECK_THROWS_AS(sigma2_compat(f, fin, {3}), Error);
  CHECK_THROWS_AS(sigma2_compat(f, fin, {0, 1}), Error);
}

TEST_CASE("sigma2_compat: empty structure leaves no tuple") {
  FinitePrefixStructure empty(order_signature());
  CompatTracker t(builtin_formula("has_least"), order_signature());
  CHECK_FALSE(t.least_code().has_value());
  CHECK(brute_least(builtin_formula("has_least"), empty, 0) == std::nullopt);
}

TEST_CASE("sigma2_compat: atoms outside the signature are false, arity mismatch throws") {
  auto fin = chain(3);
  CHECK_FALSE(sigma2_compat(parse_sigma2("(exists (x) edge(x,x))"), fin, {0}));
  CHECK(sigma2_compat(parse_sigma2("(exists (x) (not edge(x,x)))"), fin, {0}));
  CHECK_THROWS_AS(sigma2_compat(parse_sigma2("(exists (x) leq(x))"), fin, {0}), Error);
}

TEST_CASE("staged conjuncts are enforced from their reveal stage") {
  auto f = parse_sigma2("(exists (x) (forall (y) true) (forall (y) leq(x,y)))").staged();
  CHECK(f.visible(0) == 1);
  CHECK(f.visible(1) == 2);
  auto fin = chain(3);
  CHECK(sigma2_compat(f, fin, {2}, 0));
  CHECK(sigma2_compat(f, fin, {2}, 1) == false);
}

TEST_CASE("CompatTracker agrees with exhaustive search") {
  const std::vector<std::string> formulas = {
      "has_least",
      "has_greatest",
      "(exists (x y) (forall (z) (or leq(z,x) leq(y,z))))",
      "(exists (x y) (not eq(x,y)) (forall (z) (implies (and leq(x,z) leq(z,y)) (or eq(z,x) eq(z,y)))))",
      "(exists () (forall (y z) (or leq(y,z) leq(z,y))))",
  };
  const std::vector<LinearKind> kinds = {LinearKind::kOmega, LinearKind::kOmegaStar, LinearKind::kZeta,
                                         LinearKind::kEta, LinearKind::kOnePlusEta};
  for (const auto& text : formulas) {
    for (auto k : kinds) {
      for (std::uint64_t seed : {1u, 7u}) check_tracker(resolve_formula(text), make_linear(k), seed, 24);
    }
  }
  // Staged formula on an unseeded copy.
  check_tracker(parse_sigma2("(exists (x) (forall (y) true) (forall (y) leq(x,y)) (forall (y) leq(y,y)))").staged(),
                make_linear(LinearKind::kZeta), 3, 20);
}

TEST_CASE("columnar session needs a column") {
  CHECK_THROWS_AS(merge_gamma({}, order_signature()), Error);
}

TEST_CASE("identity, column and compose operators") {
  auto alpha = Real::periodic(bits_from_string("1101"), bits_from_string("011"));
  CHECK(run_operator(identity_operator(), alpha, 100) == alpha.prefix(100));
  auto col = run_operator(column_operator(2), alpha, 2000);
  REQUIRE(col.size() >= 20);
  auto c2 = column(alpha, 2);
  for (std::size_t k = 0; k < col.size(); ++k) CHECK(col[k] == c2(k));
  auto both = compose(column_operator(0), column_operator(1));
  auto out = run_operator(both, alpha, 5000);
  auto c10 = column(column(alpha, 1), 0);
  REQUIRE(out.size() >= 5);
  for (std::size_t k = 0; k < out.size(); ++k) CHECK(out[k] == c10(k));
}

TEST_CASE("operators are monotone on random prefix chains") {
  std::mt19937_64 rng(11);
  auto omega = diagram_stream(make_linear(LinearKind::kOmega), Enumeration(5)).real();
  auto zeta = diagram_stream(make_linear(LinearKind::kZeta), Enumeration(6)).real();
  auto pairs = std::vector<FormulaPair>{least_greatest_pair(),
                                        {builtin_formula("has_greatest"), builtin_formula("has_least")}};
  std::vector<ContinuousOperator> ops = {identity_operator(), column_operator(1), order_classifier(),
                                         merge_gamma(pairs, order_signature()),
                                         compose(column_operator(0), merge_gamma(pairs, order_signature()))};
  for (const auto& op : ops) {
    for (const auto& input : {omega, zeta}) fuzz_monotone(op, input, rng(), 3000);
  }
}
