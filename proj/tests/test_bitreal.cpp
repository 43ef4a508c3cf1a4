#include "doctest.h"

#include <random>

#include "limitlearn/bitreal.hpp"

using namespace limitlearn;

namespace {

// Brute-force pairing oracle: walk the diagonals and record every (m,k).
std::vector<std::pair<std::uint64_t, std::uint64_t>> diagonal_table(std::uint64_t limit) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  for (std::uint64_t d = 0; out.size() < limit; ++d) {
    for (std::uint64_t k = 0; k <= d && out.size() < limit; ++k) out.push_back({d - k, k});
  }
  return out;
}

Real random_real(std::mt19937_64& rng) {
  Bits prefix(rng() % 9), period(1 + rng() % 6);
  for (std::size_t i = 0; i < prefix.size(); ++i) prefix[i] = rng() & 1;
  for (std::size_t i = 0; i < period.size(); ++i) period[i] = rng() & 1;
  return Real::periodic(prefix, period);
}

}  // namespace

TEST_CASE("pairing closed form") {
  CHECK(pair(0, 0) == 0);
  CHECK(pair(1, 0) == 1);
  CHECK(pair(0, 1) == 2);
  // Frozen from the diagonal oracle below: 7 = 6 + 1 sits on diagonal 3 with k = 1.
  CHECK(unpair(7) == std::make_pair<std::uint64_t, std::uint64_t>(2, 1));
  CHECK(pair(1, 2) == 8);
}

TEST_CASE("pairing agrees with diagonal enumeration") {
  auto table = diagonal_table(5000);
  DiagonalWalker w;
  for (std::uint64_t n = 0; n < table.size(); ++n, w.advance()) {
    CHECK(unpair(n) == table[n]);
    CHECK(pair(table[n].first, table[n].second) == n);
    CHECK(w.position() == n);
    CHECK(w.column() == table[n].first);
    CHECK(w.row() == table[n].second);
  }
}

TEST_CASE("pairing bijective and monotone below 1000") {
  for (std::uint64_t m = 0; m < 1000; ++m) {
    for (std::uint64_t k = 0; k < 1000; ++k) {
      const auto n = pair(m, k);
      const auto back = unpair(n);
      if (back.first != m || back.second != k) FAIL("unpair(pair(" << m << "," << k << "))");
      if (m > 0 && pair(m - 1, k) >= n) FAIL("not monotone in m");
      if (k > 0 && pair(m, k - 1) >= n) FAIL("not monotone in k");
    }
  }
  CHECK(unpair(pair(123456789, 987654321)) == std::make_pair<std::uint64_t, std::uint64_t>(123456789, 987654321));
}

TEST_CASE("fold pair") {
  CHECK(fold_pair({}) == 0);
  CHECK(fold_pair({5}) == 5);
  CHECK(fold_pair({1, 0, 2}) == pair(pair(1, 0), 2));
}

TEST_CASE("bits of descriptors") {
  CHECK_FALSE(bit(Real::zeros(), 17));
  auto r = Real::from_descriptor("01~1");
  CHECK_FALSE(r(0));
  CHECK(r(1));
  CHECK(r(5));
  CHECK(parse_descriptor("0101").period == Bits{false});
  CHECK(parse_descriptor("1~01").literal() == "1~01");
  CHECK_THROWS_AS(parse_descriptor("01~"), Error);
  CHECK_THROWS_AS(parse_descriptor("0x~1"), Error);
}

TEST_CASE("normalization") {
  PeriodicTail t{bits_from_string("0101"), bits_from_string("0101")};
  auto n = t.normalized();
  CHECK(n.prefix.empty());
  CHECK(n.period == bits_from_string("01"));
  PeriodicTail u{bits_from_string("0111"), bits_from_string("1")};
  CHECK(u.normalized().prefix == bits_from_string("0"));
  for (std::uint64_t i = 0; i < 40; ++i) CHECK(t.bit(i) == n.bit(i));
}

TEST_CASE("columns") {
  CHECK(column(Real::zeros(), 3).has_tail());
  CHECK(column(Real::zeros(), 3).prefix(50) == Bits(50, false));

  const auto target = pair(2, 5);
  auto single = Real::lazy([target](std::uint64_t n) { return n == target; });
  auto c2 = column(single, 2);
  for (std::uint64_t k = 0; k < 100; ++k) CHECK(c2(k) == (k == 5));

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto a = random_real(rng);
    for (std::uint64_t m = 0; m < 64; ++m) {
      auto col = column(a, m);
      REQUIRE(col.has_tail());
      for (std::uint64_t k = 0; k < 64; ++k) {
        if (col(k) != a(pair(m, k))) FAIL("column mismatch m=" << m << " k=" << k);
      }
    }
  }
}

TEST_CASE("explicit columns") {
  auto r = Real::from_columns({Real::zeros(), Real::ones(), Real::from_descriptor("~01")});
  for (std::uint64_t n = 0; n < 500; ++n) {
    auto [m, k] = unpair(n);
    const bool expect = m == 1 ? true : (m == 2 ? (k % 2 == 1) : false);
    CHECK(r(n) == expect);
  }
  REQUIRE(r.columns() != nullptr);
  CHECK(column(r, 7).prefix(20) == Bits(20, false));
}

TEST_CASE("symmetric difference") {
  auto a = Real::from_descriptor("~01");
  CHECK(sym_diff(a, a).prefix(64) == Bits(64, false));
  auto x = Real::from_descriptor("~0101");
  auto y = Real::from_descriptor("~0011");
  CHECK(bits_to_string(sym_diff(x, y).prefix(4)) == "0110");

  auto d = sym_diff(Real::from_descriptor("~01"), Real::from_descriptor("~0011"));
  REQUIRE(d.has_tail());
  CHECK(4 % d.tail()->period.size() == 0);
  for (std::uint64_t i = 0; i < 64; ++i) CHECK(d(i) == (Real::from_descriptor("~01")(i) != Real::from_descriptor("~0011")(i)));

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = random_real(rng), q = random_real(rng);
    CHECK(sym_diff(p, q).prefix(200) == sym_diff(q, p).prefix(200));
  }
}

TEST_CASE("descriptor agreement") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto r = random_real(rng);
    const auto& t = *r.tail();
    const std::uint64_t span = 10 * (t.prefix.size() + t.period.size());
    for (std::uint64_t n = 0; n < span; ++n) CHECK(r(n) == t.bit(n));
  }
}

TEST_CASE("density") {
  auto a = Real::from_descriptor("~01");
  CHECK(density(a, a, 100).numerator == 0);
  CHECK(density(a, a, 100).denominator == 101);
  auto d = density(Real::from_descriptor("1010~0"), Real::zeros(), 3);
  CHECK(d.value() == Rational(2, 4));
  CHECK(density(Real::ones(), Real::zeros(), 99).value() == Rational(1, 1));

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = random_real(rng), q = random_real(rng);
    for (std::uint64_t s = 0; s < 200; ++s) {
      const double now = density(p, q, s).value().to_double();
      const double next = density(p, q, s + 1).value().to_double();
      CHECK(std::abs(next - now) <= 1.0 / static_cast<double>(s + 1) + 1e-12);
    }
  }
  CHECK(periodic_density(parse_descriptor("~0001")) == Rational(1, 4));
}

TEST_CASE("rationals") {
  CHECK(parse_rational("1/4") == Rational(1, 4));
  CHECK(parse_rational("0.25") == Rational(1, 4));
  CHECK(parse_rational("2") == Rational(2, 1));
  CHECK(Rational(1, 3) < Rational(1, 2));
  CHECK(Rational(1, 4).below_fraction(2, 7));
  CHECK_FALSE(Rational(1, 4).below_fraction(1, 4));
  CHECK_THROWS_AS(Rational(1, 0), Error);
}
