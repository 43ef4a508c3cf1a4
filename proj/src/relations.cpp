#include "limitlearn/relations.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

namespace limitlearn {

std::string to_string(RelationId rel) {
  switch (rel) {
    case RelationId::kE0: return "E0";
    case RelationId::kE1: return "E1";
    case RelationId::kE2: return "E2";
    case RelationId::kE3: return "E3";
    case RelationId::kZ0: return "Z0";
    case RelationId::kESet: return "ESET";
  }
  return "?";
}

RelationId parse_relation(std::string_view name) {
  std::string n(name);
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (n == "E0") return RelationId::kE0;
  if (n == "E1") return RelationId::kE1;
  if (n == "E2") return RelationId::kE2;
  if (n == "E3") return RelationId::kE3;
  if (n == "Z0") return RelationId::kZ0;
  if (n == "ESET" || n == "E_SET") return RelationId::kESet;
  throw Error(Error::Kind::kConfig, "unknown relation '" + std::string(name) + "'");
}

std::string to_string(HorizonVerdict::Kind kind) {
  switch (kind) {
    case HorizonVerdict::Kind::kEquivalentSoFar: return "equivalent-so-far";
    case HorizonVerdict::Kind::kSeparated: return "separated";
    case HorizonVerdict::Kind::kInconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

const PeriodicTail& require_tail(const Real& r) {
  if (!r.has_tail()) throw Error(Error::Kind::kMissingDescriptor, "real '" + r.describe() + "' has no exact descriptor");
  return *r.tail();
}

// True iff the periodic part of alpha xor beta is all zero.
bool finite_difference(const Real& alpha, const Real& beta) {
  const auto& a = require_tail(alpha);
  const auto& b = require_tail(beta);
  const std::uint64_t start = std::max(a.prefix.size(), b.prefix.size());
  const std::uint64_t span = std::lcm<std::uint64_t>(a.period.size(), b.period.size());
  for (std::uint64_t n = start; n < start + span; ++n) {
    if (a.bit(n) != b.bit(n)) return false;
  }
  return true;
}

HorizonVerdict make(HorizonVerdict::Kind k, std::uint64_t horizon, std::optional<std::uint64_t> w = std::nullopt) {
  return HorizonVerdict{k, w, horizon};
}

std::vector<Bits> split_columns(const Bits& bits, std::uint64_t horizon, std::uint64_t budget) {
  std::vector<Bits> cols(budget);
  DiagonalWalker w;
  for (std::uint64_t p = 0; p < horizon; ++p, w.advance()) {
    if (w.column() < budget) cols[w.column()].push_back(bits[p]);
  }
  return cols;
}

// (eventual value, index after the last disagreement with it); value 2 marks an unsettled column.
std::pair<int, std::uint64_t> column_signature(const Bits& c) {
  const std::size_t n = c.size();
  if (n < 4) return {2, 0};
  const bool v = c[n - 1];
  for (std::size_t i = n - n / 4; i < n; ++i) {
    if (c[i] != v) return {2, 0};
  }
  std::uint64_t after = 0;
  for (std::size_t i = n; i-- > 0;) {
    if (c[i] != v) {
      after = i + 1;
      break;
    }
  }
  return {v ? 1 : 0, after};
}

}  // namespace

bool decide_E0_exact(const Real& alpha, const Real& beta) { return finite_difference(alpha, beta); }
bool decide_E2_exact(const Real& alpha, const Real& beta) { return finite_difference(alpha, beta); }
bool decide_Z0_exact(const Real& alpha, const Real& beta) { return finite_difference(alpha, beta); }

HorizonVerdict approx_e0_bits(const Bits& a, const Bits& b) {
  const std::uint64_t h = std::min(a.size(), b.size());
  if (h < 4) return make(HorizonVerdict::Kind::kInconclusive, h);
  for (std::uint64_t i = h; i-- > h - h / 4;) {
    if (a[i] != b[i]) return make(HorizonVerdict::Kind::kSeparated, h, i);
  }
  return make(HorizonVerdict::Kind::kEquivalentSoFar, h);
}

HorizonVerdict approx_relation(RelationId rel, const Bits& a, const Bits& b, std::uint64_t column_budget,
                               const ApproxOptions& options) {
  using K = HorizonVerdict::Kind;
  const std::uint64_t h = std::min(a.size(), b.size());
  const bool column_based = rel == RelationId::kE1 || rel == RelationId::kE3 || rel == RelationId::kESet;
  if (column_based && column_budget == 0) throw Error(Error::Kind::kBadBudget, "column budget must be positive");

  switch (rel) {
    case RelationId::kE0: return approx_e0_bits(a, b);

    case RelationId::kE2: {
      if (h == 0) return make(K::kInconclusive, h);
      long double sum = 0;
      for (std::uint64_t k = 0; k < h; ++k) {
        if (a[k] != b[k]) sum += 1.0L / static_cast<long double>(k + 1);
        if (sum > options.e2_threshold) return make(K::kSeparated, h, k);
      }
      return make(K::kEquivalentSoFar, h);
    }

    case RelationId::kZ0: {
      if (h < 4) return make(K::kInconclusive, h);
      const std::uint64_t start = h - h / 4;
      std::uint64_t ones = 0;
      std::optional<std::uint64_t> last;
      for (std::uint64_t i = start; i < h; ++i) {
        if (a[i] != b[i]) {
          ++ones;
          last = i;
        }
      }
      const double d = static_cast<double>(ones) / static_cast<double>(h - start);
      return d > options.z0_epsilon ? make(K::kSeparated, h, last) : make(K::kEquivalentSoFar, h);
    }

    case RelationId::kE1: {
      auto ca = split_columns(a, h, column_budget);
      auto cb = split_columns(b, h, column_budget);
      bool any = false;
      for (std::uint64_t m = column_budget / 2; m < column_budget; ++m) {
        if (ca[m].empty()) continue;
        any = true;
        if (ca[m] != cb[m]) return make(K::kSeparated, h, m);
      }
      return any ? make(K::kEquivalentSoFar, h) : make(K::kInconclusive, h);
    }

    case RelationId::kE3: {
      auto ca = split_columns(a, h, column_budget);
      auto cb = split_columns(b, h, column_budget);
      bool inconclusive = false;
      for (std::uint64_t m = 0; m < column_budget; ++m) {
        auto v = approx_e0_bits(ca[m], cb[m]);
        if (v.separated()) return make(K::kSeparated, h, m);
        if (v.verdict == K::kInconclusive) inconclusive = true;
      }
      return inconclusive ? make(K::kInconclusive, h) : make(K::kEquivalentSoFar, h);
    }

    case RelationId::kESet: {
      auto ca = split_columns(a, h, column_budget);
      auto cb = split_columns(b, h, column_budget);
      std::vector<std::pair<int, std::uint64_t>> sa, sb;
      for (std::uint64_t m = 0; m < column_budget; ++m) {
        sa.push_back(column_signature(ca[m]));
        sb.push_back(column_signature(cb[m]));
      }
      std::set<std::pair<int, std::uint64_t>> set_a(sa.begin(), sa.end()), set_b(sb.begin(), sb.end());
      if (set_a == set_b) return make(K::kEquivalentSoFar, h);
      for (std::uint64_t m = 0; m < column_budget; ++m) {
        if (!set_b.count(sa[m]) || !set_a.count(sb[m])) return make(K::kInconclusive, h, m);
      }
      return make(K::kInconclusive, h);
    }
  }
  return make(K::kInconclusive, h);
}

HorizonVerdict approx_relation(RelationId rel, const Real& alpha, const Real& beta, std::uint64_t horizon,
                               std::uint64_t column_budget, const ApproxOptions& options) {
  if (horizon == 0) return make(HorizonVerdict::Kind::kInconclusive, 0);
  return approx_relation(rel, alpha.prefix(horizon), beta.prefix(horizon), column_budget, options);
}

}  // namespace limitlearn
