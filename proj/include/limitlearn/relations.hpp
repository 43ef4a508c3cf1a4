#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "limitlearn/bitreal.hpp"

namespace limitlearn {

enum class RelationId { kE0, kE1, kE2, kE3, kZ0, kESet };

std::string to_string(RelationId rel);
RelationId parse_relation(std::string_view name);

struct HorizonVerdict {
  enum class Kind { kEquivalentSoFar, kSeparated, kInconclusive };

  Kind verdict = Kind::kInconclusive;
  /// Position for E0/E2/Z0, column index for E1/E3/ESET.
  std::optional<std::uint64_t> witness;
  std::uint64_t horizon = 0;

  bool separated() const { return verdict == Kind::kSeparated; }
  bool equivalent() const { return verdict == Kind::kEquivalentSoFar; }
};

std::string to_string(HorizonVerdict::Kind kind);

// Exact deciders on eventually periodic reals. On this class E0, E2 and Z0 coincide:
// the difference is eventually periodic, so it is finite iff its period is all zero,
// and otherwise both the harmonic sum diverges and the density is positive.
bool decide_E0_exact(const Real& alpha, const Real& beta);
bool decide_E2_exact(const Real& alpha, const Real& beta);
bool decide_Z0_exact(const Real& alpha, const Real& beta);

struct ApproxOptions {
  double e2_threshold = 5.0;
  double z0_epsilon = 0.05;
};

/// Horizon approximant of `rel`. Only positions below `horizon` are inspected; column based
/// relations look at columns below `column_budget` and at the bits of each column whose
/// position lies below `horizon`.
HorizonVerdict approx_relation(RelationId rel, const Real& alpha, const Real& beta, std::uint64_t horizon,
                               std::uint64_t column_budget, const ApproxOptions& options = {});

/// Same as above on finite prefixes, for operator outputs. The horizon is min(|a|, |b|).
HorizonVerdict approx_relation(RelationId rel, const Bits& a, const Bits& b, std::uint64_t column_budget,
                               const ApproxOptions& options = {});

/// E0 approximant on two equally long bit strings: disagreement in the final quarter separates.
HorizonVerdict approx_e0_bits(const Bits& a, const Bits& b);

}  // namespace limitlearn
