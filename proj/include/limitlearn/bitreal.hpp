#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace limitlearn {

/// Finite bit string. Position 0 is the first bit.
using Bits = std::vector<bool>;

/// Error raised by every module of the library. `kind` names the contract that was violated.
class Error : public std::runtime_error {
 public:
  enum class Kind {
    kMissingDescriptor,
    kBadBudget,
    kArityMismatch,
    kTupleOutOfRange,
    kBadTransversal,
    kWitnessTooSimilar,
    kNoSeparatingColumn,
    kBadThreshold,
    kConfig,
    kParse,
    kResourceLimit,
  };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

std::string to_string(Error::Kind kind);

// Cantor pairing: pair(m,k) = (m+k)(m+k+1)/2 + k.
std::uint64_t pair(std::uint64_t m, std::uint64_t k);
std::pair<std::uint64_t, std::uint64_t> unpair(std::uint64_t n);

/// Fold-left pairing of a tuple: () -> 0, (a) -> a, (a,b,c) -> pair(pair(a,b),c).
std::uint64_t fold_pair(const std::vector<std::uint64_t>& tuple);

/// Walks the positions 0,1,2,... of the Cantor pairing in order without any square roots.
class DiagonalWalker {
 public:
  explicit DiagonalWalker(std::uint64_t start = 0);

  std::uint64_t position() const { return position_; }
  std::uint64_t column() const { return column_; }
  std::uint64_t row() const { return row_; }
  void advance();

 private:
  std::uint64_t position_;
  std::uint64_t column_;
  std::uint64_t row_;
};

/// Eventually periodic descriptor prefix ⌢ period^∞. The period is never empty.
struct PeriodicTail {
  Bits prefix;
  Bits period;

  bool bit(std::uint64_t n) const;
  /// Shortest period, then shortest prefix. Two descriptors of the same real normalize equal.
  PeriodicTail normalized() const;
  /// `prefix~period` literal, e.g. "01~1".
  std::string literal() const;

  friend bool operator==(const PeriodicTail&, const PeriodicTail&) = default;
};

/// Parses a `prefix~period` literal. A literal without '~' means bits ⌢ 0^∞.
PeriodicTail parse_descriptor(std::string_view literal);

/// An infinite bit sequence. Values are immutable and cheap to copy.
///
/// A real is either a lazy producer, an exact eventually periodic descriptor, or a finite
/// list of explicit columns (all further columns zero). Exact descriptors and explicit
/// columns propagate through `column` and `sym_diff` where possible.
class Real {
 public:
  using Producer = std::function<bool(std::uint64_t)>;

  Real();  // 0^∞

  static Real zeros();
  static Real ones();
  static Real periodic(Bits prefix, Bits period);
  static Real from_tail(PeriodicTail tail);
  static Real from_descriptor(std::string_view literal);
  static Real lazy(Producer producer, std::string label = "lazy");
  /// Finite bits followed by `fill`^∞.
  static Real from_prefix(Bits bits, bool fill = false);
  static Real from_columns(std::vector<Real> columns);

  bool bit(std::uint64_t n) const;
  bool operator()(std::uint64_t n) const { return bit(n); }

  const std::optional<PeriodicTail>& tail() const;
  bool has_tail() const { return tail().has_value(); }
  /// Explicit columns, or nullptr.
  const std::vector<Real>* columns() const;

  Bits prefix(std::uint64_t length) const;
  /// Appends bits [begin, begin+count) to `out`; faster than repeated `bit` calls.
  void append_bits(std::uint64_t begin, std::uint64_t count, Bits& out) const;

  std::string describe() const;

 private:
  struct Rep;
  explicit Real(std::shared_ptr<const Rep> rep);
  std::shared_ptr<const Rep> rep_;
};

bool bit(const Real& alpha, std::uint64_t n);
Real column(const Real& alpha, std::uint64_t m);
Real sym_diff(const Real& alpha, const Real& beta);

/// Exact nonnegative rational with 64-bit parts, kept in lowest terms.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::uint64_t numerator, std::uint64_t denominator);

  std::uint64_t numerator() const { return num_; }
  std::uint64_t denominator() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string str() const;

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

  /// Strict comparison count/total > *this without constructing a reduced fraction.
  bool below_fraction(std::uint64_t count, std::uint64_t total) const;

 private:
  std::uint64_t num_ = 0;
  std::uint64_t den_ = 1;
};

Rational parse_rational(std::string_view text);

/// dn(α,β;s): disagreements at positions ≤ s over s+1.
struct DensitySample {
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 1;

  Rational value() const { return Rational(numerator, denominator); }
};

DensitySample density(const Real& alpha, const Real& beta, std::uint64_t s);

/// Incremental dn(α,β;t) for t = 0,1,2,...
class DensityCounter {
 public:
  void push(bool disagree) {
    ones_ += disagree ? 1 : 0;
    ++seen_;
  }
  std::uint64_t ones() const { return ones_; }
  std::uint64_t seen() const { return seen_; }
  DensitySample sample() const { return {ones_, seen_}; }

 private:
  std::uint64_t ones_ = 0;
  std::uint64_t seen_ = 0;
};

/// Density of the periodic part of an exact tail.
Rational periodic_density(const PeriodicTail& tail);

Bits bits_from_string(std::string_view text);
std::string bits_to_string(const Bits& bits);

}  // namespace limitlearn
