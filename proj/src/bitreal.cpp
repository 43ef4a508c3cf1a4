#include "limitlearn/bitreal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace limitlearn {

std::string to_string(Error::Kind kind) {
  switch (kind) {
    case Error::Kind::kMissingDescriptor: return "MissingDescriptor";
    case Error::Kind::kBadBudget: return "BadBudget";
    case Error::Kind::kArityMismatch: return "ArityMismatch";
    case Error::Kind::kTupleOutOfRange: return "TupleOutOfRange";
    case Error::Kind::kBadTransversal: return "BadTransversal";
    case Error::Kind::kWitnessTooSimilar: return "WitnessTooSimilar";
    case Error::Kind::kNoSeparatingColumn: return "NoSeparatingColumn";
    case Error::Kind::kBadThreshold: return "BadThreshold";
    case Error::Kind::kConfig: return "ConfigError";
    case Error::Kind::kParse: return "ParseError";
    case Error::Kind::kResourceLimit: return "ResourceLimit";
  }
  return "Unknown";
}

std::uint64_t pair(std::uint64_t m, std::uint64_t k) {
  const std::uint64_t d = m + k;
  return d * (d + 1) / 2 + k;
}

std::pair<std::uint64_t, std::uint64_t> unpair(std::uint64_t n) {
  // d = floor((sqrt(8n+1)-1)/2), corrected for rounding.
  auto d = static_cast<std::uint64_t>((std::sqrt(8.0L * static_cast<long double>(n) + 1.0L) - 1.0L) / 2.0L);
  while (d * (d + 1) / 2 > n) --d;
  while ((d + 1) * (d + 2) / 2 <= n) ++d;
  const std::uint64_t k = n - d * (d + 1) / 2;
  return {d - k, k};
}

std::uint64_t fold_pair(const std::vector<std::uint64_t>& tuple) {
  if (tuple.empty()) return 0;
  std::uint64_t acc = tuple[0];
  for (std::size_t i = 1; i < tuple.size(); ++i) acc = pair(acc, tuple[i]);
  return acc;
}

DiagonalWalker::DiagonalWalker(std::uint64_t start) : position_(start) {
  auto [m, k] = unpair(start);
  column_ = m;
  row_ = k;
}

void DiagonalWalker::advance() {
  ++position_;
  if (column_ == 0) {
    column_ = row_ + 1;
    row_ = 0;
  } else {
    --column_;
    ++row_;
  }
}

// ---------------------------------------------------------------- PeriodicTail

bool PeriodicTail::bit(std::uint64_t n) const {
  if (n < prefix.size()) return prefix[n];
  return period[(n - prefix.size()) % period.size()];
}

PeriodicTail PeriodicTail::normalized() const {
  PeriodicTail out = *this;
  const std::size_t p = out.period.size();
  for (std::size_t d = 1; d < p; ++d) {
    if (p % d != 0) continue;
    bool ok = true;
    for (std::size_t i = d; i < p && ok; ++i) ok = out.period[i] == out.period[i - d];
    if (ok) {
      out.period.resize(d);
      break;
    }
  }
  while (!out.prefix.empty() && out.prefix.back() == out.period.back()) {
    bool last = out.period.back();
    out.period.pop_back();
    out.period.insert(out.period.begin(), last);
    out.prefix.pop_back();
  }
  return out;
}

std::string PeriodicTail::literal() const { return bits_to_string(prefix) + "~" + bits_to_string(period); }

PeriodicTail parse_descriptor(std::string_view literal) {
  PeriodicTail t;
  auto tilde = literal.find('~');
  if (tilde == std::string_view::npos) {
    t.prefix = bits_from_string(literal);
    t.period = {false};
    return t;
  }
  t.prefix = bits_from_string(literal.substr(0, tilde));
  t.period = bits_from_string(literal.substr(tilde + 1));
  if (t.period.empty()) throw Error(Error::Kind::kParse, "descriptor '" + std::string(literal) + "' has an empty period");
  return t;
}

Bits bits_from_string(std::string_view text) {
  Bits out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == '0') out.push_back(false);
    else if (c == '1') out.push_back(true);
    else throw Error(Error::Kind::kParse, "not a bit string: '" + std::string(text) + "'");
  }
  return out;
}

std::string bits_to_string(const Bits& bits) {
  std::string s;
  s.reserve(bits.size());
  for (bool b : bits) s.push_back(b ? '1' : '0');
  return s;
}

// ---------------------------------------------------------------- Real

struct Real::Rep {
  Producer producer;
  std::optional<PeriodicTail> tail;
  std::optional<std::vector<Real>> columns;
  std::string label;
};

Real::Real() : Real(zeros()) {}
Real::Real(std::shared_ptr<const Rep> rep) : rep_(std::move(rep)) {}

Real Real::zeros() {
  static const Real z = from_tail(PeriodicTail{{}, {false}});
  return z;
}

Real Real::ones() {
  static const Real o = from_tail(PeriodicTail{{}, {true}});
  return o;
}

Real Real::periodic(Bits prefix, Bits period) { return from_tail(PeriodicTail{std::move(prefix), std::move(period)}); }

Real Real::from_tail(PeriodicTail tail) {
  if (tail.period.empty()) throw Error(Error::Kind::kParse, "empty period");
  auto rep = std::make_shared<Rep>();
  rep->tail = tail.normalized();
  rep->label = rep->tail->literal();
  return Real(std::move(rep));
}

Real Real::from_descriptor(std::string_view literal) { return from_tail(parse_descriptor(literal)); }

Real Real::lazy(Producer producer, std::string label) {
  auto rep = std::make_shared<Rep>();
  rep->producer = std::move(producer);
  rep->label = std::move(label);
  return Real(std::move(rep));
}

Real Real::from_prefix(Bits bits, bool fill) { return periodic(std::move(bits), Bits{fill}); }

Real Real::from_columns(std::vector<Real> columns) {
  auto rep = std::make_shared<Rep>();
  bool all_zero = true;
  for (const auto& c : columns) {
    if (!c.has_tail() || c.tail()->prefix.size() != 0 || c.tail()->period != Bits{false}) all_zero = false;
  }
  if (all_zero) return zeros();
  rep->label = "columns[" + std::to_string(columns.size()) + "]";
  rep->columns = std::move(columns);
  return Real(std::move(rep));
}

bool Real::bit(std::uint64_t n) const {
  const Rep& r = *rep_;
  if (r.tail) return r.tail->bit(n);
  if (r.columns) {
    auto [m, k] = unpair(n);
    return m < r.columns->size() ? (*r.columns)[m].bit(k) : false;
  }
  return r.producer(n);
}

const std::optional<PeriodicTail>& Real::tail() const { return rep_->tail; }

const std::vector<Real>* Real::columns() const { return rep_->columns ? &*rep_->columns : nullptr; }

Bits Real::prefix(std::uint64_t length) const {
  Bits out;
  out.reserve(length);
  append_bits(0, length, out);
  return out;
}

void Real::append_bits(std::uint64_t begin, std::uint64_t count, Bits& out) const {
  const Rep& r = *rep_;
  if (r.tail) {
    const auto& t = *r.tail;
    std::uint64_t n = begin;
    const std::uint64_t end = begin + count;
    for (; n < end && n < t.prefix.size(); ++n) out.push_back(t.prefix[n]);
    if (n < end) {
      std::size_t idx = (n - t.prefix.size()) % t.period.size();
      for (; n < end; ++n) {
        out.push_back(t.period[idx]);
        if (++idx == t.period.size()) idx = 0;
      }
    }
    return;
  }
  if (r.columns) {
    DiagonalWalker w(begin);
    const auto& cols = *r.columns;
    for (std::uint64_t i = 0; i < count; ++i, w.advance()) {
      out.push_back(w.column() < cols.size() ? cols[w.column()].bit(w.row()) : false);
    }
    return;
  }
  for (std::uint64_t i = 0; i < count; ++i) out.push_back(r.producer(begin + i));
}

std::string Real::describe() const { return rep_->label; }

bool bit(const Real& alpha, std::uint64_t n) { return alpha.bit(n); }

Real column(const Real& alpha, std::uint64_t m) {
  if (const auto* cols = alpha.columns()) return m < cols->size() ? (*cols)[m] : Real::zeros();
  if (alpha.has_tail()) {
    const PeriodicTail& t = *alpha.tail();
    const std::uint64_t plen = t.prefix.size();
    std::uint64_t k0 = 0;
    while (pair(m, k0) < plen) ++k0;
    // pair(m,k+2P) - pair(m,k) is a multiple of P, so the column repeats with period 2P from k0 on.
    const std::uint64_t period = 2 * t.period.size();
    Bits prefix, per;
    for (std::uint64_t k = 0; k < k0; ++k) prefix.push_back(t.bit(pair(m, k)));
    for (std::uint64_t k = k0; k < k0 + period; ++k) per.push_back(t.bit(pair(m, k)));
    return Real::periodic(std::move(prefix), std::move(per));
  }
  return Real::lazy([alpha, m](std::uint64_t k) { return alpha.bit(pair(m, k)); },
                    alpha.describe() + "^[" + std::to_string(m) + "]");
}

namespace {
constexpr std::uint64_t kMaxExactPeriod = std::uint64_t{1} << 22;
}

Real sym_diff(const Real& alpha, const Real& beta) {
  if (alpha.has_tail() && beta.has_tail()) {
    const auto& a = *alpha.tail();
    const auto& b = *beta.tail();
    const std::uint64_t lcm = std::lcm<std::uint64_t>(a.period.size(), b.period.size());
    if (lcm <= kMaxExactPeriod) {
      const std::uint64_t plen = std::max(a.prefix.size(), b.prefix.size());
      Bits prefix, period;
      prefix.reserve(plen);
      period.reserve(lcm);
      for (std::uint64_t n = 0; n < plen; ++n) prefix.push_back(a.bit(n) != b.bit(n));
      for (std::uint64_t n = plen; n < plen + lcm; ++n) period.push_back(a.bit(n) != b.bit(n));
      return Real::periodic(std::move(prefix), std::move(period));
    }
  }
  const auto* ca = alpha.columns();
  const auto* cb = beta.columns();
  if (ca && cb) {
    std::vector<Real> cols(std::max(ca->size(), cb->size()));
    for (std::size_t m = 0; m < cols.size(); ++m) {
      cols[m] = sym_diff(m < ca->size() ? (*ca)[m] : Real::zeros(), m < cb->size() ? (*cb)[m] : Real::zeros());
    }
    return Real::from_columns(std::move(cols));
  }
  return Real::lazy([alpha, beta](std::uint64_t n) { return alpha.bit(n) != beta.bit(n); },
                    "(" + alpha.describe() + " xor " + beta.describe() + ")");
}

// ---------------------------------------------------------------- Rational

Rational::Rational(std::uint64_t numerator, std::uint64_t denominator) {
  if (denominator == 0) throw Error(Error::Kind::kParse, "zero denominator");
  const std::uint64_t g = std::gcd(numerator, denominator);
  num_ = numerator / g;
  den_ = denominator / g;
}

std::string Rational::str() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  const unsigned __int128 l = static_cast<unsigned __int128>(a.num_) * b.den_;
  const unsigned __int128 r = static_cast<unsigned __int128>(b.num_) * a.den_;
  if (l < r) return std::strong_ordering::less;
  if (l > r) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

bool Rational::below_fraction(std::uint64_t count, std::uint64_t total) const {
  return static_cast<unsigned __int128>(count) * den_ > static_cast<unsigned __int128>(num_) * total;
}

Rational parse_rational(std::string_view text) {
  auto bad = [&] { return Error(Error::Kind::kParse, "not a rational: '" + std::string(text) + "'"); };
  auto parse_u = [&](std::string_view s) {
    if (s.empty()) throw bad();
    std::uint64_t v = 0;
    for (char c : s) {
      if (c < '0' || c > '9') throw bad();
      v = v * 10 + static_cast<std::uint64_t>(c - '0');
    }
    return v;
  };
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    return Rational(parse_u(text.substr(0, slash)), parse_u(text.substr(slash + 1)));
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    auto frac = text.substr(dot + 1);
    if (frac.size() > 18) throw bad();
    std::uint64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    const std::uint64_t whole = dot == 0 ? 0 : parse_u(text.substr(0, dot));
    return Rational(whole * den + (frac.empty() ? 0 : parse_u(frac)), den);
  }
  return Rational(parse_u(text), 1);
}

DensitySample density(const Real& alpha, const Real& beta, std::uint64_t s) {
  Bits a, b;
  alpha.append_bits(0, s + 1, a);
  beta.append_bits(0, s + 1, b);
  std::uint64_t ones = 0;
  for (std::uint64_t i = 0; i <= s; ++i) ones += a[i] != b[i] ? 1 : 0;
  return {ones, s + 1};
}

Rational periodic_density(const PeriodicTail& tail) {
  const auto ones = static_cast<std::uint64_t>(std::count(tail.period.begin(), tail.period.end(), true));
  return Rational(ones, tail.period.size());
}

}  // namespace limitlearn
