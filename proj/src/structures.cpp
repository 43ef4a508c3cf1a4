#include "limitlearn/structures.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace limitlearn {

// ---------------------------------------------------------------- signatures

Signature::Signature(std::vector<RelationSymbol> relations) : relations_(std::move(relations)) {
  for (std::size_t i = 0; i < relations_.size(); ++i) {
    if (relations_[i].arity == 0) throw Error(Error::Kind::kConfig, "relation '" + relations_[i].name + "' has arity 0");
    for (std::size_t j = 0; j < i; ++j) {
      if (relations_[j].name == relations_[i].name)
        throw Error(Error::Kind::kConfig, "duplicate relation '" + relations_[i].name + "'");
    }
  }
}

std::size_t Signature::find(std::string_view name) const {
  for (std::size_t i = 0; i < relations_.size(); ++i) {
    if (relations_[i].name == name) return i;
  }
  return relations_.size();
}

std::size_t Signature::index(std::string_view name) const {
  const std::size_t i = find(name);
  if (i == relations_.size()) throw Error(Error::Kind::kConfig, "signature has no relation '" + std::string(name) + "'");
  return i;
}

bool operator==(const RelationSymbol& a, const RelationSymbol& b) { return a.name == b.name && a.arity == b.arity; }
bool operator==(const Signature& a, const Signature& b) { return a.relations_ == b.relations_; }

Signature order_signature() { return Signature({{"leq", 2}}); }
Signature graph_signature() { return Signature({{"edge", 2}}); }

Signature box_signature(std::size_t jmax) {
  std::vector<RelationSymbol> rels{{"leq", 2}};
  for (std::size_t j = 0; j < jmax; ++j) rels.push_back({"box" + std::to_string(j), 1});
  return Signature(std::move(rels));
}

// ---------------------------------------------------------------- coding

namespace {

std::uint64_t checked_pow(std::uint64_t base, std::size_t exp) {
  std::uint64_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && r > std::numeric_limits<std::uint64_t>::max() / base)
      throw Error(Error::Kind::kResourceLimit, "diagram code overflow");
    r *= base;
  }
  return r;
}

// Number of arity-a tuples over {0..m} whose maximum is m.
std::uint64_t tuples_with_max(std::uint64_t m, std::size_t arity) {
  return checked_pow(m + 1, arity) - checked_pow(m, arity);
}

std::uint64_t relation_offset(const Signature& sig, std::size_t rel, std::uint64_t m) {
  std::uint64_t off = 0;
  for (std::size_t r = 0; r < rel; ++r) off += tuples_with_max(m, sig[r].arity);
  return off;
}

// Rank among tuples with maximum m in lexicographic order.
template <class Tuple>
std::uint64_t lex_rank(const Tuple& t, std::size_t arity, std::uint64_t m) {
  bool hit = false;
  std::uint64_t rank = 0;
  for (std::size_t p = 0; p < arity; ++p) {
    const std::size_t rest = arity - p - 1;
    const std::uint64_t completions = hit ? checked_pow(m + 1, rest) : tuples_with_max(m, rest);
    rank += t[p] * completions;
    hit = hit || t[p] == m;
  }
  return rank;
}

}  // namespace

std::uint64_t atoms_below(const Signature& sig, std::uint64_t n) {
  std::uint64_t total = 0;
  for (const auto& r : sig.relations()) {
    const std::uint64_t c = checked_pow(n, r.arity);
    if (total > std::numeric_limits<std::uint64_t>::max() - c) throw Error(Error::Kind::kResourceLimit, "diagram code overflow");
    total += c;
  }
  return total;
}

std::uint64_t layer_size(const Signature& sig, std::uint64_t n) { return atoms_below(sig, n + 1) - atoms_below(sig, n); }

std::uint64_t godel_code(const Signature& sig, std::size_t rel, const std::vector<std::uint64_t>& tuple) {
  if (rel >= sig.size()) throw Error(Error::Kind::kArityMismatch, "relation index out of range");
  if (tuple.size() != sig[rel].arity)
    throw Error(Error::Kind::kArityMismatch, "relation '" + sig[rel].name + "' expects arity " +
                                                 std::to_string(sig[rel].arity) + ", got " + std::to_string(tuple.size()));
  const std::uint64_t m = *std::max_element(tuple.begin(), tuple.end());
  return atoms_below(sig, m) + relation_offset(sig, rel, m) + lex_rank(tuple, tuple.size(), m);
}

std::uint64_t elements_within(const Signature& sig, std::uint64_t length) {
  if (sig.size() == 0) throw Error(Error::Kind::kConfig, "empty signature");
  std::uint64_t lo = 0, hi = 1;
  while (atoms_below(sig, hi) <= length) hi *= 2;
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    (atoms_below(sig, mid) <= length ? lo : hi) = mid;
  }
  return lo;
}

std::pair<std::size_t, std::vector<std::uint64_t>> decode_code(const Signature& sig, std::uint64_t code) {
  const std::uint64_t m = elements_within(sig, code);  // code lies in layer m
  std::uint64_t off = code - atoms_below(sig, m);
  std::size_t rel = 0;
  while (off >= tuples_with_max(m, sig[rel].arity)) {
    off -= tuples_with_max(m, sig[rel].arity);
    ++rel;
  }
  const std::size_t arity = sig[rel].arity;
  std::vector<std::uint64_t> t(arity);
  bool hit = false;
  for (std::size_t p = 0; p < arity; ++p) {
    const std::size_t rest = arity - p - 1;
    for (std::uint64_t u = 0; u <= m; ++u) {
      const bool h2 = hit || u == m;
      const std::uint64_t c = h2 ? checked_pow(m + 1, rest) : tuples_with_max(m, rest);
      if (off < c) {
        t[p] = u;
        hit = h2;
        break;
      }
      off -= c;
    }
  }
  return {rel, t};
}

// ---------------------------------------------------------------- FinitePrefixStructure

FinitePrefixStructure::FinitePrefixStructure(Signature sig) : sig_(std::move(sig)) {
  if (sig_.size() == 0) throw Error(Error::Kind::kConfig, "empty signature");
  layer_start_.push_back(0);
  next_boundary_ = atoms_below(sig_, 1);
}

Bits FinitePrefixStructure::diagram() const {
  return Bits(bits_.begin(), bits_.begin() + static_cast<std::ptrdiff_t>(layer_start_[n_]));
}

std::uint64_t FinitePrefixStructure::code_in_layer(std::size_t rel, std::uint64_t m) const {
  return layer_start_[m] + relation_offset(sig_, rel, m);
}

bool FinitePrefixStructure::holds(std::size_t rel, const std::vector<std::uint64_t>& tuple) const {
  for (auto x : tuple) {
    if (x >= n_) throw Error(Error::Kind::kTupleOutOfRange, "element " + std::to_string(x) + " not decoded");
  }
  if (rel >= sig_.size() || tuple.size() != sig_[rel].arity) throw Error(Error::Kind::kArityMismatch, "bad atom");
  const std::uint64_t m = *std::max_element(tuple.begin(), tuple.end());
  return bits_[code_in_layer(rel, m) + lex_rank(tuple, tuple.size(), m)];
}

bool FinitePrefixStructure::holds1(std::size_t rel, std::uint64_t a) const { return bits_[code_in_layer(rel, a)]; }

bool FinitePrefixStructure::holds2(std::size_t rel, std::uint64_t a, std::uint64_t b) const {
  const std::uint64_t m = std::max(a, b);
  return bits_[code_in_layer(rel, m) + (a < m ? a : m + b)];
}

std::size_t FinitePrefixStructure::feed(const Bits& chunk, std::size_t begin, std::size_t end) {
  std::size_t done = 0;
  while (begin < end) {
    const std::size_t need = static_cast<std::size_t>(next_boundary_ - bits_.size());
    const std::size_t take = std::min(need, end - begin);
    bits_.insert(bits_.end(), chunk.begin() + static_cast<std::ptrdiff_t>(begin),
                 chunk.begin() + static_cast<std::ptrdiff_t>(begin + take));
    begin += take;
    if (bits_.size() == next_boundary_) {
      ++n_;
      layer_start_.push_back(next_boundary_);
      next_boundary_ = atoms_below(sig_, n_ + 1);
      ++done;
    }
  }
  return done;
}

void FinitePrefixStructure::feed_bit(bool b) {
  bits_.push_back(b);
  if (bits_.size() == next_boundary_) {
    ++n_;
    layer_start_.push_back(next_boundary_);
    next_boundary_ = atoms_below(sig_, n_ + 1);
  }
}

FinitePrefixStructure decode_prefix(const Signature& sig, const Bits& bits) {
  FinitePrefixStructure f(sig);
  f.feed(bits);
  return f;
}

std::optional<std::uint64_t> least_element(const FinitePrefixStructure& f, std::size_t leq) {
  if (f.size() == 0) return std::nullopt;
  std::uint64_t c = 0;
  for (std::uint64_t y = 1; y < f.size(); ++y) {
    if (!f.holds2(leq, c, y)) c = y;
  }
  for (std::uint64_t y = 0; y < f.size(); ++y) {
    if (!f.holds2(leq, c, y)) return std::nullopt;
  }
  return c;
}

std::optional<std::uint64_t> greatest_element(const FinitePrefixStructure& f, std::size_t leq) {
  if (f.size() == 0) return std::nullopt;
  std::uint64_t c = 0;
  for (std::uint64_t y = 1; y < f.size(); ++y) {
    if (!f.holds2(leq, y, c)) c = y;
  }
  for (std::uint64_t y = 0; y < f.size(); ++y) {
    if (!f.holds2(leq, y, c)) return std::nullopt;
  }
  return c;
}

// ---------------------------------------------------------------- StructureSpec

void StructureSpec::append_layer(std::uint64_t n, const std::vector<std::uint64_t>& labels, Bits& out) const {
  const std::uint64_t ln = labels[n];
  for (std::size_t r = 0; r < sig_.size(); ++r) {
    const std::size_t a = sig_[r].arity;
    if (a == 1) {
      out.push_back(holds1(r, ln));
    } else if (a == 2) {
      for (std::uint64_t x = 0; x < n; ++x) out.push_back(holds2(r, labels[x], ln));
      for (std::uint64_t y = 0; y <= n; ++y) out.push_back(holds2(r, ln, labels[y]));
    } else {
      std::vector<std::uint64_t> t(a, 0), mapped(a);
      while (true) {
        if (std::find(t.begin(), t.end(), n) != t.end()) {
          for (std::size_t i = 0; i < a; ++i) mapped[i] = labels[t[i]];
          out.push_back(holds(r, mapped));
        }
        std::size_t p = a;
        while (p > 0 && t[p - 1] == n) t[--p] = 0;
        if (p == 0) break;
        ++t[p - 1];
      }
    }
  }
}

// ---------------------------------------------------------------- zoo

std::int64_t zeta_value(std::uint64_t label) {
  const auto n = static_cast<std::int64_t>(label);
  return n % 2 == 0 ? n / 2 : -(n + 1) / 2;
}

namespace {

std::int64_t fusc(std::uint64_t n) {
  std::int64_t a = 1, b = 0;
  while (n) {
    if (n & 1) b += a;
    else a += b;
    n >>= 1;
  }
  return b;
}

}  // namespace

EtaRank eta_rank(std::uint64_t label) {
  if (label == 0) return {0, 1};
  const std::uint64_t k = (label + 1) / 2;
  const std::int64_t num = fusc(k), den = fusc(k + 1);
  return label % 2 == 1 ? EtaRank{num, den} : EtaRank{-num, den};
}

namespace {

// Element key for structures that are disjoint unions of linear orders: x <= y iff both sit
// in the same group and rank(x) <= rank(y). `bottom` marks an adjoined least element.
struct OrderKey {
  std::int64_t group = 0;
  std::int64_t num = 0;
  std::int64_t den = 1;
  bool bottom = false;
};

bool key_leq(const OrderKey& a, const OrderKey& b) {
  if (a.group != b.group) return false;
  if (a.bottom) return true;
  if (b.bottom) return false;
  return static_cast<__int128>(a.num) * b.den <= static_cast<__int128>(b.num) * a.den;
}

constexpr std::uint64_t kKeyTable = std::uint64_t{1} << 15;

class KeyedStructure final : public StructureSpec {
 public:
  using KeyFn = std::function<OrderKey(std::uint64_t)>;

  KeyedStructure(std::string name, Signature sig, KeyFn fn, std::size_t boxes)
      : StructureSpec(std::move(name), std::move(sig)), fn_(std::move(fn)), boxes_(boxes) {
    table_.reserve(kKeyTable);
    for (std::uint64_t n = 0; n < kKeyTable; ++n) table_.push_back(fn_(n));
  }

  bool holds(std::size_t rel, const std::vector<std::uint64_t>& t) const override {
    if (t.size() != signature()[rel].arity) throw Error(Error::Kind::kArityMismatch, "bad atom");
    return t.size() == 1 ? holds1(rel, t[0]) : holds2(rel, t[0], t[1]);
  }
  bool holds1(std::size_t rel, std::uint64_t a) const override {
    const auto j = static_cast<std::int64_t>(rel) - 1;
    return rel >= 1 && j < static_cast<std::int64_t>(boxes_) && key(a).group == j;
  }
  bool holds2(std::size_t, std::uint64_t a, std::uint64_t b) const override { return key_leq(key(a), key(b)); }

 private:
  OrderKey key(std::uint64_t n) const { return n < table_.size() ? table_[n] : fn_(n); }

  KeyFn fn_;
  std::size_t boxes_;
  std::vector<OrderKey> table_;
};

OrderKey eta_key(std::int64_t group, std::uint64_t label) {
  auto r = eta_rank(label);
  return {group, r.num, r.den, false};
}

class GraphBox final : public StructureSpec {
 public:
  explicit GraphBox(Real beta)
      : StructureSpec("graphbox:" + beta.describe(), graph_signature()), beta_(std::move(beta)) {
    for (std::uint64_t n = 0; n < kKeyTable; ++n) table_.push_back(graph_slot(n));
    for (std::uint64_t m = 0; m < 512; ++m) flips_.push_back(beta_.bit(m));
  }

  bool holds(std::size_t rel, const std::vector<std::uint64_t>& t) const override {
    if (t.size() != 2) throw Error(Error::Kind::kArityMismatch, "edge is binary");
    return holds2(rel, t[0], t[1]);
  }
  bool holds2(std::size_t, std::uint64_t a, std::uint64_t b) const override {
    const GraphSlot x = slot(a), y = slot(b);
    if (x.box != y.box) return false;
    if (x.slot == 0 && y.slot == 0) {
      if (x.member == y.member) return false;
      return flipped(x.box) ? x.member > y.member : x.member < y.member;
    }
    if (x.member != y.member) return false;
    if (x.slot == 0) return y.slot == 1;
    if (y.slot == 0) return false;
    return x.slot % (x.box + 3) + 1 == y.slot;
  }

 private:
  GraphSlot slot(std::uint64_t n) const { return n < table_.size() ? table_[n] : graph_slot(n); }
  bool flipped(std::uint64_t m) const { return m < flips_.size() ? flips_[m] : beta_.bit(m); }

  Real beta_;
  std::vector<GraphSlot> table_;
  std::vector<bool> flips_;
};

Real parse_beta(std::string_view text) {
  if (text.find('~') != std::string_view::npos) return Real::from_descriptor(text);
  return Real::from_prefix(bits_from_string(text));
}

}  // namespace

GraphSlot graph_slot(std::uint64_t label) {
  auto [m, r] = unpair(label);
  return {m, r / (m + 4), r % (m + 4)};
}

std::uint64_t graph_label(const GraphSlot& s) { return pair(s.box, s.member * (s.box + 4) + s.slot); }

SpecPtr make_linear(LinearKind kind) {
  switch (kind) {
    case LinearKind::kOmega:
      return std::make_shared<KeyedStructure>(
          "omega", order_signature(), [](std::uint64_t n) { return OrderKey{0, static_cast<std::int64_t>(n), 1, false}; }, 0);
    case LinearKind::kOmegaStar:
      return std::make_shared<KeyedStructure>(
          "omega_star", order_signature(),
          [](std::uint64_t n) { return OrderKey{0, -static_cast<std::int64_t>(n), 1, false}; }, 0);
    case LinearKind::kZeta:
      return std::make_shared<KeyedStructure>(
          "zeta", order_signature(), [](std::uint64_t n) { return OrderKey{0, zeta_value(n), 1, false}; }, 0);
    case LinearKind::kEta:
      return std::make_shared<KeyedStructure>("eta", order_signature(), [](std::uint64_t n) { return eta_key(0, n); }, 0);
    case LinearKind::kOnePlusEta:
      return std::make_shared<KeyedStructure>(
          "one_plus_eta", order_signature(),
          [](std::uint64_t n) { return n == 0 ? OrderKey{0, 0, 1, true} : eta_key(0, n - 1); }, 0);
  }
  throw Error(Error::Kind::kConfig, "unknown linear order kind");
}

SpecPtr make_box_structure(const Real& beta, std::size_t jmax) {
  auto fn = [beta](std::uint64_t n) {
    auto [m, k] = unpair(n);
    const auto kk = static_cast<std::int64_t>(k);
    return OrderKey{static_cast<std::int64_t>(m), beta.bit(m) ? -kk : kk, 1, false};
  };
  return std::make_shared<KeyedStructure>("box:" + beta.describe(), box_signature(jmax), fn, jmax);
}

SpecPtr make_graph_box(const Real& beta) { return std::make_shared<GraphBox>(beta); }

SpecPtr make_Kst(std::size_t i, std::size_t jmax) {
  auto fn = [i](std::uint64_t n) {
    auto [m, k] = unpair(n);
    const auto g = static_cast<std::int64_t>(m);
    if (m == i) return k == 0 ? OrderKey{g, 0, 1, true} : eta_key(g, k - 1);
    return eta_key(g, k);
  };
  return std::make_shared<KeyedStructure>("kst:" + std::to_string(i), box_signature(jmax), fn, jmax);
}

SpecPtr make_structure(std::string_view name, std::size_t jmax) {
  if (name == "omega") return make_linear(LinearKind::kOmega);
  if (name == "omega_star") return make_linear(LinearKind::kOmegaStar);
  if (name == "zeta") return make_linear(LinearKind::kZeta);
  if (name == "eta") return make_linear(LinearKind::kEta);
  if (name == "one_plus_eta") return make_linear(LinearKind::kOnePlusEta);
  auto colon = name.find(':');
  if (colon != std::string_view::npos) {
    auto head = name.substr(0, colon);
    auto arg = name.substr(colon + 1);
    try {
      if (head == "box") return make_box_structure(parse_beta(arg), jmax);
      if (head == "graphbox") return make_graph_box(parse_beta(arg));
      if (head == "kst") {
        std::size_t pos = 0;
        const auto i = std::stoull(std::string(arg), &pos);
        if (pos != arg.size()) throw Error(Error::Kind::kConfig, "bad index");
        return make_Kst(i, jmax);
      }
    } catch (const Error&) {
      throw Error(Error::Kind::kConfig, "cannot resolve structure '" + std::string(name) + "'");
    } catch (const std::exception&) {
      throw Error(Error::Kind::kConfig, "cannot resolve structure '" + std::string(name) + "'");
    }
  }
  throw Error(Error::Kind::kConfig, "unknown structure '" + std::string(name) + "'");
}

// ---------------------------------------------------------------- enumerations

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Enumeration::Enumeration() : cache_(nullptr) {}

Enumeration::Enumeration(std::uint64_t seed, std::uint64_t block)
    : identity_(false), seed_(seed), block_(block), cache_(std::make_shared<Cache>()) {
  if (block == 0) throw Error(Error::Kind::kConfig, "enumeration block must be positive");
}

std::uint64_t Enumeration::operator()(std::uint64_t position) const {
  if (identity_) return position;
  std::lock_guard<std::mutex> lock(cache_->mu);
  auto& labels = cache_->labels;
  while (labels.size() <= position) {
    const std::uint64_t b = labels.size() / block_;
    const std::uint64_t base = b * block_;
    std::mt19937_64 rng(splitmix64(seed_ ^ splitmix64(b)));
    std::vector<std::uint64_t> blk(block_);
    for (std::uint64_t i = 0; i < block_; ++i) blk[i] = base + i;
    for (std::uint64_t i = block_; i > 1; --i) std::swap(blk[i - 1], blk[bounded_draw(rng, i)]);
    labels.insert(labels.end(), blk.begin(), blk.end());
  }
  return labels[position];
}

// ---------------------------------------------------------------- diagram streams

DiagramStream::DiagramStream(SpecPtr spec, Enumeration e) : spec_(std::move(spec)), e_(std::move(e)) {}

Real DiagramStream::real() const {
  auto spec = spec_;
  auto e = e_;
  return Real::lazy(
      [spec, e](std::uint64_t p) {
        auto [rel, t] = decode_code(spec->signature(), p);
        for (auto& x : t) x = e(x);
        return spec->holds(rel, t);
      },
      "diagram(" + spec_->name() + ")");
}

Bits DiagramStream::prefix_elements(std::uint64_t n) const {
  Bits out;
  out.reserve(atoms_below(signature(), n));
  Cursor c(*this);
  for (std::uint64_t i = 0; i < n; ++i) c.append_layer(out);
  return out;
}

void DiagramStream::Cursor::append_layer(Bits& out) {
  const std::uint64_t n = labels_.size();
  labels_.push_back(e_(n));
  spec_->append_layer(n, labels_, out);
}

DiagramStream diagram_stream(SpecPtr spec, Enumeration e) { return DiagramStream(std::move(spec), std::move(e)); }

}  // namespace limitlearn
