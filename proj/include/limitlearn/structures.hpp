#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "limitlearn/bitreal.hpp"

namespace limitlearn {

struct RelationSymbol {
  std::string name;
  std::size_t arity = 1;
};

class Signature {
 public:
  Signature() = default;
  explicit Signature(std::vector<RelationSymbol> relations);

  std::size_t size() const { return relations_.size(); }
  const RelationSymbol& operator[](std::size_t i) const { return relations_[i]; }
  const std::vector<RelationSymbol>& relations() const { return relations_; }
  /// Index of `name`, or size() when absent.
  std::size_t find(std::string_view name) const;
  std::size_t index(std::string_view name) const;  // throws when absent

  friend bool operator==(const Signature&, const Signature&);

 private:
  std::vector<RelationSymbol> relations_;
};

bool operator==(const RelationSymbol& a, const RelationSymbol& b);

Signature order_signature();                // {leq}
Signature graph_signature();                // {edge}
Signature box_signature(std::size_t jmax);  // {leq, box0, ..., box<jmax-1>}

// Atomic-diagram coding. Atoms are listed element by element: all atoms over {0..n-1} come
// first, then the layer of atoms whose largest argument is n (relation index order, then
// lexicographic tuple order). A prefix thus always describes a finite substructure plus a
// partial layer.
std::uint64_t atoms_below(const Signature& sig, std::uint64_t n);
std::uint64_t layer_size(const Signature& sig, std::uint64_t n);
std::uint64_t godel_code(const Signature& sig, std::size_t rel, const std::vector<std::uint64_t>& tuple);
std::pair<std::size_t, std::vector<std::uint64_t>> decode_code(const Signature& sig, std::uint64_t code);
/// Largest n with atoms_below(n) <= length.
std::uint64_t elements_within(const Signature& sig, std::uint64_t length);

/// Finite structure on {0..n-1} read off a diagram prefix. Can be grown incrementally.
class FinitePrefixStructure {
 public:
  explicit FinitePrefixStructure(Signature sig);

  const Signature& signature() const { return sig_; }
  std::size_t size() const { return n_; }
  /// Exactly the bits of the complete layers.
  Bits diagram() const;
  std::uint64_t bits_seen() const { return bits_.size(); }

  bool holds(std::size_t rel, const std::vector<std::uint64_t>& tuple) const;
  bool holds1(std::size_t rel, std::uint64_t a) const;
  bool holds2(std::size_t rel, std::uint64_t a, std::uint64_t b) const;

  /// Appends bits; returns how many layers were completed by them.
  std::size_t feed(const Bits& chunk, std::size_t begin, std::size_t end);
  std::size_t feed(const Bits& chunk) { return feed(chunk, 0, chunk.size()); }
  void feed_bit(bool b);
  /// Bit budget of the next layer.
  std::uint64_t next_boundary() const { return next_boundary_; }

 private:
  std::uint64_t code_in_layer(std::size_t rel, std::uint64_t max_elem) const;

  Signature sig_;
  Bits bits_;
  std::size_t n_ = 0;
  std::uint64_t next_boundary_ = 0;
  std::vector<std::uint64_t> layer_start_;
};

FinitePrefixStructure decode_prefix(const Signature& sig, const Bits& bits);

/// Least / greatest element of a finite linear order stored under relation `leq`, if any.
std::optional<std::uint64_t> least_element(const FinitePrefixStructure& f, std::size_t leq = 0);
std::optional<std::uint64_t> greatest_element(const FinitePrefixStructure& f, std::size_t leq = 0);

/// Appends layer n of a structure on {0..n} given by fact callbacks, in the same order as
/// StructureSpec::append_layer. Arity at most 2.
template <class Unary, class Binary>
void append_layer_with(const Signature& sig, std::uint64_t n, Unary&& holds1, Binary&& holds2, Bits& out) {
  for (std::size_t r = 0; r < sig.size(); ++r) {
    if (sig[r].arity == 1) {
      out.push_back(holds1(r, n));
    } else if (sig[r].arity == 2) {
      for (std::uint64_t x = 0; x < n; ++x) out.push_back(holds2(r, x, n));
      for (std::uint64_t y = 0; y <= n; ++y) out.push_back(holds2(r, n, y));
    } else {
      throw Error(Error::Kind::kArityMismatch, "append_layer_with handles arity 1 and 2 only");
    }
  }
}

/// A computable structure on domain ω given by a fact oracle over labels.
class StructureSpec {
 public:
  StructureSpec(std::string name, Signature sig) : name_(std::move(name)), sig_(std::move(sig)) {}
  virtual ~StructureSpec() = default;

  const std::string& name() const { return name_; }
  const Signature& signature() const { return sig_; }

  virtual bool holds(std::size_t rel, const std::vector<std::uint64_t>& tuple) const = 0;
  virtual bool holds1(std::size_t rel, std::uint64_t a) const { return holds(rel, {a}); }
  virtual bool holds2(std::size_t rel, std::uint64_t a, std::uint64_t b) const { return holds(rel, {a, b}); }

  /// Appends layer n of the copy whose element i carries label labels[i].
  void append_layer(std::uint64_t n, const std::vector<std::uint64_t>& labels, Bits& out) const;

 private:
  std::string name_;
  Signature sig_;
};

using SpecPtr = std::shared_ptr<const StructureSpec>;

enum class LinearKind { kOmega, kOmegaStar, kZeta, kEta, kOnePlusEta };

/// Number of predicate boxes kept when an infinite signature is truncated.
inline constexpr std::size_t kDefaultJmax = 8;

SpecPtr make_linear(LinearKind kind);
SpecPtr make_box_structure(const Real& beta, std::size_t jmax = kDefaultJmax);
SpecPtr make_graph_box(const Real& beta);
SpecPtr make_Kst(std::size_t i, std::size_t jmax = kDefaultJmax);
/// Resolves the zoo names used by the CLI and configs: omega, omega_star, zeta, eta,
/// one_plus_eta, box:<bits or descriptor>, graphbox:<bits or descriptor>, kst:<i>.
SpecPtr make_structure(std::string_view name, std::size_t jmax = kDefaultJmax);

/// Rational rank used by the η presentation: label 0 -> 0, 2k-1 -> +cw(k), 2k -> -cw(k).
struct EtaRank {
  std::int64_t num = 0;
  std::int64_t den = 1;
};
EtaRank eta_rank(std::uint64_t label);
std::int64_t zeta_value(std::uint64_t label);

/// Layout of the graph variant: label n -> (box, member index, slot) where slot 0 is the
/// member itself and slot t >= 1 is vertex t-1 of its private cycle of length box+3.
struct GraphSlot {
  std::uint64_t box = 0;
  std::uint64_t member = 0;
  std::uint64_t slot = 0;
};
GraphSlot graph_slot(std::uint64_t label);
std::uint64_t graph_label(const GraphSlot& s);

/// Seeded bijection ω -> ω built from independently shuffled blocks of consecutive labels.
/// Position p in block b = p / block holds a label of that same block. Thread safe.
class Enumeration {
 public:
  static constexpr std::uint64_t kDefaultBlock = 32;

  /// The identity enumeration.
  Enumeration();
  Enumeration(std::uint64_t seed, std::uint64_t block = kDefaultBlock);

  std::uint64_t operator()(std::uint64_t position) const;
  bool identity() const { return identity_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t block() const { return block_; }

 private:
  struct Cache {
    std::mutex mu;
    std::vector<std::uint64_t> labels;
  };
  bool identity_ = true;
  std::uint64_t seed_ = 0;
  std::uint64_t block_ = kDefaultBlock;
  std::shared_ptr<Cache> cache_;
};

/// Name of the generator behind every seeded shuffle; written into trace headers.
inline constexpr const char* kRngId = "mt19937_64+lemire-bounded+splitmix64-block-seeds";

/// 64-bit mix used to derive per-block and per-trial seeds.
std::uint64_t splitmix64(std::uint64_t x);
/// Unbiased draw from [0, bound) (Lemire's multiply-and-reject).
template <class Rng>
std::uint64_t bounded_draw(Rng& rng, std::uint64_t bound) {
  unsigned __int128 m = static_cast<unsigned __int128>(rng()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(rng()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

/// The atomic diagram of the copy of `spec` along `e`, as a real and as a layer generator.
class DiagramStream {
 public:
  DiagramStream(SpecPtr spec, Enumeration e);

  const StructureSpec& spec() const { return *spec_; }
  const Signature& signature() const { return spec_->signature(); }
  const Enumeration& enumeration() const { return e_; }

  Real real() const;
  /// All bits describing the first n elements.
  Bits prefix_elements(std::uint64_t n) const;

  /// Sequential generator: each call appends the next layer.
  class Cursor {
   public:
    explicit Cursor(const DiagramStream& stream) : spec_(stream.spec_), e_(stream.e_) {}
    void append_layer(Bits& out);
    std::uint64_t elements() const { return labels_.size(); }

   private:
    SpecPtr spec_;
    Enumeration e_;
    std::vector<std::uint64_t> labels_;
  };
  Cursor cursor() const { return Cursor(*this); }

 private:
  SpecPtr spec_;
  Enumeration e_;
};

DiagramStream diagram_stream(SpecPtr spec, Enumeration e);

}  // namespace limitlearn
