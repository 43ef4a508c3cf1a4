#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "limitlearn/formula.hpp"
#include "limitlearn/operator.hpp"
#include "limitlearn/structures.hpp"

namespace limitlearn {

/// A family index ⌜A_i⌝ or the abstention "?".
class Conjecture {
 public:
  Conjecture() = default;  // "?"
  static Conjecture unknown() { return {}; }
  static Conjecture of(std::size_t i) {
    Conjecture c;
    c.index_ = i;
    return c;
  }

  bool is_unknown() const { return !index_.has_value(); }
  std::size_t index() const { return *index_; }
  std::string str() const { return index_ ? std::to_string(*index_) : "?"; }

  friend bool operator==(const Conjecture&, const Conjecture&) = default;

 private:
  std::optional<std::size_t> index_;
};

/// Incremental learner run: feed diagram bits, read the current conjecture.
class LearnerSession {
 public:
  virtual ~LearnerSession() = default;
  virtual void push_bit(bool b) = 0;
  void push(const Bits& bits) {
    for (bool b : bits) push_bit(b);
  }
  virtual Conjecture current() const = 0;
  virtual StateSnapshot snapshot() const { return {}; }
};

/// A learner M: finite diagram prefixes -> conjectures, presented by fresh sessions.
class Learner {
 public:
  using Factory = std::function<std::unique_ptr<LearnerSession>()>;

  Learner() = default;
  Learner(std::string name, std::size_t family_size, Factory factory)
      : name_(std::move(name)), family_size_(family_size), factory_(std::move(factory)) {}

  const std::string& name() const { return name_; }
  std::size_t family_size() const { return family_size_; }
  std::unique_ptr<LearnerSession> start() const;
  /// M(prefix), replayed from scratch.
  Conjecture conjecture(const Bits& prefix) const;

 private:
  std::string name_;
  std::size_t family_size_ = 0;
  Factory factory_;
};

// ---------------------------------------------------------------- Σ₂ compatibility operators

/// Stateless reference for one stage of Γ_i: stage 0 gives (0,1); stage s >= 1 reads the
/// structure formed by the first s decoded elements of `prefix`.
std::pair<bool, bool> gamma_i_step(const FormulaPair& pair, const Signature& sig, const Bits& prefix, std::uint64_t s);

/// Γ_i as a streaming operator: bits (2s, 2s+1) are emitted when element s is decoded.
ContinuousOperator gamma_operator(const FormulaPair& pair, const Signature& sig);
/// Γ(α)(⟨i,x⟩) := Γ_i(α)(x); columns beyond the list are 0.
ContinuousOperator merge_gamma(const std::vector<FormulaPair>& pairs, const Signature& sig);
/// Γ_i for (has_least, has_greatest) on linear orders.
ContinuousOperator order_classifier();

// ---------------------------------------------------------------- learner from a reduction

/// f_sim at ℓ = |output|-1: −1 without output or on a mismatch at ℓ, else the largest k
/// such that the last k+1 output bits agree with β.
std::int64_t f_sim(const Bits& output, const Real& beta);
std::int64_t f_sim(const ContinuousOperator& op, const Bits& input_prefix, const Real& beta);

struct LearnerState {
  std::uint64_t b = 0;
  int c = 0;  // 0: abstaining, 1: holding, 2: cycling through indices
  Conjecture current;
  std::uint64_t stage = 0;
  std::int64_t ell = -1;  // last released output position
};

/// One machine transition s -> s+1 given f_sim at both stages (one entry per family member).
LearnerState machine_transition(const LearnerState& state, const std::vector<std::int64_t>& fsim_now,
                                const std::vector<std::int64_t>& fsim_next);

/// Reference transition reading the operator output on `input_prefix`; releases at most
/// one new output bit.
std::pair<LearnerState, Conjecture> learner_step(const LearnerState& state, const ContinuousOperator& op,
                                                 const std::vector<Real>& betas, const Bits& input_prefix);

/// The learner built from a reduction `op` to E₀ with class representatives `betas`.
/// Every input bit runs machine stages until all determined output bits are released,
/// one per stage, and at least one stage.
Learner learner_from_reduction(const ContinuousOperator& op, std::vector<Real> betas, std::string name = "reduction");

/// Witness reals for merge_gamma: column i is the constant reached by Γ_i on the identity
/// copy of each family member after `probe_elements` elements.
std::vector<Real> gamma_witnesses(const std::vector<FormulaPair>& pairs, const std::vector<SpecPtr>& family,
                                  std::uint64_t probe_elements = 64);

/// Learner for a family of linear orders driven by merge_gamma of the given pairs.
Learner sigma2_learner(const std::vector<FormulaPair>& pairs, const std::vector<SpecPtr>& family);

// ---------------------------------------------------------------- reduction from a learner

/// α_i with period 0^i 1, for i < count.
std::vector<Real> default_transversal(std::size_t count);

/// Γ(β)(s) := α_{M(β↾s)}(s), with 0^∞ for "?".
ContinuousOperator reduction_from_learner(const Learner& m, const std::vector<Real>& transversal);

// ---------------------------------------------------------------- {ω, ζ}

Learner constant_learner(std::size_t index, std::size_t family_size = 2);
/// Conjectures ω (index 0) when the decoded order has a least element that was already
/// least one element earlier, ζ (index 1) otherwise, "?" on the empty order.
Learner least_reactive_learner();

struct AdversaryResult {
  Bits prefix;
  std::uint64_t flips = 0;  // conjecture changes over all bit prefixes
  std::uint64_t minima_inserted = 0;
  std::uint64_t elements = 0;
  std::vector<Conjecture> conjectures;  // after the starting chain, then after each step
};

/// Grows a linear order one step at a time: while M says ω, a new minimum and a new maximum
/// are added; otherwise only a new maximum. `seed` fixes the length (1..4) of the starting chain.
AdversaryResult adversary_omega_zeta(const Learner& m, std::uint64_t horizon, std::uint64_t seed);

}  // namespace limitlearn
