#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "limitlearn/bitreal.hpp"
#include "limitlearn/operator.hpp"
#include "limitlearn/relations.hpp"
#include "limitlearn/structures.hpp"

namespace limitlearn {

/// Class representatives β_i of a reduction, all with exact descriptors. Column based
/// witnesses (every column periodic) are accepted where only columns are inspected.
struct WitnessSet {
  std::vector<Real> betas;
  RelationId relation = RelationId::kE0;

  /// Throws MissingDescriptor unless every β has an exact tail or exact columns.
  void require_exact() const;
};

// ---------------------------------------------------------------- E1 -> E0

/// ξ restricted to a family of n witnesses: the s-th triple (i, j, t) with i != j < n in
/// increasing fold_pair order of (i, j, t).
std::tuple<std::uint64_t, std::uint64_t, std::uint64_t> xi(std::uint64_t s, std::uint64_t n);

/// m_0 .. m_count. Column q of m_{s+1} is searched above the column of m_s, at most
/// `search_bound` columns up.
std::vector<std::uint64_t> e1_index_set(const WitnessSet& ws, std::uint64_t count, std::uint64_t search_bound = 64);

/// Ψ(α)(s) := α(m_s), composed after `inner`.
ContinuousOperator e1_collapse(const WitnessSet& ws, const ContinuousOperator& inner, std::uint64_t search_bound = 64);

// ---------------------------------------------------------------- E2 -> E0

struct E2MachineState {
  std::uint64_t i = 0;
  std::uint64_t b = 1;
  int c = 0;
  std::uint64_t stage = 0;
  std::int64_t ell = -1;  // last released inner output position
};

/// Emits β_{i[s]}(s) and moves to stage s+1, releasing at most one more bit of
/// `inner_output`. Partial sums are recomputed exactly from scratch.
std::pair<E2MachineState, bool> e2_collapse_step(const E2MachineState& state, const WitnessSet& ws,
                                                 const Bits& inner_output);

/// p(i, s) for ℓ = ell as a decimal string of the exact rational (for tests and traces).
std::string e2_partial_sum(const Real& beta, const Bits& inner_output, std::int64_t ell);

ContinuousOperator e2_collapse(const WitnessSet& ws, const ContinuousOperator& inner);

// ---------------------------------------------------------------- finite E3 -> E0

/// q(i, j) for i < j: least column below `column_budget` where β_i and β_j are not E0-equivalent.
std::vector<std::uint64_t> e3_separating_columns(const WitnessSet& ws, std::uint64_t column_budget = 64);

/// Interleaves α^[q(i,j)] over the pairs i < j in lexicographic order: output position
/// b + K·k carries column q_b at k, with K blocks.
ContinuousOperator e3_finite_collapse(const WitnessSet& ws, std::uint64_t column_budget = 64);

// ---------------------------------------------------------------- box family

enum class BoxVariant { kPredicate, kGraph };

std::string to_string(BoxVariant v);
BoxVariant parse_box_variant(std::string_view name);

/// Ψ_j: the diagram of the order inside box j, members indexed in discovery order.
/// `jmax` is the number of box predicates in the input signature (predicate variant).
ContinuousOperator box_extract(std::uint64_t j, BoxVariant variant, std::size_t jmax = kDefaultJmax);

/// Θ(α)(⟨j,k⟩) := (Φ∘Ψ_j(α))(k) for j < column_budget, with Φ the order classifier.
ContinuousOperator theta(std::uint64_t column_budget, BoxVariant variant, std::size_t jmax = kDefaultJmax);

// ---------------------------------------------------------------- Ψ_γ and the C_st assembly

/// v(i, s) on the prefix: nullopt stands for ∞.
std::optional<std::uint64_t> psi_v(const Bits& alpha, const Real& beta, std::uint64_t s);

/// Finite structure S(α↾s) grown by Ψ_γ. Elements are numbered in creation order.
struct PsiGammaState {
  std::uint64_t p = 0;
  std::uint64_t b = 0;
  std::uint64_t stage = 0;
  std::vector<std::optional<std::uint64_t>> v;  // v(i, stage) per witness

  struct Box {
    std::uint64_t least = 0;
    std::uint64_t greatest = 0;
    std::deque<std::pair<std::uint64_t, std::uint64_t>> gaps;  // adjacent pairs, filled FIFO
  };
  std::vector<Box> boxes;
  std::vector<std::uint64_t> below_min;  // per box: below-minimum insertions so far
  std::vector<std::size_t> box_of;       // element -> box
  std::vector<double> key;               // element -> position inside its box
};

/// Stage 0 structure: one element per box, p = b = 0. Emits its layers into `out`.
PsiGammaState psi_gamma_start(std::size_t boxes, Bits& out);

/// Stage s -> s+1 reading α(s+1) (alpha.size() must exceed s+1). Appends the layers of
/// the new elements to `out`.
PsiGammaState psi_gamma_step(const PsiGammaState& state, const std::vector<Real>& gammas, const Bits& alpha,
                             Bits& out);

/// Ψ_γ⃗ as an operator; the output diagram has signature box_signature(gammas.size()).
ContinuousOperator psi_gamma(const std::vector<Real>& gammas);

/// Part j's element k becomes element ⟨j,k⟩ of the sum, which also carries qbox_j.
/// Elements ⟨j,k⟩ with j >= parts.size() are isolated. Parts use box_signature(boxes).
ContinuousOperator cst_assemble(const std::vector<ContinuousOperator>& parts, std::size_t boxes);
Signature cst_signature(std::size_t boxes, std::size_t parts);

/// Ξ: Γ first, then Ψ_{β⃗^[j]} on column j of Γ(α) for j < parts, then the assembly.
ContinuousOperator xi_embedding(const ContinuousOperator& gamma, const WitnessSet& ws, std::size_t parts);

// ---------------------------------------------------------------- Z0 -> E0

/// Half the least pairwise periodic density of sym_diff(β_i, β_j).
Rational z0_default_threshold(const WitnessSet& ws);
/// Throws BadThreshold unless 0 < q0 < every pairwise periodic density.
void z0_validate_threshold(const WitnessSet& ws, const Rational& q0);

ContinuousOperator z0_collapse(const WitnessSet& ws, const Rational& q0, const ContinuousOperator& inner);

// ---------------------------------------------------------------- E_set for {ω, ζ}

/// Ψ(α)(⟨2i,s⟩) = [s >= i]; Ψ(α)(⟨2i+1,s⟩) = 1 iff element i is decoded by α↾s and is not
/// least there. Position ⟨m,s⟩ is determined once s input bits are read.
ContinuousOperator eset_pair_operator();

/// First s with Ψ(α)(⟨2i+1,s⟩) = 1 given a diagram prefix, if already determined.
std::optional<std::uint64_t> eset_flip_stage(const Bits& order_diagram, std::uint64_t i);

// ---------------------------------------------------------------- registry

struct OperatorParams {
  WitnessSet witnesses;
  std::uint64_t column_budget = 8;
  std::uint64_t search_bound = 64;
  std::optional<Rational> q0;
  BoxVariant variant = BoxVariant::kPredicate;
  std::size_t jmax = kDefaultJmax;
  std::size_t boxes = 2;
  ContinuousOperator inner;  // identity when empty
};

/// "e1-collapse", "e2-collapse", "e3-finite", "theta", "psi-gamma", "cst-assemble",
/// "z0-collapse", "eset-pair", "order-classifier", "box-extract:<j>", "identity", "column:<j>".
ContinuousOperator make_operator(std::string_view name, const OperatorParams& params = {});
std::vector<std::string> operator_names();

}  // namespace limitlearn
