#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "limitlearn/structures.hpp"

namespace limitlearn {

/// Quantifier-free matrix over variable slots. Slots 0..e-1 are the existential block,
/// the following slots belong to the universal block of the enclosing conjunct.
struct Matrix {
  enum class Op { kTrue, kFalse, kAtom, kEq, kNot, kAnd, kOr, kImplies };

  Op op = Op::kTrue;
  std::string relation;            // kAtom: symbol name in the structure's signature
  std::vector<std::size_t> args;   // kAtom / kEq: variable slots
  std::vector<Matrix> children;    // kNot / kAnd / kOr / kImplies

  static Matrix atom(std::string relation, std::vector<std::size_t> args);
  static Matrix eq(std::size_t a, std::size_t b);
  static Matrix negate(Matrix m);
  static Matrix both(Matrix a, Matrix b);
  static Matrix either(Matrix a, Matrix b);
  static Matrix implies(Matrix a, Matrix b);

  std::string str(const std::vector<std::string>& names) const;
};

/// ∀ȳ ψ(x̄, ȳ). `reveal` is the first stage at which the conjunct is enforced.
struct Conjunct {
  std::size_t forall_arity = 0;
  Matrix matrix;
  std::uint64_t reveal = 0;
};

/// ∃x̄ ⋀ᵢ ∀ȳᵢ ψᵢ(x̄, ȳᵢ) with finitely many conjuncts.
class Sigma2Formula {
 public:
  Sigma2Formula() = default;
  Sigma2Formula(std::size_t exists_arity, std::vector<Conjunct> conjuncts, std::string source = {});

  std::size_t exists_arity() const { return exists_arity_; }
  const std::vector<Conjunct>& conjuncts() const { return conjuncts_; }
  const std::string& source() const { return source_; }

  /// Copy in which conjunct j is enforced only from stage j on.
  Sigma2Formula staged() const;
  /// Number of conjuncts enforced at `stage`.
  std::size_t visible(std::uint64_t stage) const;
  std::uint64_t max_reveal() const;

 private:
  std::size_t exists_arity_ = 0;
  std::vector<Conjunct> conjuncts_;
  std::string source_;
};

/// Parses the s-expression form, e.g.
///   (exists (x) (forall (y) leq(x,y)))
///   (exists (x) (forall (y) (or leq(x,y) box(2,y))) (forall (y z) (implies edge(y,z) edge(x,z))))
/// Connectives: and, or, not, implies; eq(x,y) is equality; true/false are constants.
/// Built-in names: has_least, has_greatest.
Sigma2Formula parse_sigma2(std::string_view text);
Sigma2Formula builtin_formula(std::string_view name);
/// "has_least" style name or an s-expression.
Sigma2Formula resolve_formula(std::string_view text);

struct FormulaPair {
  Sigma2Formula rho0;
  Sigma2Formula rho1;
};

FormulaPair least_greatest_pair();

/// A formula bound to a signature for fast repeated evaluation.
class BoundSigma2 {
 public:
  BoundSigma2(const Sigma2Formula& f, const Signature& sig);

  std::size_t exists_arity() const { return exists_arity_; }
  std::size_t conjunct_count() const { return conjuncts_.size(); }
  std::size_t forall_arity(std::size_t c) const { return conjuncts_[c].forall_arity; }
  std::size_t visible(std::uint64_t stage) const;
  std::uint64_t reveal(std::size_t c) const { return reveals_[c]; }
  /// Evaluates conjunct c's matrix; `slots` holds x̄ followed by ȳ.
  bool matrix(std::size_t c, const FinitePrefixStructure& f, const std::vector<std::uint64_t>& slots) const;

  /// No ȳ inside f falsifies conjunct c for x̄ = tuple. Only ȳ with some entry >= `from`
  /// are inspected, so an incremental caller can skip the ones it already checked.
  bool conjunct_holds(std::size_t c, const FinitePrefixStructure& f, const std::vector<std::uint64_t>& tuple,
                      std::uint64_t from = 0) const;

 private:
  struct Node {
    Matrix::Op op;
    std::size_t rel = 0;  // index into the signature, or npos when absent from it
    std::vector<std::size_t> args;
    std::vector<std::size_t> kids;
  };
  struct BoundConjunct {
    std::size_t forall_arity;
    std::uint64_t reveal;
    std::vector<Node> nodes;  // root is nodes.back()
  };
  std::size_t compile(const Matrix& m, const Signature& sig, std::vector<Node>& nodes) const;
  bool eval(const std::vector<Node>& nodes, std::size_t i, const FinitePrefixStructure& f,
            const std::vector<std::uint64_t>& slots) const;

  std::size_t exists_arity_;
  std::vector<BoundConjunct> conjuncts_;
  std::vector<std::uint64_t> reveals_;
};

/// True iff no enforced conjunct has a counterexample ȳ inside f for x̄ = tuple.
bool sigma2_compat(const Sigma2Formula& formula, const FinitePrefixStructure& fin,
                   const std::vector<std::uint64_t>& tuple, std::uint64_t stage = UINT64_MAX);

/// Keeps the set of tuples via which a formula is still compatible while the finite
/// structure grows one element at a time. Tuples are ordered by their fold-paired code.
class CompatTracker {
 public:
  CompatTracker(const Sigma2Formula& formula, const Signature& sig);

  /// Call after f gained its newest element (f.size()-1) and with the current stage.
  void update(const FinitePrefixStructure& f, std::uint64_t stage);
  /// Least code of a tuple via which the formula is compatible.
  std::optional<std::uint64_t> least_code() const;
  std::optional<std::vector<std::uint64_t>> least_tuple() const;
  std::size_t alive() const { return alive_.size(); }

 private:
  BoundSigma2 bound_;
  std::set<std::pair<std::uint64_t, std::vector<std::uint64_t>>> alive_;
  std::size_t seen_ = 0;
  bool started_ = false;
  std::vector<bool> enforced_;
};

}  // namespace limitlearn
