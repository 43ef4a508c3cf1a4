#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "limitlearn/bitreal.hpp"

namespace limitlearn {

/// Named integer state exposed for traces (b, c, i, p, ...).
using StateSnapshot = std::vector<std::pair<std::string, std::int64_t>>;

/// One run of a continuous operator. Input arrives in chunks; output bits, once
/// determined, never change, so the induced prefix map is monotone by construction.
class OperatorSession {
 public:
  virtual ~OperatorSession() = default;

  void push(const Bits& chunk) { push(chunk, 0, chunk.size()); }
  void push(const Bits& chunk, std::size_t begin, std::size_t end) {
    if (begin >= end) return;
    consume(chunk, begin, end);
    consumed_ += end - begin;
  }
  void push_bit(bool b) { push(Bits{b}); }

  std::uint64_t consumed() const { return consumed_; }
  /// Number of determined output bits.
  virtual std::uint64_t size() const = 0;
  virtual bool at(std::uint64_t i) const = 0;
  virtual StateSnapshot snapshot() const { return {}; }

  Bits output() const { return output(0, size()); }
  Bits output(std::uint64_t begin, std::uint64_t end) const;

 protected:
  virtual void consume(const Bits& bits, std::size_t begin, std::size_t end) = 0;

 private:
  std::uint64_t consumed_ = 0;
};

/// Session whose output is one growing bit string.
class LinearSession : public OperatorSession {
 public:
  std::uint64_t size() const override { return out_.size(); }
  bool at(std::uint64_t i) const override { return out_[i]; }

 protected:
  Bits out_;
};

/// Session whose output is a real given by columns: column j is a growing bit string for
/// j < columns, further columns are 0^∞. Position ⟨j,k⟩ is determined once column j has
/// k+1 bits; the output prefix ends at the first undetermined position.
class ColumnarSession : public OperatorSession {
 public:
  explicit ColumnarSession(std::size_t columns) : cols_(columns) {
    if (columns == 0) throw Error(Error::Kind::kBadBudget, "columnar output needs at least one column");
  }

  std::uint64_t size() const override;
  bool at(std::uint64_t i) const override;
  const Bits& column_bits(std::size_t j) const { return cols_[j]; }
  std::size_t columns() const { return cols_.size(); }

 protected:
  std::vector<Bits> cols_;
};

/// A continuous operator on Cantor space presented by its monotone prefix map.
class ContinuousOperator {
 public:
  using Factory = std::function<std::unique_ptr<OperatorSession>()>;

  ContinuousOperator() = default;
  ContinuousOperator(std::string name, Factory factory) : name_(std::move(name)), factory_(std::move(factory)) {}

  const std::string& name() const { return name_; }
  explicit operator bool() const { return static_cast<bool>(factory_); }
  std::unique_ptr<OperatorSession> start() const;
  /// h(σ): the output determined by the finite input σ.
  Bits apply(const Bits& prefix) const;

 private:
  std::string name_;
  Factory factory_;
};

ContinuousOperator identity_operator();
/// outer ∘ inner: the inner output feeds the outer operator.
ContinuousOperator compose(const ContinuousOperator& outer, const ContinuousOperator& inner);
/// α ↦ α^[j].
ContinuousOperator column_operator(std::uint64_t j);

/// Runs `op` on the first `length` bits of `input` and returns the determined output.
Bits run_operator(const ContinuousOperator& op, const Real& input, std::uint64_t length);

}  // namespace limitlearn
