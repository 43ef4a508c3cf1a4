#include "limitlearn/operator.hpp"

#include <algorithm>

namespace limitlearn {

Bits OperatorSession::output(std::uint64_t begin, std::uint64_t end) const {
  Bits out;
  end = std::min(end, size());
  if (begin < end) out.reserve(end - begin);
  for (std::uint64_t i = begin; i < end; ++i) out.push_back(at(i));
  return out;
}

std::uint64_t ColumnarSession::size() const {
  std::uint64_t best = UINT64_MAX;
  for (std::size_t j = 0; j < cols_.size(); ++j) best = std::min(best, pair(j, cols_[j].size()));
  return best;
}

bool ColumnarSession::at(std::uint64_t i) const {
  auto [j, k] = unpair(i);
  return j < cols_.size() && cols_[j][k];
}

std::unique_ptr<OperatorSession> ContinuousOperator::start() const {
  if (!factory_) throw Error(Error::Kind::kConfig, "empty operator");
  return factory_();
}

Bits ContinuousOperator::apply(const Bits& prefix) const {
  auto s = start();
  s->push(prefix);
  return s->output();
}

namespace {

class IdentitySession final : public LinearSession {
 protected:
  void consume(const Bits& bits, std::size_t begin, std::size_t end) override {
    out_.insert(out_.end(), bits.begin() + static_cast<std::ptrdiff_t>(begin), bits.begin() + static_cast<std::ptrdiff_t>(end));
  }
};

class ComposeSession final : public OperatorSession {
 public:
  ComposeSession(std::unique_ptr<OperatorSession> outer, std::unique_ptr<OperatorSession> inner)
      : outer_(std::move(outer)), inner_(std::move(inner)) {}

  std::uint64_t size() const override { return outer_->size(); }
  bool at(std::uint64_t i) const override { return outer_->at(i); }
  StateSnapshot snapshot() const override {
    auto s = inner_->snapshot();
    for (auto& kv : outer_->snapshot()) s.push_back(kv);
    return s;
  }

 protected:
  void consume(const Bits& bits, std::size_t begin, std::size_t end) override {
    inner_->push(bits, begin, end);
    const std::uint64_t have = inner_->size();
    if (have > fed_) {
      // Bounded chunks keep memory flat when the inner output is long.
      constexpr std::uint64_t kChunk = 1 << 16;
      while (fed_ < have) {
        const std::uint64_t to = std::min(have, fed_ + kChunk);
        outer_->push(inner_->output(fed_, to));
        fed_ = to;
      }
    }
  }

 private:
  std::unique_ptr<OperatorSession> outer_;
  std::unique_ptr<OperatorSession> inner_;
  std::uint64_t fed_ = 0;
};

class ColumnSession final : public LinearSession {
 public:
  explicit ColumnSession(std::uint64_t j) : j_(j) {}

 protected:
  void consume(const Bits& bits, std::size_t begin, std::size_t end) override {
    for (std::size_t i = begin; i < end; ++i, ++pos_) {
      if (pos_ == next_) {
        out_.push_back(bits[i]);
        next_ = pair(j_, out_.size());
      }
    }
  }

 private:
  std::uint64_t j_;
  std::uint64_t pos_ = 0;
  std::uint64_t next_ = pair(j_, 0);
};

}  // namespace

ContinuousOperator identity_operator() {
  return ContinuousOperator("identity", [] { return std::make_unique<IdentitySession>(); });
}

ContinuousOperator compose(const ContinuousOperator& outer, const ContinuousOperator& inner) {
  return ContinuousOperator(outer.name() + "(" + inner.name() + ")", [outer, inner] {
    return std::make_unique<ComposeSession>(outer.start(), inner.start());
  });
}

ContinuousOperator column_operator(std::uint64_t j) {
  return ContinuousOperator("column:" + std::to_string(j), [j] { return std::make_unique<ColumnSession>(j); });
}

Bits run_operator(const ContinuousOperator& op, const Real& input, std::uint64_t length) {
  auto s = op.start();
  constexpr std::uint64_t kChunk = 1 << 16;
  Bits chunk;
  for (std::uint64_t p = 0; p < length; p += kChunk) {
    chunk.clear();
    input.append_bits(p, std::min(kChunk, length - p), chunk);
    s->push(chunk);
  }
  return s->output();
}

}  // namespace limitlearn
