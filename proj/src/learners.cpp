#include "limitlearn/learners.hpp"

#include <algorithm>
#include <random>

#include "limitlearn/relations.hpp"

namespace limitlearn {

std::unique_ptr<LearnerSession> Learner::start() const {
  if (!factory_) throw Error(Error::Kind::kConfig, "empty learner");
  return factory_();
}

Conjecture Learner::conjecture(const Bits& prefix) const {
  auto s = start();
  s->push(prefix);
  return s->current();
}

// ---------------------------------------------------------------- Γ_i

namespace {

std::pair<bool, bool> case_bits(std::optional<std::uint64_t> l0, std::optional<std::uint64_t> l1) {
  if (l0 && (!l1 || *l0 <= *l1)) return {false, false};
  if (l1) return {true, true};
  return {false, true};
}

std::optional<std::uint64_t> least_compatible_code(const Sigma2Formula& f, const FinitePrefixStructure& fin,
                                                   std::uint64_t stage) {
  const std::size_t e = f.exists_arity();
  const std::uint64_t n = fin.size();
  std::optional<std::uint64_t> best;
  if (e == 0) {
    if (sigma2_compat(f, fin, {}, stage)) best = 0;
    return best;
  }
  if (n == 0) return best;
  std::vector<std::uint64_t> t(e, 0);
  while (true) {
    const auto code = fold_pair(t);
    if ((!best || code < *best) && sigma2_compat(f, fin, t, stage)) best = code;
    std::size_t p = e;
    while (p > 0 && t[p - 1] == n - 1) t[--p] = 0;
    if (p == 0) return best;
    ++t[p - 1];
  }
}

// One diagram decoder shared by several Γ_i. `on_stage(i, bits)` receives the two bits of
// pair i each time a new element is decoded.
class GammaBank {
 public:
  GammaBank(const std::vector<FormulaPair>& pairs, const Signature& sig) : fps_(sig) {
    for (const auto& p : pairs) trackers_.push_back({CompatTracker(p.rho0, sig), CompatTracker(p.rho1, sig)});
  }

  template <class OnStage>
  void feed(const Bits& bits, std::size_t begin, std::size_t end, OnStage&& on_stage) {
    while (begin < end) {
      const std::uint64_t need = fps_.next_boundary() - fps_.bits_seen();
      const std::size_t take = static_cast<std::size_t>(std::min<std::uint64_t>(need, end - begin));
      const std::size_t done = fps_.feed(bits, begin, begin + take);
      begin += take;
      if (done == 0) continue;
      const std::uint64_t stage = fps_.size();
      for (std::size_t i = 0; i < trackers_.size(); ++i) {
        auto& [t0, t1] = trackers_[i];
        t0.update(fps_, stage);
        t1.update(fps_, stage);
        on_stage(i, case_bits(t0.least_code(), t1.least_code()));
      }
    }
  }

  const FinitePrefixStructure& structure() const { return fps_; }

 private:
  FinitePrefixStructure fps_;
  std::vector<std::pair<CompatTracker, CompatTracker>> trackers_;
};

class GammaSession final : public LinearSession {
 public:
  GammaSession(const FormulaPair& pair, const Signature& sig) : bank_({pair}, sig) { out_ = {false, true}; }

  StateSnapshot snapshot() const override { return {{"elements", static_cast<std::int64_t>(bank_.structure().size())}}; }

 protected:
  void consume(const Bits& bits, std::size_t begin, std::size_t end) override {
    bank_.feed(bits, begin, end, [this](std::size_t, std::pair<bool, bool> b) {
      out_.push_back(b.first);
      out_.push_back(b.second);
    });
  }

 private:
  GammaBank bank_;
};

class MergedGammaSession final : public ColumnarSession {
 public:
  MergedGammaSession(const std::vector<FormulaPair>& pairs, const Signature& sig)
      : ColumnarSession(pairs.size()), bank_(pairs, sig) {
    for (auto& c : cols_) c = {false, true};
  }

  StateSnapshot snapshot() const override { return {{"elements", static_cast<std::int64_t>(bank_.structure().size())}}; }

 protected:
  void consume(const Bits& bits, std::size_t begin, std::size_t end) override {
    bank_.feed(bits, begin, end, [this](std::size_t i, std::pair<bool, bool> b) {
      cols_[i].push_back(b.first);
      cols_[i].push_back(b.second);
    });
  }

 private:
  GammaBank bank_;
};

}  // namespace

std::pair<bool, bool> gamma_i_step(const FormulaPair& pair, const Signature& sig, const Bits& prefix, std::uint64_t s) {
  if (s == 0) return {false, true};
  const std::uint64_t need = atoms_below(sig, s);
  if (prefix.size() < need)
    throw Error(Error::Kind::kTupleOutOfRange, "prefix decodes fewer than " + std::to_string(s) + " elements");
  auto fin = decode_prefix(sig, Bits(prefix.begin(), prefix.begin() + static_cast<std::ptrdiff_t>(need)));
  return case_bits(least_compatible_code(pair.rho0, fin, s), least_compatible_code(pair.rho1, fin, s));
}

ContinuousOperator gamma_operator(const FormulaPair& pair, const Signature& sig) {
  return ContinuousOperator("gamma", [pair, sig] { return std::make_unique<GammaSession>(pair, sig); });
}

ContinuousOperator merge_gamma(const std::vector<FormulaPair>& pairs, const Signature& sig) {
  if (pairs.empty()) throw Error(Error::Kind::kConfig, "merge_gamma needs at least one formula pair");
  return ContinuousOperator("merge-gamma", [pairs, sig] { return std::make_unique<MergedGammaSession>(pairs, sig); });
}

ContinuousOperator order_classifier() {
  auto op = gamma_operator(least_greatest_pair(), order_signature());
  return ContinuousOperator("order-classifier", [op] { return op.start(); });
}

// ---------------------------------------------------------------- f_sim and the learner machine

std::int64_t f_sim(const Bits& output, const Real& beta) {
  if (output.empty()) return -1;
  const std::uint64_t ell = output.size() - 1;
  if (output[ell] != beta(ell)) return -1;
  std::int64_t k = 0;
  while (static_cast<std::uint64_t>(k) < ell && output[ell - k - 1] == beta(ell - k - 1)) ++k;
  return k;
}

std::int64_t f_sim(const ContinuousOperator& op, const Bits& input_prefix, const Real& beta) {
  return f_sim(op.apply(input_prefix), beta);
}

LearnerState machine_transition(const LearnerState& state, const std::vector<std::int64_t>& now,
                                const std::vector<std::int64_t>& next) {
  LearnerState out = state;
  const std::size_t family = now.size();
  const std::uint64_t s = state.stage;
  if (state.c == 0) {
    // Least j <= s (within the family) attaining the maximum, which must not be -1.
    const std::size_t top = static_cast<std::size_t>(std::min<std::uint64_t>(s, family - 1));
    std::int64_t best = -1;
    for (std::size_t m = 0; m <= top; ++m) best = std::max(best, now[m]);
    if (best != -1) {
      std::size_t j = 0;
      while (now[j] != best) ++j;
      out.current = Conjecture::of(j);
      out.c = 1;
      out.b = s;
    } else {
      out.current = Conjecture::unknown();
    }
  } else if (state.c == 1) {
    const std::size_t i = state.current.index();
    if (next[i] == -1) {
      out.current = Conjecture::of(0);
      out.c = 2;
    }
  } else {
    const std::size_t i = state.current.index();
    if (next[i] == -1) {
      const std::uint64_t bound = std::min<std::uint64_t>(state.b, family - 1);
      if (i < bound) {
        out.current = Conjecture::of(i + 1);
      } else {
        out.current = Conjecture::unknown();
        out.c = 0;
      }
    }
  }
  out.stage = s + 1;
  return out;
}

std::pair<LearnerState, Conjecture> learner_step(const LearnerState& state, const ContinuousOperator& op,
                                                 const std::vector<Real>& betas, const Bits& input_prefix) {
  const Bits full = op.apply(input_prefix);
  const std::int64_t have = static_cast<std::int64_t>(full.size()) - 1;
  const std::int64_t ell_next = std::min(have, state.ell + 1);
  auto view = [&full](std::int64_t ell) { return Bits(full.begin(), full.begin() + (ell + 1)); };
  std::vector<std::int64_t> now, next;
  for (const auto& b : betas) {
    now.push_back(f_sim(view(std::min(state.ell, have)), b));
    next.push_back(f_sim(view(ell_next), b));
  }
  LearnerState out = machine_transition(state, now, next);
  out.ell = ell_next;
  return {out, out.current};
}

namespace {

class ReductionLearnerSession final : public LearnerSession {
 public:
  ReductionLearnerSession(const ContinuousOperator& op, const std::vector<Real>& betas)
      : op_(op.start()), betas_(betas), runs_(betas.size(), 0) {}

  void push_bit(bool b) override {
    op_->push_bit(b);
    const std::uint64_t avail = op_->size();
    do {
      stage(avail);
    } while (revealed_ < avail);
  }

  Conjecture current() const override { return state_.current; }

  StateSnapshot snapshot() const override {
    return {{"b", static_cast<std::int64_t>(state_.b)},
            {"c", state_.c},
            {"stage", static_cast<std::int64_t>(state_.stage)},
            {"ell", state_.ell}};
  }

 private:
  void fill(std::vector<std::int64_t>& f) const {
    f.resize(runs_.size());
    for (std::size_t i = 0; i < runs_.size(); ++i) f[i] = static_cast<std::int64_t>(runs_[i]) - 1;
  }

  void stage(std::uint64_t avail) {
    fill(now_);
    if (revealed_ < avail) {
      const std::uint64_t ell = revealed_++;
      const bool out = op_->at(ell);
      for (std::size_t i = 0; i < betas_.size(); ++i) runs_[i] = out == betas_[i](ell) ? runs_[i] + 1 : 0;
    }
    fill(next_);
    state_ = machine_transition(state_, now_, next_);
    state_.ell = static_cast<std::int64_t>(revealed_) - 1;
  }

  std::unique_ptr<OperatorSession> op_;
  std::vector<Real> betas_;
  std::vector<std::uint64_t> runs_;
  std::vector<std::int64_t> now_, next_;
  std::uint64_t revealed_ = 0;
  LearnerState state_;
};

}  // namespace

Learner learner_from_reduction(const ContinuousOperator& op, std::vector<Real> betas, std::string name) {
  if (betas.empty()) throw Error(Error::Kind::kConfig, "learner needs at least one witness real");
  const std::size_t n = betas.size();
  return Learner(std::move(name), n, [op, betas = std::move(betas)] {
    return std::make_unique<ReductionLearnerSession>(op, betas);
  });
}

std::vector<Real> gamma_witnesses(const std::vector<FormulaPair>& pairs, const std::vector<SpecPtr>& family,
                                  std::uint64_t probe_elements) {
  std::vector<Real> out;
  for (const auto& spec : family) {
    const Bits diagram = diagram_stream(spec, Enumeration()).prefix_elements(probe_elements);
    std::vector<Real> cols;
    for (const auto& p : pairs) {
      const Bits g = gamma_operator(p, spec->signature()).apply(diagram);
      cols.push_back(g.back() ? Real::ones() : Real::zeros());
    }
    out.push_back(Real::from_columns(std::move(cols)));
  }
  return out;
}

Learner sigma2_learner(const std::vector<FormulaPair>& pairs, const std::vector<SpecPtr>& family) {
  if (family.empty()) throw Error(Error::Kind::kConfig, "empty family");
  auto op = merge_gamma(pairs, family.front()->signature());
  return learner_from_reduction(op, gamma_witnesses(pairs, family), "sigma2");
}

// ---------------------------------------------------------------- reduction from a learner

std::vector<Real> default_transversal(std::size_t count) {
  std::vector<Real> out;
  for (std::size_t i = 0; i < count; ++i) {
    Bits period(i + 1, false);
    period.back() = true;
    out.push_back(Real::periodic({}, period));
  }
  return out;
}

namespace {

class FromLearnerSession final : public LinearSession {
 public:
  FromLearnerSession(const Learner& m, const std::vector<Real>& alphas) : m_(m.start()), alphas_(alphas) { emit(); }

  StateSnapshot snapshot() const override {
    auto c = m_->current();
    return {{"conjecture", c.is_unknown() ? -1 : static_cast<std::int64_t>(c.index())}};
  }

 protected:
  void consume(const Bits& bits, std::size_t begin, std::size_t end) override {
    for (std::size_t i = begin; i < end; ++i) {
      m_->push_bit(bits[i]);
      emit();
    }
  }

 private:
  void emit() {
    const auto c = m_->current();
    const std::uint64_t s = out_.size();
    out_.push_back(!c.is_unknown() && c.index() < alphas_.size() && alphas_[c.index()](s));
  }

  std::unique_ptr<LearnerSession> m_;
  const std::vector<Real>& alphas_;
};

}  // namespace

ContinuousOperator reduction_from_learner(const Learner& m, const std::vector<Real>& transversal) {
  for (std::size_t i = 0; i < transversal.size(); ++i) {
    for (std::size_t j = i + 1; j < transversal.size(); ++j) {
      if (decide_E0_exact(transversal[i], transversal[j]))
        throw Error(Error::Kind::kBadTransversal,
                    "transversal reals " + std::to_string(i) + " and " + std::to_string(j) + " are E0-equivalent");
    }
  }
  auto alphas = std::make_shared<const std::vector<Real>>(transversal);
  return ContinuousOperator("from-learner:" + m.name(), [m, alphas] {
    return std::make_unique<FromLearnerSession>(m, *alphas);
  });
}

// ---------------------------------------------------------------- {ω, ζ}

namespace {

class ConstantSession final : public LearnerSession {
 public:
  explicit ConstantSession(std::size_t i) : c_(Conjecture::of(i)) {}
  void push_bit(bool) override {}
  Conjecture current() const override { return c_; }

 private:
  Conjecture c_;
};

class LeastReactiveSession final : public LearnerSession {
 public:
  LeastReactiveSession() : fps_(order_signature()), least_(builtin_formula("has_least"), order_signature()) {}

  void push_bit(bool b) override {
    const auto before = fps_.size();
    fps_.feed_bit(b);
    if (fps_.size() == before) return;
    least_.update(fps_, fps_.size());
    const auto now = least_.least_code();
    current_ = now && prev_ == now ? Conjecture::of(0) : Conjecture::of(1);
    prev_ = now;
  }

  Conjecture current() const override { return current_; }

 private:
  FinitePrefixStructure fps_;
  CompatTracker least_;
  std::optional<std::uint64_t> prev_;
  Conjecture current_;
};

}  // namespace

Learner constant_learner(std::size_t index, std::size_t family_size) {
  return Learner("constant:" + std::to_string(index), family_size,
                 [index] { return std::make_unique<ConstantSession>(index); });
}

Learner least_reactive_learner() {
  return Learner("least-reactive", 2, [] { return std::make_unique<LeastReactiveSession>(); });
}

AdversaryResult adversary_omega_zeta(const Learner& m, std::uint64_t horizon, std::uint64_t seed) {
  AdversaryResult r;
  auto session = m.start();
  std::vector<std::int64_t> pos;
  std::int64_t low = 0, high = 0;
  Conjecture last = session->current();

  auto add = [&](std::int64_t p) {
    const std::size_t n = pos.size();
    pos.push_back(p);
    Bits layer;
    for (std::size_t x = 0; x < n; ++x) layer.push_back(pos[x] <= p);
    for (std::size_t y = 0; y <= n; ++y) layer.push_back(p <= pos[y]);
    for (bool b : layer) {
      session->push_bit(b);
      const Conjecture now = session->current();
      if (!(now == last)) ++r.flips;
      last = now;
    }
    r.prefix.insert(r.prefix.end(), layer.begin(), layer.end());
  };

  std::mt19937_64 rng(splitmix64(seed));
  const std::uint64_t start = 1 + bounded_draw(rng, 4);
  for (std::uint64_t i = 0; i < start; ++i) add(high++);

  r.conjectures.push_back(last);
  for (std::uint64_t step = 0; step < horizon; ++step) {
    const Conjecture c = session->current();
    if (!c.is_unknown() && c.index() == 0) {
      add(--low);
      ++r.minima_inserted;
    }
    add(high++);
    r.conjectures.push_back(last);
  }
  r.elements = pos.size();
  return r;
}

}  // namespace limitlearn
