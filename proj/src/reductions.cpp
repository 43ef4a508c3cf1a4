#include "limitlearn/reductions.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <memory>
#include <mutex>
#include <numeric>

#include "limitlearn/learners.hpp"

namespace limitlearn {

void WitnessSet::require_exact() const {
  if (betas.empty()) throw Error(Error::Kind::kConfig, "witness set is empty");
  for (const auto& b : betas) {
    if (b.has_tail()) continue;
    const auto* cols = b.columns();
    const bool columnwise = cols && std::all_of(cols->begin(), cols->end(), [](const Real& c) { return c.has_tail(); });
    if (!columnwise) throw Error(Error::Kind::kMissingDescriptor, "witness '" + b.describe() + "' has no exact descriptor");
  }
}

namespace {

void require_bitwise(const WitnessSet& ws) {
  ws.require_exact();
  for (const auto& b : ws.betas) {
    if (!b.has_tail())
      throw Error(Error::Kind::kMissingDescriptor, "witness '" + b.describe() + "' needs a periodic descriptor");
  }
}

}  // namespace

namespace {

bool same_real(const Real& a, const Real& b) {
  return a.tail()->normalized() == b.tail()->normalized();
}

// First position where two exact reals differ; they must differ somewhere.
std::uint64_t first_difference(const Real& a, const Real& b) {
  const auto& ta = *a.tail();
  const auto& tb = *b.tail();
  const std::uint64_t bound = std::max(ta.prefix.size(), tb.prefix.size()) +
                              std::lcm<std::uint64_t>(ta.period.size(), tb.period.size());
  for (std::uint64_t n = 0; n < bound; ++n) {
    if (ta.bit(n) != tb.bit(n)) return n;
  }
  throw Error(Error::Kind::kWitnessTooSimilar, "reals agree everywhere");
}

// Output bit s is the input bit at pos(s); emitted in order once that bit has arrived.
class SamplingSession final : public LinearSession {
 public:
  using Position = std::function<std::uint64_t(std::uint64_t)>;
  explicit SamplingSession(Position pos) : pos_(std::move(pos)) {}

 protected:
  void consume(const Bits& bits, std::size_t begin, std::size_t end) override {
    in_.insert(in_.end(), bits.begin() + static_cast<std::ptrdiff_t>(begin), bits.begin() + static_cast<std::ptrdiff_t>(end));
    while (true) {
      const std::uint64_t p = pos_(out_.size());
      if (p >= in_.size()) break;
      out_.push_back(in_[p]);
    }
  }

 private:
  Position pos_;
  Bits in_;
};

ContinuousOperator after(const ContinuousOperator& outer, const ContinuousOperator& inner) {
  return inner ? compose(outer, inner) : outer;
}

}  // namespace

// ---------------------------------------------------------------- E1

namespace {

class XiWalker {
 public:
  explicit XiWalker(std::uint64_t n) : n_(n) {
    if (n < 2) throw Error(Error::Kind::kConfig, "xi needs at least two witnesses");
  }
  std::tuple<std::uint64_t, std::uint64_t, std::uint64_t> next() {
    while (true) {
      const auto [ij, t] = unpair(code_++);
      const auto [i, j] = unpair(ij);
      if (i != j && i < n_ && j < n_) return {i, j, t};
    }
  }

 private:
  std::uint64_t n_;
  std::uint64_t code_ = 0;
};

class E1IndexCache {
 public:
  E1IndexCache(WitnessSet ws, std::uint64_t bound) : ws_(std::move(ws)), bound_(bound), xi_(ws_.betas.size()) {
    ws_.require_exact();
    m_.push_back(0);
  }

  std::uint64_t at(std::uint64_t s) {
    std::lock_guard<std::mutex> lock(mu_);
    while (m_.size() <= s) extend();
    return m_[s];
  }

 private:
  void extend() {
    const auto [i, j, t] = xi_.next();
    (void)t;
    const std::uint64_t from = unpair(m_.back()).first + 1;
    for (std::uint64_t q = from; q < from + bound_; ++q) {
      const Real a = column(ws_.betas[i], q), b = column(ws_.betas[j], q);
      if (!same_real(a, b)) {
        m_.push_back(pair(q, first_difference(a, b)));
        return;
      }
    }
    throw Error(Error::Kind::kWitnessTooSimilar, "witnesses " + std::to_string(i) + " and " + std::to_string(j) +
                                                     " agree on columns " + std::to_string(from) + ".." +
                                                     std::to_string(from + bound_ - 1));
  }

  std::mutex mu_;
  WitnessSet ws_;
  std::uint64_t bound_;
  XiWalker xi_;
  std::vector<std::uint64_t> m_;
};

}  // namespace

std::tuple<std::uint64_t, std::uint64_t, std::uint64_t> xi(std::uint64_t s, std::uint64_t n) {
  XiWalker w(n);
  for (std::uint64_t k = 0; k < s; ++k) w.next();
  return w.next();
}

std::vector<std::uint64_t> e1_index_set(const WitnessSet& ws, std::uint64_t count, std::uint64_t search_bound) {
  E1IndexCache cache(ws, search_bound);
  std::vector<std::uint64_t> out;
  for (std::uint64_t s = 0; s <= count; ++s) out.push_back(cache.at(s));
  return out;
}

ContinuousOperator e1_collapse(const WitnessSet& ws, const ContinuousOperator& inner, std::uint64_t search_bound) {
  auto cache = std::make_shared<E1IndexCache>(ws, search_bound);
  cache->at(ws.betas.size());  // surfaces WitnessTooSimilar early
  ContinuousOperator psi("e1-collapse", [cache] {
    return std::make_unique<SamplingSession>([cache](std::uint64_t s) { return cache->at(s); });
  });
  return after(psi, inner);
}

// ---------------------------------------------------------------- E2

namespace {

// Stage s -> s+1 given p(·, s+1). Indices are capped at the witness count.
void e2_transition(E2MachineState& st, const std::vector<mpq_class>& p) {
  const std::uint64_t n = p.size();
  const std::uint64_t top = std::min<std::uint64_t>(st.b, n - 1);
  if (p[st.i] <= mpq_class(st.b)) {
    // Case 1: nothing changes.
  } else if (st.c == 0) {
    st.i = 0;
    st.c = 1;
  } else if (st.i < top) {
    ++st.i;
  } else {
    const std::uint64_t range = std::min<std::uint64_t>(st.b + 1, n - 1);
    std::uint64_t best = 0;
    for (std::uint64_t j = 1; j <= range; ++j) {
      if (p[j] < p[best]) best = j;
    }
    mpz_class fl;
    mpz_fdiv_q(fl.get_mpz_t(), p[best].get_num_mpz_t(), p[best].get_den_mpz_t());
    const mpz_class bump = fl + 1;
    st.i = best;
    st.c = 0;
    st.b = std::max<std::uint64_t>(st.b + 1, bump.get_ui());
  }
  ++st.stage;
}

class E2Session final : public LinearSession {
 public:
  E2Session(std::unique_ptr<OperatorSession> inner, std::vector<Real> betas)
      : inner_(std::move(inner)), betas_(std::move(betas)), p_(betas_.size(), mpq_class(0)) {}

  StateSnapshot snapshot() const override {
    return {{"i", static_cast<std::int64_t>(st_.i)},
            {"b", static_cast<std::int64_t>(st_.b)},
            {"c", st_.c},
            {"ell", st_.ell}};
  }

 protected:
  void consume(const Bits& bits, std::size_t begin, std::size_t end) override {
    for (std::size_t k = begin; k < end; ++k) {
      inner_->push(bits, k, k + 1);
      const auto avail = static_cast<std::int64_t>(inner_->size());
      do {
        stage(avail);
      } while (st_.ell + 1 < avail);
    }
  }

 private:
  void stage(std::int64_t avail) {
    out_.push_back(betas_[st_.i](st_.stage));
    if (st_.ell + 1 < avail) {
      const auto ell = static_cast<std::uint64_t>(++st_.ell);
      const bool bit = inner_->at(ell);
      for (std::size_t i = 0; i < betas_.size(); ++i) {
        if (bit != betas_[i](ell)) p_[i] += mpq_class(1, ell + 1);
      }
    }
    e2_transition(st_, p_);
  }

  std::unique_ptr<OperatorSession> inner_;
  std::vector<Real> betas_;
  std::vector<mpq_class> p_;
  E2MachineState st_;
};

mpq_class partial_sum(const Real& beta, const Bits& out, std::int64_t ell) {
  mpq_class sum(0);
  for (std::int64_t k = 0; k <= ell; ++k) {
    if (out[k] != beta(k)) sum += mpq_class(1, k + 1);
  }
  return sum;
}

}  // namespace

std::pair<E2MachineState, bool> e2_collapse_step(const E2MachineState& state, const WitnessSet& ws,
                                                 const Bits& inner_output) {
  E2MachineState st = state;
  const bool bit = ws.betas[st.i](st.stage);
  if (st.ell + 1 < static_cast<std::int64_t>(inner_output.size())) ++st.ell;
  std::vector<mpq_class> p;
  for (const auto& b : ws.betas) p.push_back(partial_sum(b, inner_output, st.ell));
  e2_transition(st, p);
  return {st, bit};
}

std::string e2_partial_sum(const Real& beta, const Bits& inner_output, std::int64_t ell) {
  return partial_sum(beta, inner_output, ell).get_str();
}

ContinuousOperator e2_collapse(const WitnessSet& ws, const ContinuousOperator& inner) {
  require_bitwise(ws);
  for (std::size_t i = 0; i < ws.betas.size(); ++i) {
    for (std::size_t j = i + 1; j < ws.betas.size(); ++j) {
      if (decide_E2_exact(ws.betas[i], ws.betas[j]))
        throw Error(Error::Kind::kWitnessTooSimilar,
                    "witnesses " + std::to_string(i) + " and " + std::to_string(j) + " are E2-equivalent");
    }
  }
  auto in = inner ? inner : identity_operator();
  auto betas = ws.betas;
  return ContinuousOperator("e2-collapse", [in, betas] { return std::make_unique<E2Session>(in.start(), betas); });
}

// ---------------------------------------------------------------- E3

std::vector<std::uint64_t> e3_separating_columns(const WitnessSet& ws, std::uint64_t column_budget) {
  ws.require_exact();
  std::vector<std::uint64_t> q;
  for (std::size_t i = 0; i < ws.betas.size(); ++i) {
    for (std::size_t j = i + 1; j < ws.betas.size(); ++j) {
      std::optional<std::uint64_t> found;
      for (std::uint64_t c = 0; c < column_budget && !found; ++c) {
        if (!decide_E0_exact(column(ws.betas[i], c), column(ws.betas[j], c))) found = c;
      }
      if (!found)
        throw Error(Error::Kind::kNoSeparatingColumn, "no column below " + std::to_string(column_budget) +
                                                          " separates witnesses " + std::to_string(i) + " and " +
                                                          std::to_string(j));
      q.push_back(*found);
    }
  }
  return q;
}

ContinuousOperator e3_finite_collapse(const WitnessSet& ws, std::uint64_t column_budget) {
  auto q = e3_separating_columns(ws, column_budget);
  if (q.empty()) throw Error(Error::Kind::kConfig, "e3-finite needs at least two witnesses");
  return ContinuousOperator("e3-finite", [q] {
    return std::make_unique<SamplingSession>([q](std::uint64_t s) { return pair(q[s % q.size()], s / q.size()); });
  });
}

// ---------------------------------------------------------------- box family

std::string to_string(BoxVariant v) { return v == BoxVariant::kPredicate ? "predicate" : "graph"; }

BoxVariant parse_box_variant(std::string_view name) {
  if (name == "predicate") return BoxVariant::kPredicate;
  if (name == "graph") return BoxVariant::kGraph;
  throw Error(Error::Kind::kConfig, "unknown box variant '" + std::string(name) + "'");
}

namespace {

// Reads a box structure diagram and keeps, for every box below `boxes`, the diagram of the
// order on its members in discovery order.
class BoxDecoder {
 public:
  BoxDecoder(BoxVariant variant, std::size_t boxes, std::size_t jmax)
      : variant_(variant),
        fps_(variant == BoxVariant::kPredicate ? box_signature(jmax) : graph_signature()),
        members_(boxes),
        diagrams_(boxes) {
    if (variant == BoxVariant::kPredicate && boxes > jmax)
      throw Error(Error::Kind::kBadBudget, "box budget exceeds the number of box predicates");
  }

  void feed(const Bits& bits, std::size_t begin, std::size_t end) {
    while (begin < end) {
      const std::uint64_t need = fps_.next_boundary() - fps_.bits_seen();
      const std::size_t take = static_cast<std::size_t>(std::min<std::uint64_t>(need, end - begin));
      const std::size_t done = fps_.feed(bits, begin, begin + take);
      begin += take;
      if (done) element(fps_.size() - 1);
    }
  }

  const Bits& diagram(std::size_t j) const { return diagrams_[j]; }
  std::size_t members(std::size_t j) const { return members_[j].size(); }
  std::uint64_t elements() const { return fps_.size(); }

 private:
  void element(std::uint64_t n) {
    if (variant_ == BoxVariant::kPredicate) {
      for (std::size_t j = 0; j < members_.size(); ++j) {
        if (fps_.holds1(1 + j, n)) join(j, n);
      }
      return;
    }
    graph_element(n);
  }

  void graph_element(std::uint64_t n) {
    outdeg_.push_back(0);
    succ_.push_back(0);
    in_.emplace_back();
    cycle_box_.push_back(-1);
    member_.push_back(false);
    for (std::uint64_t x = 0; x <= n; ++x) {
      if (fps_.holds2(0, x, n)) add_edge(x, n);
      if (x != n && fps_.holds2(0, n, x)) add_edge(n, x);
    }
    // A cycle closes when its last vertex arrives; cycle vertices keep out-degree 1.
    const std::uint64_t max_len = members_.size() + 2;
    std::uint64_t v = n;
    std::vector<std::uint64_t> walk;
    for (std::uint64_t len = 1; len <= max_len; ++len) {
      if (outdeg_[v] != 1) break;
      walk.push_back(v);
      v = succ_[v];
      if (v == n) {
        if (len >= 3) close_cycle(walk, len - 3);
        break;
      }
    }
    if (cycle_box_[n] < 0) {
      for (std::uint64_t y = 0; y < n; ++y) {
        if (cycle_box_[y] >= 0 && fps_.holds2(0, n, y)) join_graph(static_cast<std::size_t>(cycle_box_[y]), n);
      }
    }
  }

  void add_edge(std::uint64_t a, std::uint64_t b) {
    if (outdeg_[a]++ == 0) succ_[a] = b;
    in_[b].push_back(a);
  }

  void close_cycle(const std::vector<std::uint64_t>& cycle, std::uint64_t box) {
    for (auto v : cycle) cycle_box_[v] = static_cast<std::int64_t>(box);
    std::vector<std::uint64_t> found;
    for (auto v : cycle) {
      for (auto x : in_[v]) {
        if (cycle_box_[x] < 0) found.push_back(x);
      }
    }
    std::sort(found.begin(), found.end());
    for (auto x : found) join_graph(box, x);
  }

  void join_graph(std::size_t box, std::uint64_t x) {
    if (member_[x]) return;
    member_[x] = true;
    join(box, x);
  }

  bool leq(std::uint64_t a, std::uint64_t b) const {
    if (variant_ == BoxVariant::kPredicate) return fps_.holds2(0, a, b);
    return a == b || fps_.holds2(0, a, b);
  }

  void join(std::size_t j, std::uint64_t x) {
    auto& m = members_[j];
    m.push_back(x);
    const std::uint64_t k = m.size() - 1;
    append_layer_with(
        order_signature(), k, [](std::size_t, std::uint64_t) { return false; },
        [&](std::size_t, std::uint64_t a, std::uint64_t b) { return leq(m[a], m[b]); }, diagrams_[j]);
  }

  BoxVariant variant_;
  FinitePrefixStructure fps_;
  std::vector<std::vector<std::uint64_t>> members_;
  std::vector<Bits> diagrams_;
  // graph variant
  std::vector<std::uint64_t> outdeg_, succ_;
  std::vector<std::vector<std::uint64_t>> in_;
  std::vector<std::int64_t> cycle_box_;
  std::vector<bool> member_;
};

class BoxExtractSession final : public LinearSession {
 public:
  BoxExtractSession(std::uint64_t j, BoxVariant variant, std::size_t jmax) : j_(j), dec_(variant, j + 1, jmax) {}

  StateSnapshot snapshot() const override { return {{"members", static_cast<std::int64_t>(dec_.members(j_))}}; }

 protected:
  void consume(const Bits& bits, std::size_t begin, std::size_t end) override {
    dec_.feed(bits, begin, end);
    const Bits& d = dec_.diagram(j_);
    out_.insert(out_.end(), d.begin() + static_cast<std::ptrdiff_t>(out_.size()), d.end());
  }

 private:
  std::uint64_t j_;
  BoxDecoder dec_;
};

class ThetaSession final : public ColumnarSession {
 public:
  ThetaSession(std::uint64_t budget, BoxVariant variant, std::size_t jmax)
      : ColumnarSession(budget), dec_(variant, budget, jmax), fed_(budget, 0) {
    auto op = order_classifier();
    for (std::uint64_t j = 0; j < budget; ++j) {
      classifiers_.push_back(op.start());
      cols_[j] = classifiers_[j]->output();
    }
  }

  StateSnapshot snapshot() const override {
    StateSnapshot s;
    for (std::size_t j = 0; j < cols_.size(); ++j) s.push_back({"members" + std::to_string(j), static_cast<std::int64_t>(dec_.members(j))});
    return s;
  }

 protected:
  void consume(const Bits& bits, std::size_t begin, std::size_t end) override {
    dec_.feed(bits, begin, end);
    for (std::size_t j = 0; j < cols_.size(); ++j) {
      const Bits& d = dec_.diagram(j);
      if (fed_[j] == d.size()) continue;
      classifiers_[j]->push(d, fed_[j], d.size());
      fed_[j] = d.size();
      const std::uint64_t have = cols_[j].size(), now = classifiers_[j]->size();
      for (std::uint64_t k = have; k < now; ++k) cols_[j].push_back(classifiers_[j]->at(k));
    }
  }

 private:
  BoxDecoder dec_;
  std::vector<std::unique_ptr<OperatorSession>> classifiers_;
  std::vector<std::size_t> fed_;
};

}  // namespace

ContinuousOperator box_extract(std::uint64_t j, BoxVariant variant, std::size_t jmax) {
  if (variant == BoxVariant::kPredicate && j >= jmax)
    throw Error(Error::Kind::kBadBudget, "box " + std::to_string(j) + " is beyond the signature");
  return ContinuousOperator("box-extract:" + std::to_string(j),
                            [=] { return std::make_unique<BoxExtractSession>(j, variant, jmax); });
}

ContinuousOperator theta(std::uint64_t column_budget, BoxVariant variant, std::size_t jmax) {
  if (column_budget == 0) throw Error(Error::Kind::kBadBudget, "theta needs a positive column budget");
  if (variant == BoxVariant::kPredicate && column_budget > jmax)
    throw Error(Error::Kind::kBadBudget, "column budget exceeds the number of box predicates");
  return ContinuousOperator("theta", [=] { return std::make_unique<ThetaSession>(column_budget, variant, jmax); });
}

// ---------------------------------------------------------------- Ψ_γ

std::optional<std::uint64_t> psi_v(const Bits& alpha, const Real& beta, std::uint64_t s) {
  if (s >= alpha.size()) throw Error(Error::Kind::kTupleOutOfRange, "stage beyond the prefix");
  if (alpha[s] != beta(s)) return std::nullopt;
  std::uint64_t t = s;
  while (t > 0 && alpha[t - 1] == beta(t - 1)) --t;
  return t;
}

namespace {

void emit_psi_layer(const PsiGammaState& st, std::uint64_t e, Bits& out) {
  append_layer_with(
      box_signature(st.boxes.size()), e,
      [&](std::size_t rel, std::uint64_t x) { return st.box_of[x] == rel - 1; },
      [&](std::size_t, std::uint64_t x, std::uint64_t y) {
        return st.box_of[x] == st.box_of[y] && st.key[x] <= st.key[y];
      },
      out);
}

std::uint64_t add_element(PsiGammaState& st, std::size_t box, double key, Bits& out) {
  const std::uint64_t e = st.box_of.size();
  st.box_of.push_back(box);
  st.key.push_back(key);
  emit_psi_layer(st, e, out);
  return e;
}

// One growth step of a box: optionally a new least element, then a new greatest element,
// then one gap filled in FIFO order.
void grow_box(PsiGammaState& st, std::size_t j, bool new_min, Bits& out) {
  auto& box = st.boxes[j];
  if (new_min) {
    const auto e = add_element(st, j, st.key[box.least] - 1.0, out);
    box.gaps.push_back({e, box.least});
    box.least = e;
    ++st.below_min[j];
  }
  const auto g = add_element(st, j, st.key[box.greatest] + 1.0, out);
  box.gaps.push_back({box.greatest, g});
  box.greatest = g;
  if (!box.gaps.empty()) {
    const auto [a, b] = box.gaps.front();
    box.gaps.pop_front();
    const auto m = add_element(st, j, (st.key[a] + st.key[b]) / 2.0, out);
    box.gaps.push_back({a, m});
    box.gaps.push_back({m, b});
  }
}

}  // namespace

PsiGammaState psi_gamma_start(std::size_t boxes, Bits& out) {
  if (boxes == 0) throw Error(Error::Kind::kConfig, "psi-gamma needs at least one witness");
  PsiGammaState st;
  st.boxes.resize(boxes);
  st.below_min.assign(boxes, 0);
  for (std::size_t j = 0; j < boxes; ++j) {
    const auto e = add_element(st, j, 0.0, out);
    st.boxes[j].least = st.boxes[j].greatest = e;
  }
  return st;
}

PsiGammaState psi_gamma_step(const PsiGammaState& state, const std::vector<Real>& gammas, const Bits& alpha,
                             Bits& out) {
  PsiGammaState st = state;
  const std::uint64_t s = st.stage;
  const std::size_t n = gammas.size();
  if (alpha.size() <= s + 1) throw Error(Error::Kind::kTupleOutOfRange, "psi-gamma step needs alpha(s+1)");
  if (st.v.empty()) {
    for (std::size_t i = 0; i < n; ++i)
      st.v.push_back(alpha[0] == gammas[i](0) ? std::optional<std::uint64_t>(0) : std::nullopt);
  }
  const bool a = alpha[s + 1];
  for (std::size_t i = 0; i < n; ++i) {
    if (a == gammas[i](s + 1)) {
      if (!st.v[i]) st.v[i] = s + 1;
    } else {
      st.v[i] = std::nullopt;
    }
  }
  const std::uint64_t cap = std::min<std::uint64_t>(s + 1, n - 1);
  bool case1 = false;
  for (std::uint64_t i = 0; i <= cap && !case1; ++i) case1 = st.v[i].has_value();

  std::optional<std::size_t> current;
  if (case1) {
    if (st.v[st.p]) {
      current = st.p;
    } else if (st.p < std::min<std::uint64_t>(st.b, n - 1)) {
      current = ++st.p;
    } else {
      std::uint64_t best = cap + 1;
      for (std::uint64_t j = 0; j <= cap; ++j) {
        if (st.v[j] && (best > cap || *st.v[j] < *st.v[best])) best = j;
      }
      st.b = s + 1;
      st.p = best;
      current = best;
    }
  }
  for (std::size_t j = 0; j < n; ++j) grow_box(st, j, !(current && *current == j), out);
  ++st.stage;
  return st;
}

namespace {

class PsiGammaSession final : public LinearSession {
 public:
  explicit PsiGammaSession(std::vector<Real> gammas) : gammas_(std::move(gammas)) {
    st_ = psi_gamma_start(gammas_.size(), out_);
  }

  StateSnapshot snapshot() const override {
    return {{"p", static_cast<std::int64_t>(st_.p)},
            {"b", static_cast<std::int64_t>(st_.b)},
            {"stage", static_cast<std::int64_t>(st_.stage)}};
  }

 protected:
  void consume(const Bits& bits, std::size_t begin, std::size_t end) override {
    for (std::size_t k = begin; k < end; ++k) {
      alpha_.push_back(bits[k]);
      if (alpha_.size() >= st_.stage + 2) st_ = psi_gamma_step(st_, gammas_, alpha_, out_);
    }
  }

 private:
  std::vector<Real> gammas_;
  Bits alpha_;
  PsiGammaState st_;
};

}  // namespace

ContinuousOperator psi_gamma(const std::vector<Real>& gammas) {
  if (gammas.empty()) throw Error(Error::Kind::kConfig, "psi-gamma needs at least one witness");
  return ContinuousOperator("psi-gamma", [gammas] { return std::make_unique<PsiGammaSession>(gammas); });
}

// ---------------------------------------------------------------- C_st assembly

Signature cst_signature(std::size_t boxes, std::size_t parts) {
  std::vector<RelationSymbol> rels = box_signature(boxes).relations();
  for (std::size_t j = 0; j < parts; ++j) rels.push_back({"qbox" + std::to_string(j), 1});
  return Signature(rels);
}

namespace {

class CstSession final : public LinearSession {
 public:
  CstSession(const std::vector<ContinuousOperator>& parts, std::size_t boxes)
      : boxes_(boxes), sig_(cst_signature(boxes, parts.size())) {
    for (const auto& p : parts) {
      parts_.push_back(p.start());
      decoded_.emplace_back(box_signature(boxes));
      fed_.push_back(0);
    }
    sync();
  }

  StateSnapshot snapshot() const override { return {{"elements", static_cast<std::int64_t>(emitted_)}}; }

 protected:
  void consume(const Bits& bits, std::size_t begin, std::size_t end) override {
    for (auto& p : parts_) p->push(bits, begin, end);
    sync();
  }

 private:
  void sync() {
    for (std::size_t j = 0; j < parts_.size(); ++j) {
      const std::uint64_t now = parts_[j]->size();
      if (now == fed_[j]) continue;
      const Bits chunk = parts_[j]->output(fed_[j], now);
      decoded_[j].feed(chunk);
      fed_[j] = now;
    }
    const std::size_t q = parts_.size();
    while (true) {
      const auto [j, k] = unpair(emitted_);
      if (j < q && decoded_[j].size() <= k) break;
      emit(emitted_++);
    }
  }

  void emit(std::uint64_t g) {
    const std::size_t q = parts_.size();
    append_layer_with(
        sig_, g,
        [&](std::size_t rel, std::uint64_t x) {
          const auto [jx, kx] = unpair(x);
          if (jx >= q) return false;
          if (rel <= boxes_) return decoded_[jx].holds1(rel, kx);
          return rel - boxes_ - 1 == jx;
        },
        [&](std::size_t, std::uint64_t x, std::uint64_t y) {
          if (x == y) return true;
          const auto [jx, kx] = unpair(x);
          const auto [jy, ky] = unpair(y);
          return jx == jy && jx < q && decoded_[jx].holds2(0, kx, ky);
        },
        out_);
  }

  std::size_t boxes_;
  Signature sig_;
  std::vector<std::unique_ptr<OperatorSession>> parts_;
  std::vector<FinitePrefixStructure> decoded_;
  std::vector<std::uint64_t> fed_;
  std::uint64_t emitted_ = 0;
};

}  // namespace

ContinuousOperator cst_assemble(const std::vector<ContinuousOperator>& parts, std::size_t boxes) {
  if (parts.empty()) throw Error(Error::Kind::kConfig, "cst-assemble needs at least one part");
  return ContinuousOperator("cst-assemble", [parts, boxes] { return std::make_unique<CstSession>(parts, boxes); });
}

ContinuousOperator xi_embedding(const ContinuousOperator& gamma, const WitnessSet& ws, std::size_t parts) {
  ws.require_exact();
  std::vector<ContinuousOperator> ops;
  for (std::size_t j = 0; j < parts; ++j) {
    std::vector<Real> cols;
    for (const auto& b : ws.betas) cols.push_back(column(b, j));
    ops.push_back(after(psi_gamma(cols), after(column_operator(j), gamma)));
  }
  return cst_assemble(ops, ws.betas.size());
}

// ---------------------------------------------------------------- Z0

namespace {

std::vector<Rational> pairwise_densities(const WitnessSet& ws) {
  require_bitwise(ws);
  std::vector<Rational> out;
  for (std::size_t i = 0; i < ws.betas.size(); ++i) {
    for (std::size_t j = i + 1; j < ws.betas.size(); ++j) {
      out.push_back(periodic_density(*sym_diff(ws.betas[i], ws.betas[j]).tail()));
    }
  }
  return out;
}

class Z0Session final : public LinearSession {
 public:
  Z0Session(std::unique_ptr<OperatorSession> inner, std::vector<Real> betas, Rational q0)
      : inner_(std::move(inner)), betas_(std::move(betas)), q0_(q0), ones_(betas_.size(), 0), m_(betas_.size(), 0) {}

  StateSnapshot snapshot() const override {
    StateSnapshot s{{"ell", ell_}};
    for (std::size_t i = 0; i < m_.size(); ++i) s.push_back({"m" + std::to_string(i), static_cast<std::int64_t>(m_[i])});
    return s;
  }

 protected:
  void consume(const Bits& bits, std::size_t begin, std::size_t end) override {
    for (std::size_t k = begin; k < end; ++k) {
      inner_->push(bits, k, k + 1);
      const auto avail = static_cast<std::int64_t>(inner_->size());
      do {
        stage(avail);
      } while (ell_ + 1 < avail);
    }
  }

 private:
  void stage(std::int64_t avail) {
    if (ell_ + 1 < avail) {
      const auto t = static_cast<std::uint64_t>(++ell_);
      const bool bit = inner_->at(t);
      for (std::size_t i = 0; i < betas_.size(); ++i) {
        if (bit != betas_[i](t)) ++ones_[i];
        if (q0_.below_fraction(ones_[i], t + 1)) ++m_[i];
      }
    }
    std::size_t j = 0;
    for (std::size_t i = 1; i < m_.size(); ++i) {
      if (m_[i] < m_[j]) j = i;
    }
    out_.push_back(betas_[j](out_.size()));
  }

  std::unique_ptr<OperatorSession> inner_;
  std::vector<Real> betas_;
  Rational q0_;
  std::int64_t ell_ = -1;
  std::vector<std::uint64_t> ones_, m_;
};

}  // namespace

Rational z0_default_threshold(const WitnessSet& ws) {
  auto d = pairwise_densities(ws);
  if (d.empty()) throw Error(Error::Kind::kConfig, "z0-collapse needs at least two witnesses");
  const Rational least = *std::min_element(d.begin(), d.end());
  if (least.numerator() == 0) throw Error(Error::Kind::kBadThreshold, "two witnesses have density-zero difference");
  return Rational(least.numerator(), least.denominator() * 2);
}

void z0_validate_threshold(const WitnessSet& ws, const Rational& q0) {
  if (q0.numerator() == 0) throw Error(Error::Kind::kBadThreshold, "q0 must be positive");
  for (const auto& d : pairwise_densities(ws)) {
    if (!(q0 < d)) throw Error(Error::Kind::kBadThreshold, "q0 = " + q0.str() + " is not below density " + d.str());
  }
}

ContinuousOperator z0_collapse(const WitnessSet& ws, const Rational& q0, const ContinuousOperator& inner) {
  z0_validate_threshold(ws, q0);
  auto in = inner ? inner : identity_operator();
  auto betas = ws.betas;
  return ContinuousOperator("z0-collapse",
                            [in, betas, q0] { return std::make_unique<Z0Session>(in.start(), betas, q0); });
}

// ---------------------------------------------------------------- E_set

namespace {

class EsetSession final : public OperatorSession {
 public:
  EsetSession() : fps_(order_signature()) {}

  std::uint64_t size() const override { return pair(0, consumed() + 1); }

  bool at(std::uint64_t pos) const override {
    const auto [m, s] = unpair(pos);
    const std::uint64_t i = m / 2;
    if (m % 2 == 0) return s >= i;
    return i < flip_.size() && flip_[i] && s >= *flip_[i];
  }

  StateSnapshot snapshot() const override { return {{"elements", static_cast<std::int64_t>(fps_.size())}}; }

  std::optional<std::uint64_t> flip(std::uint64_t i) const { return i < flip_.size() ? flip_[i] : std::nullopt; }

 protected:
  void consume(const Bits& bits, std::size_t begin, std::size_t end) override {
    while (begin < end) {
      const std::uint64_t need = fps_.next_boundary() - fps_.bits_seen();
      const std::size_t take = static_cast<std::size_t>(std::min<std::uint64_t>(need, end - begin));
      const std::size_t done = fps_.feed(bits, begin, begin + take);
      begin += take;
      if (done) element(fps_.size() - 1);
    }
  }

 private:
  // Element n is decoded by α↾s exactly when s >= bits_seen().
  void element(std::uint64_t n) {
    const std::uint64_t s = fps_.bits_seen();
    flip_.push_back(std::nullopt);
    std::vector<std::uint64_t> still;
    for (auto x : least_) {
      if (fps_.holds2(0, x, n)) still.push_back(x);
      else flip_[x] = s;
    }
    bool least = true;
    for (std::uint64_t y = 0; y <= n && least; ++y) least = fps_.holds2(0, n, y);
    if (least) still.push_back(n);
    else flip_[n] = s;
    least_ = std::move(still);
  }

  FinitePrefixStructure fps_;
  std::vector<std::optional<std::uint64_t>> flip_;
  std::vector<std::uint64_t> least_;  // decoded elements that are below every decoded element
};

}  // namespace

ContinuousOperator eset_pair_operator() {
  return ContinuousOperator("eset-pair", [] { return std::make_unique<EsetSession>(); });
}

std::optional<std::uint64_t> eset_flip_stage(const Bits& order_diagram, std::uint64_t i) {
  EsetSession s;
  s.push(order_diagram);
  return s.flip(i);
}

// ---------------------------------------------------------------- registry

namespace {

std::uint64_t suffix_index(std::string_view name, std::string_view head) {
  const std::string arg(name.substr(head.size()));
  std::size_t pos = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(arg, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (arg.empty() || pos != arg.size()) throw Error(Error::Kind::kConfig, "bad operator name '" + std::string(name) + "'");
  return v;
}

}  // namespace

std::vector<std::string> operator_names() {
  return {"identity",    "column:<j>",  "order-classifier", "box-extract:<j>", "theta",    "e1-collapse",
          "e2-collapse", "e3-finite",   "z0-collapse",      "psi-gamma",       "cst-assemble", "eset-pair"};
}

ContinuousOperator make_operator(std::string_view name, const OperatorParams& params) {
  const auto& in = params.inner;
  if (name == "identity") return in ? in : identity_operator();
  if (name.rfind("column:", 0) == 0) return after(column_operator(suffix_index(name, "column:")), in);
  if (name == "order-classifier") return after(order_classifier(), in);
  if (name.rfind("box-extract:", 0) == 0)
    return after(box_extract(suffix_index(name, "box-extract:"), params.variant, params.jmax), in);
  if (name == "theta") return after(theta(params.column_budget, params.variant, params.jmax), in);
  if (name == "e1-collapse") return e1_collapse(params.witnesses, in, params.search_bound);
  if (name == "e2-collapse") return e2_collapse(params.witnesses, in);
  if (name == "e3-finite") return after(e3_finite_collapse(params.witnesses, params.search_bound), in);
  if (name == "z0-collapse")
    return z0_collapse(params.witnesses, params.q0 ? *params.q0 : z0_default_threshold(params.witnesses), in);
  if (name == "psi-gamma") return after(psi_gamma(params.witnesses.betas), in);
  if (name == "cst-assemble") return xi_embedding(in ? in : identity_operator(), params.witnesses, params.column_budget);
  if (name == "eset-pair") return after(eset_pair_operator(), in);
  throw Error(Error::Kind::kConfig, "unknown operator '" + std::string(name) + "'");
}

}  // namespace limitlearn
