#include "limitlearn/formula.hpp"

#include <algorithm>
#include <cctype>

namespace limitlearn {

Matrix Matrix::atom(std::string relation, std::vector<std::size_t> args) {
  Matrix m;
  m.op = Op::kAtom;
  m.relation = std::move(relation);
  m.args = std::move(args);
  return m;
}

Matrix Matrix::eq(std::size_t a, std::size_t b) {
  Matrix m;
  m.op = Op::kEq;
  m.args = {a, b};
  return m;
}

Matrix Matrix::negate(Matrix inner) {
  Matrix m;
  m.op = Op::kNot;
  m.children.push_back(std::move(inner));
  return m;
}

namespace {

Matrix binary(Matrix::Op op, Matrix a, Matrix b) {
  Matrix m;
  m.op = op;
  m.children.push_back(std::move(a));
  m.children.push_back(std::move(b));
  return m;
}

}  // namespace

Matrix Matrix::both(Matrix a, Matrix b) { return binary(Op::kAnd, std::move(a), std::move(b)); }
Matrix Matrix::either(Matrix a, Matrix b) { return binary(Op::kOr, std::move(a), std::move(b)); }
Matrix Matrix::implies(Matrix a, Matrix b) { return binary(Op::kImplies, std::move(a), std::move(b)); }

std::string Matrix::str(const std::vector<std::string>& names) const {
  auto var = [&names](std::size_t s) { return s < names.size() ? names[s] : "v" + std::to_string(s); };
  auto list = [&](const char* head) {
    std::string out = std::string("(") + head;
    for (const auto& c : children) out += " " + c.str(names);
    return out + ")";
  };
  switch (op) {
    case Op::kTrue: return "true";
    case Op::kFalse: return "false";
    case Op::kAtom: {
      std::string out = relation + "(";
      for (std::size_t i = 0; i < args.size(); ++i) out += (i ? "," : "") + var(args[i]);
      return out + ")";
    }
    case Op::kEq: return "eq(" + var(args[0]) + "," + var(args[1]) + ")";
    case Op::kNot: return list("not");
    case Op::kAnd: return list("and");
    case Op::kOr: return list("or");
    case Op::kImplies: return list("implies");
  }
  return "?";
}

// ---------------------------------------------------------------- Sigma2Formula

Sigma2Formula::Sigma2Formula(std::size_t exists_arity, std::vector<Conjunct> conjuncts, std::string source)
    : exists_arity_(exists_arity), conjuncts_(std::move(conjuncts)), source_(std::move(source)) {}

Sigma2Formula Sigma2Formula::staged() const {
  Sigma2Formula out = *this;
  for (std::size_t j = 0; j < out.conjuncts_.size(); ++j) out.conjuncts_[j].reveal = j;
  return out;
}

std::size_t Sigma2Formula::visible(std::uint64_t stage) const {
  std::size_t n = 0;
  for (const auto& c : conjuncts_) n += c.reveal <= stage ? 1 : 0;
  return n;
}

std::uint64_t Sigma2Formula::max_reveal() const {
  std::uint64_t r = 0;
  for (const auto& c : conjuncts_) r = std::max(r, c.reveal);
  return r;
}

// ---------------------------------------------------------------- parser

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) { tokenize(); }

  Sigma2Formula formula() {
    Sigma2Formula out;
    if (peek() == "(" && peek(1) == "exists") {
      expect("(");
      expect("exists");
      auto vars = varlist();
      names_ = vars;
      std::vector<Conjunct> cs;
      while (peek() != ")") cs.push_back(conjunct());
      expect(")");
      out = Sigma2Formula(vars.size(), std::move(cs), std::string(text_));
    } else {
      std::vector<Conjunct> cs{conjunct()};
      out = Sigma2Formula(0, std::move(cs), std::string(text_));
    }
    if (pos_ != tokens_.size()) fail("trailing input");
    return out;
  }

 private:
  void tokenize() {
    std::size_t i = 0;
    while (i < text_.size()) {
      const char c = text_[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
      } else if (c == '(' || c == ')' || c == ',') {
        tokens_.emplace_back(1, c);
        ++i;
      } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t j = i;
        while (j < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[j])) || text_[j] == '_')) ++j;
        tokens_.emplace_back(text_.substr(i, j - i));
        i = j;
      } else {
        fail(std::string("unexpected character '") + c + "'");
      }
    }
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw Error(Error::Kind::kParse, "formula: " + why + " in '" + std::string(text_) + "'");
  }

  std::string peek(std::size_t ahead = 0) const {
    return pos_ + ahead < tokens_.size() ? tokens_[pos_ + ahead] : std::string();
  }
  std::string next() {
    if (pos_ >= tokens_.size()) fail("unexpected end");
    return tokens_[pos_++];
  }
  void expect(const std::string& t) {
    if (next() != t) fail("expected '" + t + "'");
  }

  std::vector<std::string> varlist() {
    expect("(");
    std::vector<std::string> out;
    while (peek() != ")") {
      auto v = next();
      if (v == "(" || v == ",") fail("bad variable list");
      out.push_back(v);
    }
    expect(")");
    return out;
  }

  Conjunct conjunct() {
    Conjunct c;
    if (peek() == "(" && peek(1) == "forall") {
      expect("(");
      expect("forall");
      auto vars = varlist();
      const std::size_t base = names_.size();
      names_.insert(names_.end(), vars.begin(), vars.end());
      c.forall_arity = vars.size();
      c.matrix = matrix();
      names_.resize(base);
      expect(")");
    } else {
      c.matrix = matrix();
    }
    return c;
  }

  std::size_t slot(const std::string& name) const {
    for (std::size_t i = names_.size(); i-- > 0;) {
      if (names_[i] == name) return i;
    }
    fail("unbound variable '" + name + "'");
  }

  Matrix matrix() {
    const auto t = next();
    if (t == "(") {
      const auto head = next();
      Matrix m;
      if (head == "not") {
        m = Matrix::negate(matrix());
      } else if (head == "and" || head == "or") {
        m.op = head == "and" ? Matrix::Op::kAnd : Matrix::Op::kOr;
        while (peek() != ")") m.children.push_back(matrix());
        if (m.children.empty()) m.op = head == "and" ? Matrix::Op::kTrue : Matrix::Op::kFalse;
      } else if (head == "implies") {
        auto a = matrix();
        m = Matrix::implies(std::move(a), matrix());
      } else {
        fail("unknown connective '" + head + "'");
      }
      expect(")");
      return m;
    }
    if (t == "true" || t == "false") {
      Matrix m;
      m.op = t == "true" ? Matrix::Op::kTrue : Matrix::Op::kFalse;
      return m;
    }
    if (t == ")" || t == ",") fail("unexpected '" + t + "'");
    // Atom: name(arg, ...). A leading numeric argument is folded into the name: box(2,x) -> box2(x).
    expect("(");
    std::string rel = t;
    std::vector<std::size_t> args;
    bool first = true;
    while (peek() != ")") {
      if (!first) expect(",");
      auto a = next();
      if (first && std::isdigit(static_cast<unsigned char>(a[0]))) {
        rel += a;
      } else {
        args.push_back(slot(a));
      }
      first = false;
    }
    expect(")");
    if (args.empty()) fail("atom '" + rel + "' has no variables");
    if (rel == "eq") {
      if (args.size() != 2) fail("eq takes two variables");
      return Matrix::eq(args[0], args[1]);
    }
    return Matrix::atom(rel, std::move(args));
  }

  std::string_view text_;
  std::vector<std::string> tokens_;
  std::size_t pos_ = 0;
  std::vector<std::string> names_;
};

}  // namespace

Sigma2Formula parse_sigma2(std::string_view text) { return Parser(text).formula(); }

Sigma2Formula builtin_formula(std::string_view name) {
  if (name == "has_least") return parse_sigma2("(exists (x) (forall (y) leq(x,y)))");
  if (name == "has_greatest") return parse_sigma2("(exists (x) (forall (y) leq(y,x)))");
  throw Error(Error::Kind::kConfig, "unknown built-in formula '" + std::string(name) + "'");
}

Sigma2Formula resolve_formula(std::string_view text) {
  if (text.find('(') == std::string_view::npos) return builtin_formula(text);
  return parse_sigma2(text);
}

FormulaPair least_greatest_pair() { return {builtin_formula("has_least"), builtin_formula("has_greatest")}; }

// ---------------------------------------------------------------- evaluation

namespace {
constexpr std::size_t kAbsent = static_cast<std::size_t>(-1);
}

BoundSigma2::BoundSigma2(const Sigma2Formula& f, const Signature& sig) : exists_arity_(f.exists_arity()) {
  for (const auto& c : f.conjuncts()) {
    BoundConjunct b{c.forall_arity, c.reveal, {}};
    compile(c.matrix, sig, b.nodes);
    conjuncts_.push_back(std::move(b));
    reveals_.push_back(c.reveal);
  }
}

std::size_t BoundSigma2::compile(const Matrix& m, const Signature& sig, std::vector<Node>& nodes) const {
  Node n{m.op, 0, m.args, {}};
  for (const auto& c : m.children) n.kids.push_back(compile(c, sig, nodes));
  if (m.op == Matrix::Op::kAtom) {
    n.rel = sig.find(m.relation);
    // Symbols outside a truncated signature are read as empty relations.
    if (n.rel == sig.size()) {
      n.rel = kAbsent;
    } else if (sig[n.rel].arity != m.args.size()) {
      throw Error(Error::Kind::kArityMismatch, "atom '" + m.relation + "' has the wrong arity");
    }
  }
  nodes.push_back(std::move(n));
  return nodes.size() - 1;
}

std::size_t BoundSigma2::visible(std::uint64_t stage) const {
  std::size_t n = 0;
  for (auto r : reveals_) n += r <= stage ? 1 : 0;
  return n;
}

bool BoundSigma2::eval(const std::vector<Node>& nodes, std::size_t i, const FinitePrefixStructure& f,
                       const std::vector<std::uint64_t>& slots) const {
  const Node& n = nodes[i];
  switch (n.op) {
    case Matrix::Op::kTrue: return true;
    case Matrix::Op::kFalse: return false;
    case Matrix::Op::kEq: return slots[n.args[0]] == slots[n.args[1]];
    case Matrix::Op::kAtom:
      if (n.rel == kAbsent) return false;
      if (n.args.size() == 1) return f.holds1(n.rel, slots[n.args[0]]);
      if (n.args.size() == 2) return f.holds2(n.rel, slots[n.args[0]], slots[n.args[1]]);
      {
        std::vector<std::uint64_t> t;
        for (auto a : n.args) t.push_back(slots[a]);
        return f.holds(n.rel, t);
      }
    case Matrix::Op::kNot: return !eval(nodes, n.kids[0], f, slots);
    case Matrix::Op::kAnd:
      for (auto k : n.kids)
        if (!eval(nodes, k, f, slots)) return false;
      return true;
    case Matrix::Op::kOr:
      for (auto k : n.kids)
        if (eval(nodes, k, f, slots)) return true;
      return false;
    case Matrix::Op::kImplies: return !eval(nodes, n.kids[0], f, slots) || eval(nodes, n.kids[1], f, slots);
  }
  return false;
}

bool BoundSigma2::matrix(std::size_t c, const FinitePrefixStructure& f, const std::vector<std::uint64_t>& slots) const {
  const auto& nodes = conjuncts_[c].nodes;
  return eval(nodes, nodes.size() - 1, f, slots);
}

bool BoundSigma2::conjunct_holds(std::size_t c, const FinitePrefixStructure& f, const std::vector<std::uint64_t>& tuple,
                                 std::uint64_t from) const {
  const std::size_t u = conjuncts_[c].forall_arity;
  const std::uint64_t n = f.size();
  std::vector<std::uint64_t> slots(tuple);
  slots.resize(tuple.size() + u, 0);
  if (u == 0) return from == 0 ? matrix(c, f, slots) : true;
  if (n == 0) return true;
  if (u == 1) {
    for (std::uint64_t y = from; y < n; ++y) {
      slots[tuple.size()] = y;
      if (!matrix(c, f, slots)) return false;
    }
    return true;
  }
  // Odometer over {0..n-1}^u, skipping tuples already inspected.
  while (true) {
    bool fresh = false;
    for (std::size_t i = 0; i < u; ++i) fresh = fresh || slots[tuple.size() + i] >= from;
    if (fresh && !matrix(c, f, slots)) return false;
    std::size_t p = u;
    while (p > 0 && slots[tuple.size() + p - 1] == n - 1) slots[tuple.size() + --p] = 0;
    if (p == 0) return true;
    ++slots[tuple.size() + p - 1];
  }
}

bool sigma2_compat(const Sigma2Formula& formula, const FinitePrefixStructure& fin,
                   const std::vector<std::uint64_t>& tuple, std::uint64_t stage) {
  if (tuple.size() != formula.exists_arity())
    throw Error(Error::Kind::kTupleOutOfRange, "tuple length does not match the existential block");
  for (auto x : tuple) {
    if (x >= fin.size()) throw Error(Error::Kind::kTupleOutOfRange, "tuple entry " + std::to_string(x) + " not decoded");
  }
  BoundSigma2 b(formula, fin.signature());
  for (std::size_t c = 0; c < b.conjunct_count(); ++c) {
    if (formula.conjuncts()[c].reveal > stage) continue;
    if (!b.conjunct_holds(c, fin, tuple)) return false;
  }
  return true;
}

// ---------------------------------------------------------------- CompatTracker

CompatTracker::CompatTracker(const Sigma2Formula& formula, const Signature& sig) : bound_(formula, sig) {}

void CompatTracker::update(const FinitePrefixStructure& f, std::uint64_t stage) {
  const std::uint64_t n = f.size();
  const std::uint64_t from = seen_;
  const std::size_t e = bound_.exists_arity();
  if (enforced_.empty()) enforced_.assign(bound_.conjunct_count(), false);

  std::vector<std::size_t> old_rules, new_rules;
  for (std::size_t c = 0; c < bound_.conjunct_count(); ++c) {
    if (enforced_[c]) old_rules.push_back(c);
    else if (bound_.reveal(c) <= stage) new_rules.push_back(c);
  }

  // Surviving tuples only need the counterexamples that mention new elements, except for
  // conjuncts revealed just now, which are checked in full.
  if (n > from || !new_rules.empty()) {
    for (auto it = alive_.begin(); it != alive_.end();) {
      bool ok = true;
      for (auto c : old_rules) ok = ok && bound_.conjunct_holds(c, f, it->second, from);
      for (auto c : new_rules) ok = ok && bound_.conjunct_holds(c, f, it->second, 0);
      it = ok ? std::next(it) : alive_.erase(it);
    }
  }
  for (auto c : new_rules) enforced_[c] = true;

  auto full_check = [&](const std::vector<std::uint64_t>& t) {
    for (std::size_t c = 0; c < bound_.conjunct_count(); ++c) {
      if (enforced_[c] && !bound_.conjunct_holds(c, f, t)) return false;
    }
    return true;
  };

  if (e == 0) {
    if (!started_) {
      std::vector<std::uint64_t> empty;
      if (full_check(empty)) alive_.insert({0, empty});
    }
  } else if (n > from) {
    // Every tuple over {0..n-1} with some entry >= from is new.
    std::vector<std::uint64_t> t(e, 0);
    while (true) {
      bool fresh = false;
      for (auto x : t) fresh = fresh || x >= from;
      if (fresh && full_check(t)) alive_.insert({fold_pair(t), t});
      std::size_t p = e;
      while (p > 0 && t[p - 1] == n - 1) t[--p] = 0;
      if (p == 0) break;
      ++t[p - 1];
    }
  }
  started_ = true;
  seen_ = n;
}

std::optional<std::uint64_t> CompatTracker::least_code() const {
  if (alive_.empty()) return std::nullopt;
  return alive_.begin()->first;
}

std::optional<std::vector<std::uint64_t>> CompatTracker::least_tuple() const {
  if (alive_.empty()) return std::nullopt;
  return alive_.begin()->second;
}

}  // namespace limitlearn
