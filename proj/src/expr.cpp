#include "fbllab/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "fbllab/error.hpp"

namespace fbllab {

struct LatticeExpr::Node {
  Kind kind;
  std::size_t dim = 0;
  double scalar = 0.0;
  Vector x;
  std::string name;
  std::vector<LatticeExpr> children;
};

namespace {

std::size_t common_dim(const std::vector<LatticeExpr>& children) {
  if (children.empty()) throw InvalidArgument("expression node needs at least one child");
  const std::size_t d = children.front().dim();
  for (const auto& c : children)
    if (c.dim() != d) throw DimensionMismatch(d, c.dim());
  return d;
}

}  // namespace

LatticeExpr LatticeExpr::gen(Vector x, std::string name) {
  if (x.empty()) throw InvalidArgument("generator vector must be nonempty");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Gen;
  n->dim = x.size();
  n->x = std::move(x);
  n->name = std::move(name);
  return LatticeExpr(std::move(n));
}

LatticeExpr LatticeExpr::scale(double alpha, const LatticeExpr& e) {
  if (!std::isfinite(alpha)) throw InvalidArgument("scale factor must be finite");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Scale;
  n->scalar = alpha;
  n->children = {e};
  n->dim = e.dim();
  return LatticeExpr(std::move(n));
}

#define FBLLAB_BINARY(fn, k)                                           \
  LatticeExpr LatticeExpr::fn(const LatticeExpr& a, const LatticeExpr& b) { \
    auto n = std::make_shared<Node>();                                 \
    n->kind = Kind::k;                                                 \
    n->children = {a, b};                                              \
    n->dim = common_dim(n->children);                                  \
    return LatticeExpr(std::move(n));                                  \
  }
FBLLAB_BINARY(add, Add)
FBLLAB_BINARY(sup, Sup)
FBLLAB_BINARY(inf, Inf)
#undef FBLLAB_BINARY

LatticeExpr LatticeExpr::abs(const LatticeExpr& e) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Abs;
  n->children = {e};
  n->dim = e.dim();
  return LatticeExpr(std::move(n));
}

LatticeExpr LatticeExpr::powsum(double r, std::vector<LatticeExpr> children) {
  if (!(r >= 1.0)) throw InvalidArgument("powsum exponent must satisfy r >= 1 or r = inf");
  auto n = std::make_shared<Node>();
  n->kind = Kind::PowSum;
  n->scalar = r;
  n->dim = common_dim(children);
  n->children = std::move(children);
  return LatticeExpr(std::move(n));
}

LatticeExpr::Kind LatticeExpr::kind() const { return node_->kind; }
std::size_t LatticeExpr::dim() const { return node_->dim; }
double LatticeExpr::scalar() const { return node_->scalar; }
const Vector& LatticeExpr::vector() const { return node_->x; }
const std::string& LatticeExpr::name() const { return node_->name; }
const std::vector<LatticeExpr>& LatticeExpr::children() const { return node_->children; }

bool LatticeExpr::contains_powsum() const {
  if (kind() == Kind::PowSum) return true;
  return std::any_of(children().begin(), children().end(), [](const LatticeExpr& c) { return c.contains_powsum(); });
}

std::size_t LatticeExpr::node_count() const {
  std::size_t n = 1;
  for (const auto& c : children()) n += c.node_count();
  return n;
}

namespace {

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string LatticeExpr::to_string() const {
  const auto& ch = children();
  switch (kind()) {
    case Kind::Gen: {
      if (!name().empty()) return name();
      std::string s = "[";
      for (std::size_t i = 0; i < vector().size(); ++i) s += (i ? "," : "") + format_number(vector()[i]);
      return s + "]";
    }
    case Kind::Scale:
      return "(" + format_number(scalar()) + "*" + ch[0].to_string() + ")";
    case Kind::Add:
      return "(" + ch[0].to_string() + " + " + ch[1].to_string() + ")";
    case Kind::Sup:
      return "(" + ch[0].to_string() + " \\/ " + ch[1].to_string() + ")";
    case Kind::Inf:
      return "(" + ch[0].to_string() + " /\\ " + ch[1].to_string() + ")";
    case Kind::Abs:
      return "abs(" + ch[0].to_string() + ")";
    case Kind::PowSum: {
      std::string s = "powsum(" + (std::isinf(scalar()) ? std::string("inf") : format_number(scalar())) + ";";
      for (std::size_t i = 0; i < ch.size(); ++i) s += (i ? ", " : " ") + ch[i].to_string();
      return s + ")";
    }
  }
  return {};
}

LatticeExpr operator+(const LatticeExpr& a, const LatticeExpr& b) { return LatticeExpr::add(a, b); }
LatticeExpr operator-(const LatticeExpr& a, const LatticeExpr& b) {
  return LatticeExpr::add(a, LatticeExpr::scale(-1.0, b));
}
LatticeExpr operator*(double alpha, const LatticeExpr& e) { return LatticeExpr::scale(alpha, e); }

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  Parser(std::string_view text, const GeneratorTable& table) : text_(text), table_(table) {}

  LatticeExpr parse() {
    auto e = parse_sup();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek(std::string_view tok) {
    skip_ws();
    return text_.substr(pos_, tok.size()) == tok;
  }

  bool accept(std::string_view tok) {
    if (!peek(tok)) return false;
    pos_ += tok.size();
    return true;
  }

  void expect(std::string_view tok) {
    if (!accept(tok)) fail("expected '" + std::string(tok) + "'");
  }

  bool at_number() {
    skip_ws();
    if (pos_ >= text_.size()) return false;
    const char c = text_[pos_];
    return std::isdigit(static_cast<unsigned char>(c)) ||
           (c == '.' && pos_ + 1 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])));
  }

  double number() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    if (pos_ == start) fail("expected a decimal number");
    double v = 0.0;
    const auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (res.ec != std::errc()) {
      pos_ = start;
      fail("malformed number");
    }
    return v;
  }

  bool at_identifier() {
    skip_ws();
    return pos_ < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_');
  }

  std::string identifier() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  LatticeExpr parse_sup() {
    auto e = parse_inf();
    while (accept("\\/")) e = LatticeExpr::sup(e, parse_inf());
    return e;
  }

  LatticeExpr parse_inf() {
    auto e = parse_sum();
    while (accept("/\\")) e = LatticeExpr::inf(e, parse_sum());
    return e;
  }

  static LatticeExpr negate(const LatticeExpr& e) {
    if (e.kind() == LatticeExpr::Kind::Scale) return LatticeExpr::scale(-e.scalar(), e.children()[0]);
    return LatticeExpr::scale(-1.0, e);
  }

  LatticeExpr parse_sum() {
    auto e = parse_term();
    for (;;) {
      // "/\" starts with '/', "-" never starts another operator; "+" is unambiguous.
      if (accept("+")) {
        e = LatticeExpr::add(e, parse_term());
      } else if (accept("-")) {
        e = LatticeExpr::add(e, negate(parse_term()));
      } else {
        return e;
      }
    }
  }

  LatticeExpr parse_term() {
    if (at_number()) {
      const double alpha = number();
      expect("*");
      return LatticeExpr::scale(alpha, parse_term());
    }
    auto e = parse_unary();
    while (accept("*")) {
      if (!at_number()) fail("non-numeric scalar");
      e = LatticeExpr::scale(number(), e);
    }
    return e;
  }

  LatticeExpr parse_unary() {
    if (accept("-")) {
      if (at_number()) {
        const double alpha = number();
        expect("*");
        return LatticeExpr::scale(-alpha, parse_term());
      }
      return negate(parse_unary());
    }
    return parse_primary();
  }

  LatticeExpr parse_primary() {
    skip_ws();
    if (accept("(")) {
      auto e = parse_sup();
      expect(")");
      return e;
    }
    if (accept("|")) {
      auto e = parse_sup();
      expect("|");
      return LatticeExpr::abs(e);
    }
    if (at_number()) fail("non-numeric scalar: a number must be followed by '*'");
    if (!at_identifier()) fail(pos_ < text_.size() ? "unexpected character" : "unexpected end of input");
    const std::size_t start = pos_;
    const std::string id = identifier();
    if ((id == "abs" || id == "powsum") && peek("(")) {
      expect("(");
      if (id == "abs") {
        auto e = parse_sup();
        expect(")");
        return LatticeExpr::abs(e);
      }
      double r = 0.0;
      if (at_number()) {
        r = number();
      } else if (at_identifier()) {
        const std::size_t rpos = pos_;
        if (identifier() != "inf") {
          pos_ = rpos;
          fail("powsum exponent must be a number or inf");
        }
        r = kInf;
      } else {
        fail("powsum exponent must be a number or inf");
      }
      if (!(r >= 1.0)) fail("powsum exponent must be >= 1");
      expect(";");
      std::vector<LatticeExpr> children{parse_sup()};
      while (accept(",")) children.push_back(parse_sup());
      expect(")");
      return LatticeExpr::powsum(r, std::move(children));
    }
    const auto it = table_.find(id);
    if (it == table_.end()) {
      pos_ = start;
      throw UnboundIdentifier(id);
    }
    return LatticeExpr::gen(it->second, id);
  }

  std::string_view text_;
  const GeneratorTable& table_;
  std::size_t pos_ = 0;
};

}  // namespace

LatticeExpr parse_expr(std::string_view text, const GeneratorTable& generators) {
  return Parser(text, generators).parse();
}

// ---------------------------------------------------------------------------
// Evaluation

double powsum_value(double r, std::span<const double> values) {
  if (std::isinf(r)) {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
  double s = 0.0;
  if (r == 1.0) {
    for (double v : values) s += std::abs(v);
    return s;
  }
  if (r == 2.0) {
    for (double v : values) s += v * v;
    return std::sqrt(s);
  }
  for (double v : values) s += std::pow(std::abs(v), r);
  return std::pow(s, 1.0 / r);
}

namespace {

double eval_node(const LatticeExpr& e, std::span<const double> xstar) {
  using Kind = LatticeExpr::Kind;
  const auto& ch = e.children();
  switch (e.kind()) {
    case Kind::Gen: {
      const auto& x = e.vector();
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * xstar[i];
      return s;
    }
    case Kind::Scale:
      return e.scalar() * eval_node(ch[0], xstar);
    case Kind::Add:
      return eval_node(ch[0], xstar) + eval_node(ch[1], xstar);
    case Kind::Sup:
      return std::max(eval_node(ch[0], xstar), eval_node(ch[1], xstar));
    case Kind::Inf:
      return std::min(eval_node(ch[0], xstar), eval_node(ch[1], xstar));
    case Kind::Abs:
      return std::abs(eval_node(ch[0], xstar));
    case Kind::PowSum: {
      double buf[16];
      std::vector<double> big;
      std::span<double> vals;
      if (ch.size() <= 16) {
        vals = std::span<double>(buf, ch.size());
      } else {
        big.resize(ch.size());
        vals = big;
      }
      for (std::size_t i = 0; i < ch.size(); ++i) vals[i] = eval_node(ch[i], xstar);
      return powsum_value(e.scalar(), vals);
    }
  }
  return 0.0;
}

}  // namespace

double evaluate(const LatticeExpr& e, std::span<const double> xstar) {
  if (xstar.size() != e.dim()) throw DimensionMismatch(e.dim(), xstar.size());
  return eval_node(e, xstar);
}

// ---------------------------------------------------------------------------
// Canonical form: f = max(P) - max(M) with P, M finite sets of linear rows.

namespace {

using Row = std::vector<double>;
using RowSet = std::vector<Row>;

struct Dc {
  RowSet plus;
  RowSet minus;
};

void dedup(RowSet& rows) {
  RowSet out;
  for (auto& r : rows)
    if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(std::move(r));
  rows = std::move(out);
}

Row add_rows(const Row& a, const Row& b) {
  Row r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

// max(A) + max(B) = max over pairs.
RowSet minkowski(const RowSet& a, const RowSet& b) {
  RowSet out;
  out.reserve(a.size() * b.size());
  for (const auto& x : a)
    for (const auto& y : b) out.push_back(add_rows(x, y));
  dedup(out);
  return out;
}

RowSet concat(RowSet a, const RowSet& b) {
  a.insert(a.end(), b.begin(), b.end());
  dedup(a);
  return a;
}

RowSet scaled(RowSet a, double alpha) {
  for (auto& r : a)
    for (double& c : r) c *= alpha;
  return a;
}

// A single-row difference is linear; fold it to plus = {p - m}, minus = {0}.
Dc normalize(Dc d) {
  if (d.plus.size() == 1 && d.minus.size() == 1) {
    Row p = d.plus[0];
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= d.minus[0][i];
    return {{p}, {Row(p.size(), 0.0)}};
  }
  dedup(d.plus);
  dedup(d.minus);
  return d;
}

class Canonicalizer {
 public:
  explicit Canonicalizer(const LatticeExpr& e) { collect(e); }

  Dc run(const LatticeExpr& e) const {
    using Kind = LatticeExpr::Kind;
    const auto& ch = e.children();
    switch (e.kind()) {
      case Kind::Gen: {
        Row r(gens_.size(), 0.0);
        r[index_of(e.vector())] = 1.0;
        return normalize({{r}, {Row(gens_.size(), 0.0)}});
      }
      case Kind::Scale: {
        Dc d = run(ch[0]);
        const double a = e.scalar();
        if (a >= 0.0) return normalize({scaled(d.plus, a), scaled(d.minus, a)});
        return normalize({scaled(d.minus, -a), scaled(d.plus, -a)});
      }
      case Kind::Add: {
        Dc a = run(ch[0]), b = run(ch[1]);
        return normalize({minkowski(a.plus, b.plus), minkowski(a.minus, b.minus)});
      }
      case Kind::Sup: {
        Dc a = run(ch[0]), b = run(ch[1]);
        return normalize(sup_of(a, b));
      }
      case Kind::Inf: {
        // a /\ b = (a + b) - (a \/ b).
        Dc a = run(ch[0]), b = run(ch[1]);
        return normalize({minkowski(a.plus, b.plus), concat(minkowski(a.plus, b.minus), minkowski(b.plus, a.minus))});
      }
      case Kind::Abs: {
        Dc a = run(ch[0]);
        if (a.plus.size() == 1 && a.minus.size() == 1) {
          // Linear: |l| = l \/ (-l).
          Row p = a.plus[0];
          for (std::size_t i = 0; i < p.size(); ++i) p[i] -= a.minus[0][i];
          Row n = p;
          for (double& c : n) c = -c;
          return normalize({{p, n}, {Row(p.size(), 0.0)}});
        }
        Dc neg{a.minus, a.plus};
        return normalize(sup_of(a, neg));
      }
      case Kind::PowSum:
        throw PowSumNotLatticeLinear();
    }
    return {};
  }

  const std::vector<Vector>& generators() const { return gens_; }

 private:
  // (P1 - M1) \/ (P2 - M2) = ((P1 + M2) u (P2 + M1)) - (M1 + M2).
  static Dc sup_of(const Dc& a, const Dc& b) {
    return {concat(minkowski(a.plus, b.minus), minkowski(b.plus, a.minus)), minkowski(a.minus, b.minus)};
  }

  void collect(const LatticeExpr& e) {
    if (e.kind() == LatticeExpr::Kind::PowSum) throw PowSumNotLatticeLinear();
    if (e.kind() == LatticeExpr::Kind::Gen) {
      if (std::find(gens_.begin(), gens_.end(), e.vector()) == gens_.end()) gens_.push_back(e.vector());
      return;
    }
    for (const auto& c : e.children()) collect(c);
  }

  std::size_t index_of(const Vector& v) const {
    return static_cast<std::size_t>(std::find(gens_.begin(), gens_.end(), v) - gens_.begin());
  }

  std::vector<Vector> gens_;
};

}  // namespace

CanonicalForm canonical_form(const LatticeExpr& e) {
  Canonicalizer c(e);
  Dc d = c.run(e);
  CanonicalForm out;
  out.generators = c.generators();
  out.plus = std::move(d.plus);
  out.minus = std::move(d.minus);
  return out;
}

double CanonicalForm::evaluate(std::span<const double> xstar) const {
  std::vector<double> pair(generators.size());
  for (std::size_t i = 0; i < generators.size(); ++i) pair[i] = dot(generators[i], xstar);
  auto max_rows = [&](const std::vector<std::vector<double>>& rows) {
    double m = -kInf;
    for (const auto& r : rows) {
      double s = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) s += r[i] * pair[i];
      m = std::max(m, s);
    }
    return m;
  };
  return max_rows(plus) - max_rows(minus);
}

LatticeExpr CanonicalForm::to_expr() const {
  const std::size_t dim = generators.front().size();
  auto row_expr = [&](const std::vector<double>& r) {
    Vector x(dim, 0.0);
    for (std::size_t i = 0; i < r.size(); ++i)
      for (std::size_t k = 0; k < dim; ++k) x[k] += r[i] * generators[i][k];
    return LatticeExpr::gen(std::move(x));
  };
  auto max_expr = [&](const std::vector<std::vector<double>>& rows) {
    LatticeExpr e = row_expr(rows.front());
    for (std::size_t j = 1; j < rows.size(); ++j) e = LatticeExpr::sup(e, row_expr(rows[j]));
    return e;
  };
  return max_expr(plus) - max_expr(minus);
}

LatticeExpr apply_calculus(double r, std::vector<LatticeExpr> exprs) {
  if (exprs.empty()) throw InvalidArgument("calculus needs at least one argument");
  return LatticeExpr::powsum(r, std::move(exprs));
}

std::vector<Vector> generators_of(const LatticeExpr& e) {
  std::vector<Vector> out;
  auto walk = [&](auto&& self, const LatticeExpr& n) -> void {
    if (n.kind() == LatticeExpr::Kind::Gen) {
      if (std::find(out.begin(), out.end(), n.vector()) == out.end()) out.push_back(n.vector());
      return;
    }
    for (const auto& c : n.children()) self(self, c);
  };
  walk(walk, e);
  return out;
}

LatticeExpr random_lattice_expr(std::size_t dim, std::size_t generators, std::size_t depth, Rng& rng) {
  std::normal_distribution<double> normal;
  std::vector<LatticeExpr> gens;
  for (std::size_t g = 0; g < std::max<std::size_t>(1, generators); ++g) {
    Vector x(dim);
    for (double& c : x) c = normal(rng);
    gens.push_back(LatticeExpr::gen(std::move(x), "g" + std::to_string(g)));
  }
  auto build = [&](auto&& self, std::size_t d) -> LatticeExpr {
    if (d == 0 || uniform01(rng) < 0.2) return gens[rng() % gens.size()];
    const auto op = rng() % 5;
    if (op == 0) {
      const double alpha = uniform(rng, -2.0, 2.0);
      return LatticeExpr::scale(alpha, self(self, d - 1));
    }
    if (op == 4) return LatticeExpr::abs(self(self, d - 1));
    // Children are built in a fixed order so the stream consumption is reproducible.
    LatticeExpr a = self(self, d - 1);
    LatticeExpr b = self(self, d - 1);
    if (op == 1) return LatticeExpr::add(a, b);
    if (op == 2) return LatticeExpr::sup(a, b);
    return LatticeExpr::inf(a, b);
  };
  return build(build, depth);
}

}  // namespace fbllab
