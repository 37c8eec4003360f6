#pragma once

// Elements of the vector lattice generated by the evaluations delta_x inside the
// positively homogeneous functions on E*, as immutable expression trees.

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fbllab/rng.hpp"
#include "fbllab/space.hpp"

namespace fbllab {

using GeneratorTable = std::map<std::string, Vector>;

class LatticeExpr {
 public:
  enum class Kind { Gen, Scale, Add, Sup, Inf, Abs, PowSum };

  static LatticeExpr gen(Vector x, std::string name = {});
  static LatticeExpr zero(std::size_t dim) { return gen(Vector(dim, 0.0), "0"); }
  static LatticeExpr scale(double alpha, const LatticeExpr& e);
  static LatticeExpr add(const LatticeExpr& a, const LatticeExpr& b);
  static LatticeExpr sup(const LatticeExpr& a, const LatticeExpr& b);
  static LatticeExpr inf(const LatticeExpr& a, const LatticeExpr& b);
  static LatticeExpr abs(const LatticeExpr& e);
  // (sum_i |e_i|^r)^(1/r), max_i |e_i| when r = inf. Requires r >= 1.
  static LatticeExpr powsum(double r, std::vector<LatticeExpr> children);

  Kind kind() const;
  std::size_t dim() const;
  // Scale factor for Scale, exponent for PowSum.
  double scalar() const;
  // Gen only.
  const Vector& vector() const;
  const std::string& name() const;
  const std::vector<LatticeExpr>& children() const;

  bool contains_powsum() const;
  std::size_t node_count() const;
  std::string to_string() const;

 private:
  struct Node;
  explicit LatticeExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

LatticeExpr operator+(const LatticeExpr& a, const LatticeExpr& b);
LatticeExpr operator-(const LatticeExpr& a, const LatticeExpr& b);
LatticeExpr operator*(double alpha, const LatticeExpr& e);

// Grammar (loosest to tightest):
//   sup    := inf ( "\/" inf )*
//   inf    := sum ( "/\" sum )*
//   sum    := term ( ("+" | "-") term )*
//   term   := NUMBER "*" term | unary ( "*" NUMBER )*
//   unary  := "-" unary | primary
//   primary:= IDENT | "(" sup ")" | "|" sup "|" | "abs(" sup ")"
//           | "powsum(" (NUMBER | "inf") ";" sup ("," sup)* ")"
LatticeExpr parse_expr(std::string_view text, const GeneratorTable& generators);

double evaluate(const LatticeExpr& e, std::span<const double> xstar);

// The function h(t) = ||t||_r used by PowSum nodes; shared so that pointwise and
// componentwise evaluations perform identical floating-point operations.
double powsum_value(double r, std::span<const double> values);

struct CanonicalForm {
  // Distinct generator vectors, in first-occurrence order.
  std::vector<Vector> generators;
  // Denotes max_j <plus_j, (delta_{x_i})_i> - max_j <minus_j, (delta_{x_i})_i>.
  std::vector<std::vector<double>> plus;
  std::vector<std::vector<double>> minus;

  double evaluate(std::span<const double> xstar) const;
  LatticeExpr to_expr() const;
};

// Throws PowSumNotLatticeLinear when e contains a powsum node.
CanonicalForm canonical_form(const LatticeExpr& e);

// The positively homogeneous calculus for the l_r-sum family.
LatticeExpr apply_calculus(double r, std::vector<LatticeExpr> exprs);

// Random lattice-linear expression (no powsum) over `generators` fresh Gaussian
// generator vectors of dimension dim.
LatticeExpr random_lattice_expr(std::size_t dim, std::size_t generators, std::size_t depth, Rng& rng);

// Distinct generator vectors appearing in e, first-occurrence order.
std::vector<Vector> generators_of(const LatticeExpr& e);

}  // namespace fbllab
