#pragma once

#include <array>
#include <vector>

#include "traclin/tensor.hpp"

namespace traclin {

/// Monomial coeff · x^i y^j z^k.
struct Monomial {
  double coeff = 0.0;
  std::array<int, 3> exps{0, 0, 0};

  int degree() const { return exps[0] + exps[1] + exps[2]; }
};

/// Scalar polynomial in three variables.
class Poly {
 public:
  Poly() = default;
  explicit Poly(std::vector<Monomial> terms);

  static Poly constant(double c) { return Poly(std::vector<Monomial>{Monomial{c, {0, 0, 0}}}); }
  /// c · x_axis
  static Poly linear(int axis, double c = 1.0);

  double operator()(const Vec3& x) const;
  Poly derivative(int axis) const;
  Vec3 gradient(const Vec3& x) const;
  int degree() const;
  bool is_zero() const { return terms_.empty(); }

  const std::vector<Monomial>& terms() const { return terms_; }

  Poly& operator+=(const Poly& o);
  Poly operator*(const Poly& o) const;
  Poly scaled(double s) const;

 private:
  void canonicalize();
  std::vector<Monomial> terms_;
};

/// Vector of three polynomials.
struct PolyVec {
  std::array<Poly, 3> c;

  Vec3 operator()(const Vec3& x) const { return {c[0](x), c[1](x), c[2](x)}; }
  /// (∇u)_{ij} = ∂u_i/∂x_j
  Mat3 jacobian(const Vec3& x) const;
  PolyVec curl() const;
  Poly divergence() const;
  PolyVec derivative(int axis) const;
  int degree() const;
};

/// Fast evaluator of a polynomial vector field with its first and second derivatives: every monomial is
/// computed once per point from power tables.
class CompiledPolyVec {
 public:
  CompiledPolyVec() = default;
  explicit CompiledPolyVec(const PolyVec& p);

  int degree() const { return degree_; }
  Vec3 value(const Vec3& x) const;
  /// Value and Jacobian (∇u)_{ij} = ∂u_i/∂x_j.
  void value_and_jacobian(const Vec3& x, Vec3& u, Mat3& j) const;
  /// Second derivatives: out[k] = ∂_k ∇u.
  std::array<Mat3, 3> hessian(const Vec3& x) const;

 private:
  void monomials(const Vec3& x, std::vector<double>& m) const;

  int degree_ = 0;
  std::vector<std::array<int, 3>> exps_;
  // Row-major coefficient tables over the monomial list: 3 value rows, 9 Jacobian rows, 27 Hessian rows.
  std::vector<double> val_, jac_, hess_;
};

}  // namespace traclin
