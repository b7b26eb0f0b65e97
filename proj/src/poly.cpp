#include "traclin/poly.hpp"

#include <algorithm>
#include <cmath>

namespace traclin {

namespace {

double ipow(double x, int e) {
  double r = 1.0;
  for (int k = 0; k < e; ++k) r *= x;
  return r;
}

}  // namespace

Poly::Poly(std::vector<Monomial> terms) : terms_(std::move(terms)) { canonicalize(); }

Poly Poly::linear(int axis, double c) {
  Monomial m{c, {0, 0, 0}};
  m.exps[static_cast<std::size_t>(axis)] = 1;
  return Poly({m});
}

void Poly::canonicalize() {
  std::sort(terms_.begin(), terms_.end(),
            [](const Monomial& x, const Monomial& y) { return x.exps < y.exps; });
  std::vector<Monomial> merged;
  for (const auto& t : terms_) {
    for (int e : t.exps)
      if (e < 0) throw std::invalid_argument("Poly: negative exponent");
    if (!merged.empty() && merged.back().exps == t.exps)
      merged.back().coeff += t.coeff;
    else
      merged.push_back(t);
  }
  std::erase_if(merged, [](const Monomial& m) { return m.coeff == 0.0; });
  terms_ = std::move(merged);
}

double Poly::operator()(const Vec3& x) const {
  double s = 0.0;
  for (const auto& t : terms_) s += t.coeff * ipow(x[0], t.exps[0]) * ipow(x[1], t.exps[1]) * ipow(x[2], t.exps[2]);
  return s;
}

Poly Poly::derivative(int axis) const {
  std::vector<Monomial> out;
  const auto a = static_cast<std::size_t>(axis);
  for (const auto& t : terms_) {
    if (t.exps[a] == 0) continue;
    Monomial m = t;
    m.coeff *= t.exps[a];
    m.exps[a] -= 1;
    out.push_back(m);
  }
  return Poly(std::move(out));
}

Vec3 Poly::gradient(const Vec3& x) const {
  return {derivative(0)(x), derivative(1)(x), derivative(2)(x)};
}

int Poly::degree() const {
  int d = 0;
  for (const auto& t : terms_) d = std::max(d, t.degree());
  return d;
}

Poly& Poly::operator+=(const Poly& o) {
  terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
  canonicalize();
  return *this;
}

Poly Poly::operator*(const Poly& o) const {
  std::vector<Monomial> out;
  for (const auto& x : terms_)
    for (const auto& y : o.terms_)
      out.push_back({x.coeff * y.coeff, {x.exps[0] + y.exps[0], x.exps[1] + y.exps[1], x.exps[2] + y.exps[2]}});
  return Poly(std::move(out));
}

Poly Poly::scaled(double s) const {
  Poly p = *this;
  for (auto& t : p.terms_) t.coeff *= s;
  p.canonicalize();
  return p;
}

Mat3 PolyVec::jacobian(const Vec3& x) const {
  Mat3 j;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) j(i, k) = c[static_cast<std::size_t>(i)].derivative(k)(x);
  return j;
}

PolyVec PolyVec::curl() const {
  PolyVec r;
  r.c[0] = c[2].derivative(1);
  r.c[0] += c[1].derivative(2).scaled(-1.0);
  r.c[1] = c[0].derivative(2);
  r.c[1] += c[2].derivative(0).scaled(-1.0);
  r.c[2] = c[1].derivative(0);
  r.c[2] += c[0].derivative(1).scaled(-1.0);
  return r;
}

Poly PolyVec::divergence() const {
  Poly d = c[0].derivative(0);
  d += c[1].derivative(1);
  d += c[2].derivative(2);
  return d;
}

PolyVec PolyVec::derivative(int axis) const {
  PolyVec r;
  for (std::size_t i = 0; i < 3; ++i) r.c[i] = c[i].derivative(axis);
  return r;
}

int PolyVec::degree() const { return std::max({c[0].degree(), c[1].degree(), c[2].degree()}); }

CompiledPolyVec::CompiledPolyVec(const PolyVec& p) : degree_(p.degree()) {
  for (int i = 0; i <= degree_; ++i)
    for (int j = 0; i + j <= degree_; ++j)
      for (int k = 0; i + j + k <= degree_; ++k) exps_.push_back({i, j, k});
  const std::size_t n = exps_.size();
  auto index = [&](const std::array<int, 3>& e) {
    for (std::size_t m = 0; m < n; ++m)
      if (exps_[m] == e) return m;
    throw std::logic_error("CompiledPolyVec: monomial outside table");
  };
  auto fill = [&](const Poly& q, std::vector<double>& table, std::size_t row) {
    for (const auto& t : q.terms()) table[row * n + index(t.exps)] += t.coeff;
  };
  val_.assign(3 * n, 0.0);
  jac_.assign(9 * n, 0.0);
  hess_.assign(27 * n, 0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    fill(p.c[i], val_, i);
    for (int j = 0; j < 3; ++j) {
      const Poly dj = p.c[i].derivative(j);
      fill(dj, jac_, 3 * i + static_cast<std::size_t>(j));
      for (int k = 0; k < 3; ++k)
        fill(dj.derivative(k), hess_, 9 * static_cast<std::size_t>(k) + 3 * i + static_cast<std::size_t>(j));
    }
  }
}

void CompiledPolyVec::monomials(const Vec3& x, std::vector<double>& m) const {
  std::array<std::array<double, 16>, 3> pw{};
  if (degree_ >= 16) throw std::invalid_argument("CompiledPolyVec: degree too high");
  for (std::size_t a = 0; a < 3; ++a) {
    pw[a][0] = 1.0;
    for (int e = 1; e <= degree_; ++e) pw[a][static_cast<std::size_t>(e)] = pw[a][static_cast<std::size_t>(e - 1)] * x[a];
  }
  m.resize(exps_.size());
  for (std::size_t i = 0; i < exps_.size(); ++i)
    m[i] = pw[0][static_cast<std::size_t>(exps_[i][0])] * pw[1][static_cast<std::size_t>(exps_[i][1])] *
           pw[2][static_cast<std::size_t>(exps_[i][2])];
}

Vec3 CompiledPolyVec::value(const Vec3& x) const {
  thread_local std::vector<double> m;
  monomials(x, m);
  const std::size_t n = m.size();
  Vec3 u;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < n; ++k) u[i] += val_[i * n + k] * m[k];
  return u;
}

void CompiledPolyVec::value_and_jacobian(const Vec3& x, Vec3& u, Mat3& j) const {
  thread_local std::vector<double> m;
  monomials(x, m);
  const std::size_t n = m.size();
  u = Vec3{};
  for (std::size_t i = 0; i < 3; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += val_[i * n + k] * m[k];
    u[i] = s;
  }
  for (std::size_t r = 0; r < 9; ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += jac_[r * n + k] * m[k];
    j.a[r] = s;
  }
}

std::array<Mat3, 3> CompiledPolyVec::hessian(const Vec3& x) const {
  thread_local std::vector<double> m;
  monomials(x, m);
  const std::size_t n = m.size();
  std::array<Mat3, 3> h{};
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t r = 0; r < 9; ++r) {
      double s = 0.0;
      for (std::size_t q = 0; q < n; ++q) s += hess_[(9 * k + r) * n + q] * m[q];
      h[k].a[r] = s;
    }
  return h;
}

}  // namespace traclin
