#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace traclin {

/// Dense 3-vector.
struct Vec3 {
  std::array<double, 3> v{0.0, 0.0, 0.0};

  constexpr Vec3() = default;
  constexpr Vec3(double x, double y, double z) : v{x, y, z} {}

  constexpr double& operator[](std::size_t i) { return v[i]; }
  constexpr double operator[](std::size_t i) const { return v[i]; }

  Vec3& operator+=(const Vec3& o) {
    for (int i = 0; i < 3; ++i) v[i] += o.v[i];
    return *this;
  }
  Vec3& operator-=(const Vec3& o) {
    for (int i = 0; i < 3; ++i) v[i] -= o.v[i];
    return *this;
  }
  Vec3& operator*=(double s) {
    for (auto& x : v) x *= s;
    return *this;
  }
  static constexpr Vec3 unit(int i) {
    Vec3 e;
    e.v[static_cast<std::size_t>(i)] = 1.0;
    return e;
  }
};

inline Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
inline Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
inline Vec3 operator-(Vec3 a) { return a *= -1.0; }
inline Vec3 operator*(double s, Vec3 a) { return a *= s; }
inline Vec3 operator*(Vec3 a, double s) { return a *= s; }

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

/// Dense 3×3 matrix, row-major.
struct Mat3 {
  std::array<double, 9> a{};

  constexpr double& operator()(int i, int j) { return a[static_cast<std::size_t>(3 * i + j)]; }
  constexpr double operator()(int i, int j) const { return a[static_cast<std::size_t>(3 * i + j)]; }

  static constexpr Mat3 identity() {
    Mat3 m;
    m(0, 0) = m(1, 1) = m(2, 2) = 1.0;
    return m;
  }
  static constexpr Mat3 zero() { return Mat3{}; }
  static constexpr Mat3 diag(double x, double y, double z) {
    Mat3 m;
    m(0, 0) = x;
    m(1, 1) = y;
    m(2, 2) = z;
    return m;
  }
  static Mat3 outer(const Vec3& u, const Vec3& w) {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = u[i] * w[j];
    return m;
  }
  static Mat3 from_rows(const Vec3& r0, const Vec3& r1, const Vec3& r2) {
    Mat3 m;
    for (int j = 0; j < 3; ++j) {
      m(0, j) = r0[j];
      m(1, j) = r1[j];
      m(2, j) = r2[j];
    }
    return m;
  }

  Mat3& operator+=(const Mat3& o) {
    for (std::size_t k = 0; k < 9; ++k) a[k] += o.a[k];
    return *this;
  }
  Mat3& operator-=(const Mat3& o) {
    for (std::size_t k = 0; k < 9; ++k) a[k] -= o.a[k];
    return *this;
  }
  Mat3& operator*=(double s) {
    for (auto& x : a) x *= s;
    return *this;
  }
};

inline Mat3 operator+(Mat3 a, const Mat3& b) { return a += b; }
inline Mat3 operator-(Mat3 a, const Mat3& b) { return a -= b; }
inline Mat3 operator-(Mat3 a) { return a *= -1.0; }
inline Mat3 operator*(double s, Mat3 a) { return a *= s; }
inline Mat3 operator*(Mat3 a, double s) { return a *= s; }

inline Mat3 operator*(const Mat3& x, const Mat3& y) {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += x(i, k) * y(k, j);
      r(i, j) = s;
    }
  return r;
}

inline Vec3 operator*(const Mat3& m, const Vec3& x) {
  Vec3 r;
  for (int i = 0; i < 3; ++i) r[i] = m(i, 0) * x[0] + m(i, 1) * x[1] + m(i, 2) * x[2];
  return r;
}

inline Mat3 transpose(const Mat3& m) {
  Mat3 t;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t(i, j) = m(j, i);
  return t;
}

inline double trace(const Mat3& m) { return m(0, 0) + m(1, 1) + m(2, 2); }

inline double det(const Mat3& m) {
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

/// Cofactor matrix, d(det F)/dF = cof F.
inline Mat3 cofactor(const Mat3& m) {
  Mat3 c;
  c(0, 0) = m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
  c(0, 1) = m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2);
  c(0, 2) = m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0);
  c(1, 0) = m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2);
  c(1, 1) = m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0);
  c(1, 2) = m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1);
  c(2, 0) = m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1);
  c(2, 1) = m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2);
  c(2, 2) = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  return c;
}

inline Mat3 inverse(const Mat3& m) {
  const double d = det(m);
  if (d == 0.0) throw std::domain_error("inverse: singular matrix");
  return (1.0 / d) * transpose(cofactor(m));
}

/// Frobenius inner product A:B.
inline double ddot(const Mat3& x, const Mat3& y) {
  double s = 0.0;
  for (std::size_t k = 0; k < 9; ++k) s += x.a[k] * y.a[k];
  return s;
}
inline double norm(const Mat3& m) { return std::sqrt(ddot(m, m)); }

inline Mat3 sym(const Mat3& m) { return 0.5 * (m + transpose(m)); }
inline Mat3 skw(const Mat3& m) { return 0.5 * (m - transpose(m)); }
inline Mat3 dev(const Mat3& m) { return m - (trace(m) / 3.0) * Mat3::identity(); }

inline bool is_finite(const Mat3& m) {
  for (double x : m.a)
    if (!std::isfinite(x)) return false;
  return true;
}

/// Axial vector of a skew matrix: skew_of(w)·x = w ∧ x.
struct AxialVector {
  Vec3 w;
};

inline Mat3 skew_of(const Vec3& w) {
  Mat3 m;
  m(0, 1) = -w[2];
  m(0, 2) = w[1];
  m(1, 0) = w[2];
  m(1, 2) = -w[0];
  m(2, 0) = -w[1];
  m(2, 1) = w[0];
  return m;
}
inline Mat3 skew_of(const AxialVector& w) { return skew_of(w.w); }

/// Inverse of skew_of applied to the skew part of m.
inline Vec3 axial_of(const Mat3& m) {
  return {0.5 * (m(2, 1) - m(1, 2)), 0.5 * (m(0, 2) - m(2, 0)), 0.5 * (m(1, 0) - m(0, 1))};
}

/// A proper rotation; construction validates orthogonality and det = +1.
class Rotation {
 public:
  static constexpr double kTolerance = 1e-12;

  explicit Rotation(const Mat3& r);
  static Rotation identity() { return Rotation(Mat3::identity()); }

  const Mat3& matrix() const { return r_; }

 private:
  Mat3 r_;
};

/// Orthogonality defect |RᵀR − I|.
double orthogonality_defect(const Mat3& r);

/// Euler–Rodrigues: exp(θW) = I + sinθ W + (1 − cosθ) W², W = skew_of(w), |w| = 1.
Rotation exp_skew(const AxialVector& w, double theta);

/// exp(W) for an arbitrary axial vector (angle |w|).
Rotation exp_axial(const Vec3& w);

/// Symmetric eigendecomposition by cyclic Jacobi: C = Q diag(λ) Qᵀ, columns of Q are eigenvectors,
/// eigenvalues ascending.
struct SymEig {
  Vec3 values;
  Mat3 vectors;
};
SymEig sym_eig(const Mat3& c);

/// Applies a scalar function to the spectrum of a symmetric matrix.
template <class Fn>
Mat3 spectral_apply(const SymEig& e, Fn&& fn) {
  Mat3 r;
  for (int k = 0; k < 3; ++k) {
    const double fk = fn(e.values[k]);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) += fk * e.vectors(i, k) * e.vectors(j, k);
  }
  return r;
}

/// Symmetric positive-definite square root.
Mat3 sqrt_spd(const Mat3& c);

struct DistanceToSO3 {
  double value = 0.0;
  /// Set when det F ≤ 0 and the value comes from sampled minimization over rotations.
  bool sampled_fallback = false;
};

/// d(F, SO(3)) = |√(FᵀF) − I| for det F > 0.
DistanceToSO3 dist_SO3(const Mat3& f);

/// (det F)^{−1/3} F.
Mat3 isochoric(const Mat3& f);

/// g_p(t) = t² on [0,1], 2tᵖ/p − 2/p + 1 on [1,∞).
class GrowthFunction {
 public:
  explicit GrowthFunction(double p);

  double p() const { return p_; }
  double operator()(double t) const;

 private:
  double p_;
};

/// Ascending order of the 3 entries of an unordered triple.
Vec3 sorted(Vec3 x);

std::string to_string(const Mat3& m);

}  // namespace traclin
