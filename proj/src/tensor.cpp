#include "traclin/tensor.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <sstream>

namespace traclin {

double orthogonality_defect(const Mat3& r) { return norm(transpose(r) * r - Mat3::identity()); }

Rotation::Rotation(const Mat3& r) : r_(r) {
  const double defect = orthogonality_defect(r);
  const double d = det(r);
  if (!(defect <= kTolerance) || !(std::abs(d - 1.0) <= kTolerance)) {
    std::ostringstream os;
    os << "not a rotation: |RᵀR − I| = " << defect << ", det R = " << d;
    throw std::domain_error(os.str());
  }
}

Rotation exp_skew(const AxialVector& w, double theta) {
  const double n = norm(w.w);
  if (!(std::abs(n - 1.0) <= 1e-12)) {
    std::ostringstream os;
    os << "exp_skew: axial vector must have unit norm, got |w| = " << n;
    throw std::invalid_argument(os.str());
  }
  const Mat3 W = skew_of(w);
  return Rotation(Mat3::identity() + std::sin(theta) * W + (1.0 - std::cos(theta)) * (W * W));
}

Rotation exp_axial(const Vec3& w) {
  const double angle = norm(w);
  if (angle == 0.0) return Rotation::identity();
  return exp_skew(AxialVector{(1.0 / angle) * w}, angle);
}

SymEig sym_eig(const Mat3& c) {
  Mat3 a = sym(c);
  Mat3 q = Mat3::identity();
  for (int sweep = 0; sweep < 64; ++sweep) {
    const double off = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    const double scale = a(0, 0) * a(0, 0) + a(1, 1) * a(1, 1) + a(2, 2) * a(2, 2) + off;
    if (off <= 1e-36 * scale || off == 0.0) break;
    for (int p = 0; p < 2; ++p) {
      for (int r = p + 1; r < 3; ++r) {
        const double apr = a(p, r);
        if (apr == 0.0) continue;
        const double tau = (a(r, r) - a(p, p)) / (2.0 * apr);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * cs;
        // A ← Jᵀ A J with the Givens rotation J in the (p, r) plane.
        for (int k = 0; k < 3; ++k) {
          const double akp = a(k, p);
          const double akr = a(k, r);
          a(k, p) = cs * akp - sn * akr;
          a(k, r) = sn * akp + cs * akr;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a(p, k);
          const double ark = a(r, k);
          a(p, k) = cs * apk - sn * ark;
          a(r, k) = sn * apk + cs * ark;
        }
        for (int k = 0; k < 3; ++k) {
          const double qkp = q(k, p);
          const double qkr = q(k, r);
          q(k, p) = cs * qkp - sn * qkr;
          q(k, r) = sn * qkp + cs * qkr;
        }
      }
    }
  }
  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x) < a(y, y); });
  SymEig e;
  for (int k = 0; k < 3; ++k) {
    e.values[k] = a(order[k], order[k]);
    for (int i = 0; i < 3; ++i) e.vectors(i, k) = q(i, order[k]);
  }
  return e;
}

Mat3 sqrt_spd(const Mat3& c) {
  if (!is_finite(c)) throw std::invalid_argument("sqrt_spd: non-finite input");
  const double asym = norm(skw(c));
  if (asym > 1e-10 * (1.0 + norm(c))) {
    std::ostringstream os;
    os << "sqrt_spd: input not symmetric (|skw C| = " << asym << ")";
    throw std::invalid_argument(os.str());
  }
  const SymEig e = sym_eig(c);
  if (!(e.values[0] > 0.0)) {
    std::ostringstream os;
    os << "sqrt_spd: input not positive definite, smallest eigenvalue " << e.values[0];
    throw std::domain_error(os.str());
  }
  return spectral_apply(e, [](double x) { return std::sqrt(x); });
}

namespace {

// Maximizes tr(RᵀF) over SO(3) from a sampled start, then refines by ascent along R exp(t skw(RᵀF)).
double sampled_distance(const Mat3& f) {
  constexpr int kAxes = 200;
  constexpr int kAngles = 12;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  Mat3 best = Mat3::identity();
  double best_val = norm(f - best);
  for (int i = 0; i < kAxes; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / kAxes;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Vec3 axis{r * std::cos(golden * i), r * std::sin(golden * i), z};
    for (int k = 1; k <= kAngles; ++k) {
      const Mat3 R = exp_skew(AxialVector{axis}, std::numbers::pi * k / kAngles).matrix();
      const double val = norm(f - R);
      if (val < best_val) {
        best_val = val;
        best = R;
      }
    }
  }
  double step = 0.5;
  for (int it = 0; it < 500 && step > 1e-14; ++it) {
    const Mat3 m = transpose(best) * f;
    const Vec3 g = axial_of(skw(m));
    if (norm(g) < 1e-15) break;
    const Mat3 trial = best * exp_axial(step * g).matrix();
    const double val = norm(f - trial);
    if (val < best_val) {
      best_val = val;
      best = trial;
      step *= 1.5;
    } else {
      step *= 0.5;
    }
  }
  return best_val;
}

}  // namespace

DistanceToSO3 dist_SO3(const Mat3& f) {
  if (det(f) > 0.0) {
    const SymEig e = sym_eig(transpose(f) * f);
    double s = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double d = std::sqrt(std::max(e.values[k], 0.0)) - 1.0;
      s += d * d;
    }
    return {std::sqrt(s), false};
  }
  return {sampled_distance(f), true};
}

Mat3 isochoric(const Mat3& f) {
  const double d = det(f);
  if (!(d > 0.0)) {
    std::ostringstream os;
    os << "isochoric: det F must be positive, got " << d;
    throw std::domain_error(os.str());
  }
  return std::pow(d, -1.0 / 3.0) * f;
}

GrowthFunction::GrowthFunction(double p) : p_(p) {
  if (!(p > 1.0 && p <= 2.0)) {
    std::ostringstream os;
    os << "growth exponent must lie in (1, 2], got " << p;
    throw std::invalid_argument(os.str());
  }
}

double GrowthFunction::operator()(double t) const {
  if (!(t >= 0.0)) throw std::invalid_argument("g_p: argument must be nonnegative");
  if (t <= 1.0) return t * t;
  return 2.0 * std::pow(t, p_) / p_ - 2.0 / p_ + 1.0;
}

Vec3 sorted(Vec3 x) {
  std::sort(x.v.begin(), x.v.end());
  return x;
}

std::string to_string(const Mat3& m) {
  std::ostringstream os;
  os.precision(17);
  os << "[";
  for (int i = 0; i < 3; ++i) {
    os << (i ? "; " : "") << m(i, 0) << ", " << m(i, 1) << ", " << m(i, 2);
  }
  os << "]";
  return os.str();
}

}  // namespace traclin
