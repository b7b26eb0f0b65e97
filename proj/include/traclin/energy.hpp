#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "traclin/tensor.hpp"

namespace traclin {

/// Value in ℝ ∪ {+∞}.
class ExtendedScalar {
 public:
  static ExtendedScalar finite(double v) { return ExtendedScalar(v, false); }
  static ExtendedScalar infinity() { return ExtendedScalar(0.0, true); }

  bool is_finite() const { return !infinite_; }
  bool is_infinite() const { return infinite_; }
  /// Throws std::domain_error on +∞.
  double value() const;
  double value_or(double fallback) const { return infinite_ ? fallback : value_; }

  friend ExtendedScalar operator+(const ExtendedScalar& a, const ExtendedScalar& b) {
    if (a.infinite_ || b.infinite_) return infinity();
    return finite(a.value_ + b.value_);
  }
  friend ExtendedScalar operator-(const ExtendedScalar& a, double b) {
    return a.infinite_ ? a : finite(a.value_ - b);
  }
  /// Scaling by s ≥ 0; 0·(+∞) is taken as +∞ (the constraint stays violated).
  friend ExtendedScalar operator*(double s, const ExtendedScalar& a);
  friend bool operator==(const ExtendedScalar& a, const ExtendedScalar& b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
  }

 private:
  ExtendedScalar(double v, bool inf) : value_(v), infinite_(inf) {}
  double value_;
  bool infinite_;
};

std::string to_string(const ExtendedScalar& x);

/// Axis-aligned box [lo, hi] used for material regions.
struct AxisBox {
  Vec3 lo;
  Vec3 hi;
  bool contains(const Vec3& x) const {
    for (int i = 0; i < 3; ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
  }
};

struct OgdenTerm {
  double mu;
  double alpha;
};

/// Σ_k (μ_k/α_k)(tr(C^{α_k/2}) − 3).
struct Ogden {
  std::vector<OgdenTerm> terms;
};

/// |C − I|², C = FᵀF.
struct QuadGreen {};

class MaterialModel;

struct MaterialRegion {
  AxisBox box;
  std::shared_ptr<const MaterialModel> model;
};

/// First region containing x wins.
struct PiecewiseConstant {
  std::vector<MaterialRegion> regions;
};

/// Incompressible strain energy density W^I and its isochoric extension W.
class MaterialModel {
 public:
  using Variant = std::variant<Ogden, QuadGreen, PiecewiseConstant>;

  MaterialModel(Variant v);  // NOLINT(google-explicit-constructor)

  static MaterialModel ogden(std::vector<OgdenTerm> terms) { return MaterialModel(Ogden{std::move(terms)}); }
  static MaterialModel quad_green() { return MaterialModel(QuadGreen{}); }

  const Variant& variant() const { return v_; }

  /// The homogeneous model in effect at x (this model itself unless piecewise).
  const MaterialModel& at(const Vec3& x) const;
  bool is_homogeneous() const { return !std::holds_alternative<PiecewiseConstant>(v_); }

  /// Ψ(C) with C = FᵀF of a volume-preserving F. Homogeneous models only.
  double psi(const Mat3& c) const;
  /// dΨ/dC (symmetric). Homogeneous models only.
  Mat3 dpsi(const Mat3& c) const;

  std::string describe() const;

 private:
  Variant v_;
};

struct IncompressibilityTolerance {
  double tol_det = 1e-8;

  explicit IncompressibilityTolerance(double t = 1e-8);
};

/// W^I(x, F): +∞ off the band |det F − 1| ≤ tol_det; on the band the density is evaluated at the
/// volume-normalized gradient, so that W^I = W there.
ExtendedScalar eval_WI(const MaterialModel& m, const Vec3& x, const Mat3& f,
                       IncompressibilityTolerance tol = IncompressibilityTolerance{});

/// W(x, F) = W^I(x, (det F)^{−1/3} F), det F > 0.
double eval_W(const MaterialModel& m, const Vec3& x, const Mat3& f);

/// dW/dF, det F > 0.
Mat3 eval_dW(const MaterialModel& m, const Vec3& x, const Mat3& f);

/// V(x, G) = W(x, √(I + 2G)), I + 2G SPD.
double eval_green(const MaterialModel& m, const Vec3& x, const Mat3& g);

/// Fourth-order tensor on 3×3 matrices with minor and major symmetries.
class ElasticityTensor {
 public:
  ElasticityTensor() = default;
  explicit ElasticityTensor(const std::array<double, 81>& c);

  /// Isotropic shear-only tensor 2μ·(deviatoric symmetric projection).
  static ElasticityTensor deviatoric(double two_mu);

  double operator()(int i, int j, int k, int l) const { return c_[index(i, j, k, l)]; }
  Mat3 apply(const Mat3& b) const;
  double quad(const Mat3& b) const { return ddot(b, apply(b)); }
  double frobenius() const;
  ElasticityTensor symmetrized() const;

  const std::array<double, 81>& data() const { return c_; }

 private:
  static constexpr std::size_t index(int i, int j, int k, int l) {
    return static_cast<std::size_t>(27 * i + 9 * j + 3 * k + l);
  }
  std::array<double, 81> c_{};
};

struct HessianReport {
  ElasticityTensor tensor;
  /// |D²W(x, I)|, the constant K of the Hessian bound.
  double bound = 0.0;
  /// max |D(δ/2) − D(δ)| / 3 over entries.
  double richardson_residual = 0.0;
};

class HessianNonconvergence : public std::runtime_error {
 public:
  HessianNonconvergence(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// D²W(x, I) by central differences (step 1e−4) with one Richardson level.
HessianReport hessian_identity(const MaterialModel& m, const Vec3& x, double step = 1e-4);

/// Q^I(B) = ½ B : C : B if Tr B = 0, +∞ otherwise.
ExtendedScalar q_form(const ElasticityTensor& c, const Mat3& b);

struct CoercivityReport {
  double constant = 0.0;
  std::size_t samples_used = 0;
  std::size_t samples_skipped = 0;
  /// Gradients with ratio ≤ 0 (empty for valid models).
  std::vector<Mat3> violations;
};

/// min over random det-1 gradients of W^I(F) / g_p(d(F, SO(3))).
CoercivityReport coercivity_probe(const MaterialModel& m, const GrowthFunction& gf, std::size_t n_samples,
                                  std::uint64_t seed);

}  // namespace traclin
