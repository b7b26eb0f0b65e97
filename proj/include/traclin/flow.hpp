#pragma once

#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "traclin/domain.hpp"
#include "traclin/poly.hpp"

namespace traclin {

/// v = curl A for a polynomial potential A.
struct CurlOf {
  PolyVec potential;
};

/// v = scale · w ∧ x.
struct LinearSkew {
  AxialVector w;
  double scale = 1.0;
};

/// Nodal samples on a grid that covers the evaluation region; trilinear in between.
struct Sampled {
  HexMesh mesh;
  NodalField values;
  /// Element layers next to the grid boundary left out of the divergence report.
  int margin_layers = 0;
  /// max |element divergence| over the elements at least margin_layers away from the boundary.
  double div_residual = 0.0;
};

Sampled make_sampled(HexMesh mesh, NodalField values, int margin_layers = 0);

/// Divergence-free velocity field.
class DivFreeField {
 public:
  using Variant = std::variant<CurlOf, LinearSkew, Sampled>;

  DivFreeField() : DivFreeField(LinearSkew{AxialVector{}, 0.0}) {}
  DivFreeField(Variant v);  // NOLINT(google-explicit-constructor)

  static DivFreeField zero() { return DivFreeField(); }

  Vec3 value(const Vec3& x) const;
  void value_and_gradient(const Vec3& x, Vec3& v, Mat3& g) const;
  /// out[k] = ∂_k ∇v (zero for LinearSkew; undefined for Sampled, which reports zeros).
  std::array<Mat3, 3> hessian(const Vec3& x) const;
  /// Analytic fields are evaluable everywhere; sampled fields only on their grid.
  bool evaluable(const Vec3& x) const;
  /// 0 for the analytic variants.
  double div_residual() const;

  const Variant& variant() const { return v_; }

 private:
  Variant v_;
  CompiledPolyVec curl_;
};

/// Built-in smooth fields by name: zero, stretch (curl of (0, 0, x₁x₂)), rotation (unit rotation about
/// (1, 2, 2)/3), shear (x₂², 0, 0), vortex (curl of (0, 0, x₁²x₂²/2)).
DivFreeField builtin_field(const std::string& name);
const std::vector<std::string>& builtin_field_names();

/// Box with each half extent scaled by (1 + fraction).
Box inflate(const Box& b, double fraction);

struct FlowResult {
  std::vector<Vec3> y;
  std::vector<Mat3> F;
  double det_residual = 0.0;
  int steps = 0;
};

/// A trajectory left the evaluation region.
class FlowExit : public std::runtime_error {
 public:
  FlowExit(const Vec3& start, const Vec3& exit_point, double time);
  Vec3 start;
  Vec3 exit_point;
  double time;
};

/// Classical RK4 for ∂y/∂t = v(y), ∂F/∂t = ∇v(y) F from y = x, F = I up to time h. Every stage point must lie in
/// omega_prime (and in the grid of a sampled field), otherwise FlowExit.
FlowResult integrate_flow(const DivFreeField& v, double h, int substeps, const std::vector<Vec3>& points,
                          const Box& omega_prime, int workers = 1);

/// z e^z.
double q_bound(double z);

/// Sup norms by sampling a grid with `samples` points per axis (Frobenius norms on matrices and on ∇²v).
struct FieldNorms {
  double sup_v = 0.0;
  double sup_grad = 0.0;
  double sup_hess = 0.0;
  double w1() const { return std::max(sup_v, sup_grad); }
  double w2() const { return std::max(w1(), sup_hess); }
};
FieldNorms field_norms(const DivFreeField& v, const Box& region, int samples = 21);

struct RecoveryReport {
  double h = 0.0;
  int substeps = 0;
  double det_residual = 0.0;
  /// Over mesh nodes and element quadrature points.
  double sup_err_v = 0.0;
  double sup_err_grad = 0.0;
  /// sup |h ∇v_h| = sup |F − I|.
  double sup_h_grad = 0.0;
  double bound_flux2 = 0.0;
  double bound_flux3 = 0.0;
  double bound_flux4 = 0.0;
  FieldNorms norms;

  bool flux2_ok() const { return sup_err_v <= bound_flux2; }
  bool flux3_ok() const { return sup_h_grad <= bound_flux3; }
  bool flux4_ok() const { return sup_err_grad <= bound_flux4; }
};

struct Recovery {
  NodalField field;
  /// Exact ∇v_h = (F − I)/h at element quadrature points (index e·8 + qp); det(I + h∇v_h) = 1 up to the
  /// integrator residual, unlike the gradient of the Q1 interpolant of `field`.
  std::vector<Mat3> qp_gradients;
  RecoveryReport report;
};

/// v_h(x) = (y(h, x) − x)/h at the mesh nodes. Analytic fields flow in the mesh box inflated by 25%; sampled
/// fields in their own grid. Norms in the bounds are taken over that region; with bounds = false only the
/// fields and the det residual are filled in.
Recovery recovery_field(const DivFreeField& v, double h, int substeps, const HexMesh& mesh, int workers = 1,
                        bool bounds = true);

/// ρ_ε(t) = c (1 − (t/ε)²)³ on [−ε, ε], c = 35/(32ε); applied per axis.
class Mollifier {
 public:
  explicit Mollifier(double epsilon);
  double epsilon() const { return eps_; }
  double operator()(double t) const;
  /// Kernel samples at multiples of the spacing, normalized to unit sum; index 0 is the center.
  std::vector<double> discrete(double spacing) const;

 private:
  double eps_;
};

/// Separable discrete convolution of a sampled field. Requires ε ≥ 2 grid spacings. Near the grid boundary
/// the truncated kernel is renormalized; those layers are excluded from the reported residual.
Sampled mollify(const Sampled& field, const Mollifier& m);

/// max(sup |v|, sup |center gradient|) over nodes and elements at least `layers` away from the boundary.
double sampled_w1_norm(const Sampled& field, int layers);

}  // namespace traclin
