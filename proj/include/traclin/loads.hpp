#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "traclin/domain.hpp"
#include "traclin/poly.hpp"

namespace traclin {

/// Named load from the built-in library.
///   zero                 0
///   radial               s (x − c);        params [s, c₁, c₂, c₃] (defaults s = 1, c = 0)
///   pressure             λ n;              params [λ]
///   compress_lateral     s (−x₁, −x₂, 0);  params [s] (default 1)
///   gradient_potential   ∇φ, φ = a Π_i ((r_i² − (x_i − c_i)²)₊)²; params [a, c₁, c₂, c₃, r₁, r₂, r₃]
struct NamedLoad {
  std::string id;
  std::vector<double> params;
};

/// Vector field on the domain or its boundary (boundary evaluation may use the outward normal).
class VectorExpr {
 public:
  using Variant = std::variant<PolyVec, NamedLoad>;

  VectorExpr() : v_(NamedLoad{"zero", {}}) {}
  VectorExpr(Variant v);  // NOLINT(google-explicit-constructor)

  static VectorExpr zero() { return VectorExpr(); }
  static VectorExpr named(std::string id, std::vector<double> params = {}) {
    return VectorExpr(NamedLoad{std::move(id), std::move(params)});
  }

  Vec3 operator()(const Vec3& x, const Vec3& n = Vec3{}) const;
  bool is_zero() const;
  /// True for the gradient_potential load.
  bool is_gradient_potential() const;
  /// φ for gradient_potential loads (throws otherwise).
  double potential(const Vec3& x) const;

  const Variant& variant() const { return v_; }

 private:
  Variant v_;
};

/// Body force density f and surface traction g.
struct LoadSpec {
  VectorExpr f;
  VectorExpr g;
};

/// L(v) = ∫_Ω f·v + ∫_∂Ω g·v with the given quadrature.
double eval_L(const LoadSpec& spec, const QuadratureSet& q, const std::function<Vec3(const Vec3&)>& v);
/// As above with analytic quadrature on the descriptor.
double eval_L(const LoadSpec& spec, const DomainDesc& d, const std::function<Vec3(const Vec3&)>& v);

/// Discrete load vector on a mesh (3 entries per node), L(v) = ⟨ℓ, v⟩.
/// Polynomial and named loads use 3×3×3 Gauss per element and 3×3 per face. The gradient_potential body force
/// is assembled in integrated-by-parts form −Σ_e (∫_e φ) div_e v, so that it vanishes on every field with zero
/// element divergence.
std::vector<double> load_vector(const LoadSpec& spec, const HexMesh& mesh);
double eval_L(const std::vector<double>& load, const NodalField& v);
double eval_L(const LoadSpec& spec, const HexMesh& mesh, const NodalField& v);

/// Pointwise L evaluator for fields known only at quadrature points.
class LoadSampler {
 public:
  LoadSampler(const LoadSpec& spec, const QuadratureSet& q);
  double operator()(const std::vector<Vec3>& v_volume, const std::vector<Vec3>& v_surface) const;
  double operator()(const std::function<Vec3(const Vec3&)>& v) const;

  const QuadratureSet& quadrature() const { return q_; }

 private:
  QuadratureSet q_;
  std::vector<Vec3> fw_;
  std::vector<Vec3> gw_;
};

/// G_{ab} = L(x_b e_a).
struct MomentMatrix {
  Mat3 g;
};

MomentMatrix moment_matrix(const LoadSpec& spec, const DomainDesc& d);
MomentMatrix moment_matrix(const LoadSpec& spec, const HexMesh& mesh);

struct EquilibriumReport {
  Vec3 resultant;
  Vec3 torque;
  bool pass = false;
};

/// Load scale ∫|f| + ∫|g| used for the relative tolerance.
double load_scale(const LoadSpec& spec, const DomainDesc& d);

constexpr double kTolEquilibrium = 1e-9;
constexpr double kTolMargin = 1e-9;

/// L on the six rigid fields; pass iff all |values| ≤ 1e−9 (1 + load scale).
EquilibriumReport check_equilibrium(const LoadSpec& spec, const DomainDesc& d);
EquilibriumReport check_equilibrium(const LoadSpec& spec, const HexMesh& mesh);

/// A load condition required by an operation does not hold.
class LoadConditionViolated : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Compatibility { StrictlyCompatible, Marginal, Violating };
std::string to_string(Compatibility c);

struct CompatReport {
  Vec3 resultant;
  Vec3 torque;
  Mat3 moment;
  /// Largest eigenvalue of sym G − (Tr G) I.
  double margin = 0.0;
  /// Eigenvector of the largest eigenvalue (the most dangerous axial vector).
  Vec3 worst_axis;
  Compatibility classification = Compatibility::Marginal;
};

CompatReport compatibility_report(const Vec3& resultant, const Vec3& torque, const Mat3& g);
CompatReport compatibility_margin(const LoadSpec& spec, const DomainDesc& d);
CompatReport compatibility_margin(const LoadSpec& spec, const HexMesh& mesh);

/// max over n_dirs Fibonacci-sphere axial vectors w of L(x ↦ w(w·x) − x), by direct quadrature.
/// The seed rotates the direction set.
double compatibility_margin_oracle(const LoadSpec& spec, const DomainDesc& d, int n_dirs = 10000,
                                   std::uint64_t seed = 0);

/// |L(v − ℙv)| / ‖E(v)‖_{L²}; rejects rigid inputs.
double load_bound_quotient(const LoadSpec& spec, const HexMesh& mesh, const NodalField& v);

}  // namespace traclin
