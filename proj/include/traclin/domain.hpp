#pragma once

#include <array>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "traclin/energy.hpp"
#include "traclin/tensor.hpp"

namespace traclin {

struct Box {
  Vec3 center{0.0, 0.0, 0.0};
  Vec3 half_extents{0.5, 0.5, 0.5};
};

/// Ball of the given radius centered at the origin.
struct Ball {
  double radius = 1.0;
};

/// {x₁² + x₂² < r², 0 < x₃ < height}.
struct Cylinder {
  double radius = 1.0;
  double height = 1.0;
};

using DomainDesc = std::variant<Box, Ball, Cylinder>;

double volume(const DomainDesc& d);
double boundary_area(const DomainDesc& d);
Vec3 centroid(const DomainDesc& d);
void validate(const DomainDesc& d);

struct VolumePoint {
  Vec3 x;
  double w;
};
struct SurfacePoint {
  Vec3 x;
  Vec3 n;
  double w;
};

/// Interior and boundary quadrature rules.
struct QuadratureSet {
  std::vector<VolumePoint> volume;
  std::vector<SurfacePoint> surface;
};

/// Gauss–Legendre nodes and weights on [−1, 1].
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};
GaussRule gauss_legendre(int n);

/// Product Gauss rules; `points` per coordinate (≥ 32 for curved boundaries).
QuadratureSet analytic_quadrature(const DomainDesc& d, int points = 32);
/// Composite product Gauss rule on a box, split at the given per-axis breakpoints (those outside the box are
/// ignored); exact for piecewise polynomials with kinks only at the breakpoints.
QuadratureSet box_quadrature(const Box& b, int points, const std::array<std::vector<double>, 3>& breaks = {});

/// Q1 hexahedral mesh of a box on a uniform n×n×n grid.
class HexMesh {
 public:
  struct Face {
    std::array<std::size_t, 4> nodes;
    Vec3 normal;
    std::size_t element;
  };

  static constexpr int kQp = 8;
  static constexpr int kFaceQp = 4;

  const Box& box() const { return box_; }
  int n() const { return n_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t element_count() const { return elements_.size(); }
  std::size_t dof_count() const { return 3 * nodes_.size(); }
  /// Largest element edge length.
  double h_mesh() const;
  Vec3 spacing() const { return spacing_; }

  const std::vector<Vec3>& nodes() const { return nodes_; }
  const std::vector<std::array<std::size_t, 8>>& elements() const { return elements_; }
  const std::vector<Face>& boundary_faces() const { return faces_; }

  std::size_t node_index(int i, int j, int k) const;

  /// Shape function values and physical gradients at element quadrature points (identical for every
  /// element of a uniform axis-aligned grid).
  double shape(int qp, int a) const { return shape_[static_cast<std::size_t>(qp)][static_cast<std::size_t>(a)]; }
  const Vec3& shape_grad(int qp, int a) const {
    return grad_[static_cast<std::size_t>(qp)][static_cast<std::size_t>(a)];
  }
  /// Quadrature weight including the Jacobian.
  double qp_weight() const { return qp_weight_; }
  double element_volume() const { return qp_weight_ * kQp; }
  Vec3 qp_position(std::size_t e, int qp) const;
  Vec3 element_center(std::size_t e) const;

  /// Gradients of the 8 shape functions at the element center (element-mean gradients).
  const Vec3& center_grad(int a) const { return center_grad_[static_cast<std::size_t>(a)]; }

  /// Face quadrature: positions and weight (including surface Jacobian) for face f, point q.
  Vec3 face_qp_position(std::size_t f, int q) const;
  double face_shape(int q, int a) const {
    return face_shape_[static_cast<std::size_t>(q)][static_cast<std::size_t>(a)];
  }
  double face_qp_weight(std::size_t f) const { return face_weight_[f]; }

  QuadratureSet quadrature() const;

  friend HexMesh build_box_mesh(const Box& desc, int n_per_axis);

 private:
  Box box_;
  int n_ = 0;
  Vec3 spacing_;
  std::vector<Vec3> nodes_;
  std::vector<std::array<std::size_t, 8>> elements_;
  std::vector<Face> faces_;
  std::vector<double> face_weight_;
  std::array<std::array<double, 8>, 8> shape_{};
  std::array<std::array<Vec3, 8>, 8> grad_{};
  std::array<Vec3, 8> center_grad_{};
  std::array<std::array<double, 4>, 4> face_shape_{};
  std::array<Vec3, 8> qp_ref_{};  // offsets of quadrature points from the element's min corner
  double qp_weight_ = 0.0;
};

/// Uniform grid with (n+1)³ nodes; 2 ≤ n ≤ 64.
HexMesh build_box_mesh(const Box& desc, int n_per_axis);

/// One 3-vector per mesh node; trilinear interpolation per element.
class NodalField {
 public:
  NodalField() = default;
  explicit NodalField(std::size_t nodes) : values_(nodes) {}
  explicit NodalField(std::vector<Vec3> values) : values_(std::move(values)) {}

  /// Samples fn at the mesh nodes.
  static NodalField sample(const HexMesh& mesh, const std::function<Vec3(const Vec3&)>& fn);
  static NodalField from_flat(const std::vector<double>& flat);

  std::size_t size() const { return values_.size(); }
  Vec3& operator[](std::size_t i) { return values_[i]; }
  const Vec3& operator[](std::size_t i) const { return values_[i]; }
  const std::vector<Vec3>& values() const { return values_; }
  std::vector<double> flat() const;
  bool is_finite() const;

  NodalField& operator+=(const NodalField& o);
  NodalField& operator*=(double s);

 private:
  std::vector<Vec3> values_;
};

void check_compatible(const HexMesh& mesh, const NodalField& v);

/// ∇v at element quadrature point qp.
Mat3 gradient(const HexMesh& mesh, const NodalField& v, std::size_t e, int qp);
/// E(v) = sym ∇v at element quadrature point qp.
Mat3 strain(const HexMesh& mesh, const NodalField& v, std::size_t e, int qp);
/// Element-mean divergence (value of div v at the element center).
double element_divergence(const HexMesh& mesh, const NodalField& v, std::size_t e);
/// ∇v at the element center.
Mat3 center_gradient(const HexMesh& mesh, const NodalField& v, std::size_t e);

/// ‖E(v)‖_{L²(Ω)} by element quadrature.
double strain_l2(const HexMesh& mesh, const NodalField& v);
/// ‖∇v‖_{L²(Ω)}.
double gradient_l2(const HexMesh& mesh, const NodalField& v);
/// ‖v‖_{L²(Ω)}.
double field_l2(const HexMesh& mesh, const NodalField& v);

/// Per-quadrature-point elasticity tensors (the x-dependence of D²W(x, I)).
class TensorField {
 public:
  /// Resolves the model at each quadrature point; one Hessian per distinct homogeneous model.
  TensorField(const HexMesh& mesh, const MaterialModel& model);
  /// Uniform tensor.
  TensorField(const HexMesh& mesh, const ElasticityTensor& c);

  const ElasticityTensor& at(std::size_t e, int qp) const {
    return tensors_[index_[e * HexMesh::kQp + static_cast<std::size_t>(qp)]];
  }
  double max_bound() const;

 private:
  std::vector<ElasticityTensor> tensors_;
  std::vector<std::size_t> index_;
};

struct QuadraticMode {
  const TensorField* tensors;
  /// Strain shift S: the integrand is Q^I(E(v) − S).
  Mat3 shift = Mat3::zero();
};
struct NonlinearMode {
  const MaterialModel* model;
  double h;
  IncompressibilityTolerance tol{};
};

struct EnergyIntegral {
  ExtendedScalar value = ExtendedScalar::finite(0.0);
  /// Largest constraint violation over quadrature points (|Tr| or |det − 1|).
  double worst_violation = 0.0;
  std::size_t worst_element = 0;
  int worst_qp = 0;
};

/// Quadratic mode: ∫ Q^I(x, E(v)); nonlinear mode: h⁻² ∫ W^I(x, I + h∇v).
EnergyIntegral integrate_energy(const HexMesh& mesh, const QuadraticMode& mode, const NodalField& v);
EnergyIntegral integrate_energy(const HexMesh& mesh, const NonlinearMode& mode, const NodalField& v);
/// Nonlinear mode with ∇v given at every element quadrature point (index e·8 + qp), e.g. the exact gradient of a
/// recovery field rather than that of its Q1 interpolant.
EnergyIntegral integrate_energy(const HexMesh& mesh, const NonlinearMode& mode, const std::vector<Mat3>& qp_gradients);

double surface_quadrature(const QuadratureSet& q, const std::function<double(const Vec3&, const Vec3&)>& integrand);
Vec3 surface_quadrature_vec(const QuadratureSet& q, const std::function<Vec3(const Vec3&, const Vec3&)>& integrand);
double volume_quadrature(const QuadratureSet& q, const std::function<double(const Vec3&)>& integrand);

}  // namespace traclin
