#pragma once

#include <Eigen/Sparse>
#include <stdexcept>
#include <string>
#include <vector>

#include "traclin/domain.hpp"
#include "traclin/flow.hpp"
#include "traclin/lbfgs.hpp"
#include "traclin/loads.hpp"
#include "traclin/rigid.hpp"

namespace traclin {

/// Iterative solver failed to reach its tolerance.
class SolverNonconvergence : public std::runtime_error {
 public:
  SolverNonconvergence(const std::string& what, double residual) : std::runtime_error(what), residual(residual) {}
  double residual;
};

Eigen::VectorXd to_vector(const NodalField& v);
NodalField to_field(const Eigen::VectorXd& u);

/// Sparse operators on a mesh: B-bar stiffness, volume-weighted element divergence, consistent mass and the
/// six rigid fields as columns.
struct MeshOperators {
  MeshOperators(const HexMesh& mesh, const TensorField& c, bool bbar = true);

  /// uᵀKu = ∫ Ē(u) : C : Ē(u), with Ē the strain whose trace is replaced by the element-mean divergence
  /// (plain E(u) when bbar is false).
  Eigen::SparseMatrix<double> K;
  /// (Du)_e = |e| · div_e u.
  Eigen::SparseMatrix<double> D;
  Eigen::SparseMatrix<double> M;
  Eigen::MatrixXd R;
  /// (RᵀMR)⁻¹.
  Eigen::Matrix<double, 6, 6> gram_inv;

  /// u − R (RᵀMR)⁻¹ RᵀM u: removes the L²-rigid part of a displacement.
  Eigen::VectorXd project_primal(const Eigen::VectorXd& u) const;
  /// g − MR (RᵀMR)⁻¹ Rᵀ g: the dual counterpart, for gradients and residuals.
  Eigen::VectorXd project_dual(const Eigen::VectorXd& g) const;
  /// Linear term b with bᵀu = ∫ Ē(u) : C : S for a constant strain S.
  Eigen::VectorXd shift_vector(const Mat3& s) const;
  /// ∫ S : C : S.
  double shift_energy(const Mat3& s) const;

 private:
  const HexMesh* mesh_;
  const TensorField* c_;
  bool bbar_;
};

struct LinearSolveOptions {
  double tol_opt = 1e-8;
  /// Stop when max_e |div_e v − target| ≤ tol_div.
  double tol_div = 1e-11;
  int max_uzawa = 500;
  /// Augmentation r = rho · max diag K / max diag DᵀD.
  double rho = 1e4;
};

struct LinearSolveReport {
  NodalField v_star;
  double value = 0.0;
  /// max over elements of |element-mean div v_star − target|.
  double div_residual = 0.0;
  /// |projected KKT gradient| / (1 + |ℓ|).
  double opt_residual = 0.0;
  AxialVector w_star;
  int uzawa_iterations = 0;
  int outer_iterations = 0;
};

/// min ½∫Ē:C:Ē − ∫Ē:C:S + ½∫S:C:S − L(v) subject to div_e v = target on every element and v ⟂ rigid, by
/// augmented-Lagrangian Uzawa on the element multipliers. Reusable across shifts.
class LinearKKT {
 public:
  LinearKKT(const HexMesh& mesh, const TensorField& c, const LoadSpec& spec, LinearSolveOptions opt = {});

  LinearSolveReport solve(const Mat3& shift = Mat3::zero(), double div_target = 0.0) const;
  const MeshOperators& ops() const { return ops_; }
  const Eigen::VectorXd& load() const { return load_; }

 private:
  const HexMesh* mesh_;
  MeshOperators ops_;
  Eigen::VectorXd load_;
  LinearSolveOptions opt_;
  double r_ = 0.0;
  std::vector<int> pinned_;
  Eigen::SparseMatrix<double> a_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

/// Discrete min E^I. Requires equilibrated loads.
LinearSolveReport minimize_E_I(const HexMesh& mesh, const TensorField& c, const LoadSpec& spec,
                               LinearSolveOptions opt = {});

/// Discrete min F^I = min over (v, w) of ∫Q^I(Ē(v) − ½W²) − L(v), div v = −|w|², W = skew_of(w). Outer Newton on w
/// with finite-difference derivatives, started from 0 and the six points ±1e−3 e_k.
LinearSolveReport minimize_F_I(const HexMesh& mesh, const TensorField& c, const LoadSpec& spec,
                               LinearSolveOptions opt = {});

struct PenaltySchedule {
  std::vector<double> betas{1e2, 1e3, 1e4};
  /// Further stages (β × 10) are appended while det_violation exceeds tol_det_soft, up to this β.
  double beta_max = 1e8;
  void validate() const;
};

struct NonlinearOptions {
  double tol_opt = 1e-8;
  double tol_det_soft = 1e-6;
  int max_iterations = 2000;
  PenaltySchedule schedule;
  int workers = 1;
  /// Flow-parametrized solver.
  int substeps = 32;
  int potential_degree = 4;
};

struct NonlinearReport {
  NodalField v_h;
  /// h⁻²∫W(I + h∇v) − L(v), without the penalty.
  double value = 0.0;
  /// Penalty solver: max |det − 1| at element centers. Flow solver: integrator det residual.
  double det_violation = 0.0;
  int iterations = 0;
  int evaluations = 0;
  double penalty_final = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
  std::string message;
  /// Flow solver: coefficients in potential_basis.
  std::vector<double> theta;
};

/// h⁻² Σ_qp w W(I + h∇u) + h⁻² β Σ_e |e| (det(I + h∇u(center)) − 1)² − ℓᵀu; +∞ when det ≤ 0 anywhere.
class PenaltyObjective {
 public:
  PenaltyObjective(const HexMesh& mesh, const MaterialModel& model, const LoadSpec& spec, double h, int workers = 1);

  void set_beta(double beta) { beta_ = beta; }
  double beta() const { return beta_; }
  double h() const { return h_; }
  double operator()(const Eigen::VectorXd& u, Eigen::VectorXd& g) const;
  /// Unpenalized value h⁻²∫W − L and max |det − 1| at element centers.
  double energy(const Eigen::VectorXd& u) const;
  double center_det_violation(const Eigen::VectorXd& u) const;
  const Eigen::VectorXd& load() const { return load_; }

 private:
  double evaluate(const Eigen::VectorXd& u, Eigen::VectorXd* g, bool penalty) const;

  const HexMesh* mesh_;
  const MaterialModel* model_;
  double h_;
  double beta_ = 0.0;
  int workers_;
  Eigen::VectorXd load_;
  std::vector<const MaterialModel*> local_;  // model in effect at each quadrature point
};

/// Penalty continuation with L-BFGS, preconditioned by (K + 2β DᵀV⁻¹D + εM)⁻¹; steps stay L²-orthogonal to the
/// rigid fields, so an init orthogonal to them gives a gauge-fixed result.
NonlinearReport minimize_nonlinear(const HexMesh& mesh, const MaterialModel& model, const LoadSpec& spec, double h,
                                   const NodalField& init, NonlinearOptions opt = {});

/// Divergence-free polynomial fields of degree ≤ degree − 1, as potentials A with curl A orthonormal in L²(box) and
/// orthogonal to the rigid fields.
std::vector<PolyVec> potential_basis(const Box& box, int degree);

/// Minimization over v = recovery of curl(Σ θ_k A_k); energy from the exact flow gradient at the mesh quadrature
/// points, load from the nodal values. Gradients by central differences.
NonlinearReport minimize_nonlinear_flowparam(const HexMesh& mesh, const MaterialModel& model, const LoadSpec& spec,
                                             double h, const std::vector<double>& theta_init = {},
                                             NonlinearOptions opt = {});

}  // namespace traclin
