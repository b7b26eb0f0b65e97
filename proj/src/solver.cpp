#include "traclin/solver.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <sstream>

#include "traclin/parallel.hpp"

namespace traclin {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

// Strain (B-bar or plain) of the unit displacement e_i φ_a at quadrature point q.
Mat3 unit_strain(const HexMesh& mesh, int q, int a, int i, bool bbar) {
  const Vec3& g = mesh.shape_grad(q, a);
  Mat3 e;
  for (int j = 0; j < 3; ++j) {
    e(i, j) += 0.5 * g[j];
    e(j, i) += 0.5 * g[j];
  }
  if (bbar) {
    const double shift = (mesh.center_grad(a)[i] - g[i]) / 3.0;
    for (int k = 0; k < 3; ++k) e(k, k) += shift;
  }
  return e;
}

Eigen::SparseMatrix<double> from_triplets(Eigen::Index rows, Eigen::Index cols, const Triplets& t) {
  Eigen::SparseMatrix<double> m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

double max_diag(const Eigen::SparseMatrix<double>& m) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) d = std::max(d, m.coeff(i, i));
  return d;
}

void require_equilibrium(const LoadSpec& spec, const HexMesh& mesh) {
  const EquilibriumReport eq = check_equilibrium(spec, mesh);
  if (!eq.pass) {
    std::ostringstream os;
    os << "load is not equilibrated: resultant |" << norm(eq.resultant) << "|, torque |" << norm(eq.torque) << "|";
    throw LoadConditionViolated(os.str());
  }
}

}  // namespace

Eigen::VectorXd to_vector(const NodalField& v) {
  Eigen::VectorXd u(static_cast<Eigen::Index>(3 * v.size()));
  for (std::size_t n = 0; n < v.size(); ++n)
    for (int i = 0; i < 3; ++i) u(static_cast<Eigen::Index>(3 * n) + i) = v[n][i];
  return u;
}

NodalField to_field(const Eigen::VectorXd& u) {
  NodalField v(static_cast<std::size_t>(u.size() / 3));
  for (std::size_t n = 0; n < v.size(); ++n)
    for (int i = 0; i < 3; ++i) v[n][i] = u(static_cast<Eigen::Index>(3 * n) + i);
  return v;
}

MeshOperators::MeshOperators(const HexMesh& mesh, const TensorField& c, bool bbar) : mesh_(&mesh), c_(&c), bbar_(bbar) {
  const auto ndof = static_cast<Eigen::Index>(mesh.dof_count());
  const auto nel = static_cast<Eigen::Index>(mesh.element_count());
  Triplets kt, dt, mt;
  std::array<std::array<Mat3, 24>, HexMesh::kQp> b{};
  for (int q = 0; q < HexMesh::kQp; ++q)
    for (int a = 0; a < 8; ++a)
      for (int i = 0; i < 3; ++i) b[static_cast<std::size_t>(q)][static_cast<std::size_t>(3 * a + i)] = unit_strain(mesh, q, a, i, bbar);
  const double w = mesh.qp_weight();
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto& el = mesh.elements()[e];
    Eigen::Matrix<double, 24, 24> ke = Eigen::Matrix<double, 24, 24>::Zero();
    for (int q = 0; q < HexMesh::kQp; ++q) {
      const ElasticityTensor& cq = c.at(e, q);
      const auto& bq = b[static_cast<std::size_t>(q)];
      for (std::size_t r = 0; r < 24; ++r) {
        const Mat3 cb = cq.apply(bq[r]);
        for (std::size_t s = 0; s < 24; ++s) ke(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) += w * ddot(cb, bq[s]);
      }
    }
    for (int a = 0; a < 8; ++a)
      for (int i = 0; i < 3; ++i) {
        const auto row = static_cast<Eigen::Index>(3 * el[static_cast<std::size_t>(a)]) + i;
        dt.emplace_back(static_cast<Eigen::Index>(e), row, mesh.element_volume() * mesh.center_grad(a)[i]);
        for (int bb = 0; bb < 8; ++bb) {
          for (int j = 0; j < 3; ++j) {
            const auto col = static_cast<Eigen::Index>(3 * el[static_cast<std::size_t>(bb)]) + j;
            kt.emplace_back(row, col, ke(3 * a + i, 3 * bb + j));
          }
          double m = 0.0;
          for (int q = 0; q < HexMesh::kQp; ++q) m += w * mesh.shape(q, a) * mesh.shape(q, bb);
          mt.emplace_back(row, static_cast<Eigen::Index>(3 * el[static_cast<std::size_t>(bb)]) + i, m);
        }
      }
  }
  K = from_triplets(ndof, ndof, kt);
  D = from_triplets(nel, ndof, dt);
  M = from_triplets(ndof, ndof, mt);
  const RigidBasis rb(mesh);
  R.resize(ndof, 6);
  for (int k = 0; k < 6; ++k) R.col(k) = to_vector(rb.field(k));
  const Eigen::Matrix<double, 6, 6> g = R.transpose() * (M * R);
  gram_inv = g.inverse();
}

Eigen::VectorXd MeshOperators::project_primal(const Eigen::VectorXd& u) const {
  const Eigen::Matrix<double, 6, 1> c = gram_inv * (R.transpose() * (M * u));
  return u - R * c;
}

Eigen::VectorXd MeshOperators::project_dual(const Eigen::VectorXd& g) const {
  const Eigen::Matrix<double, 6, 1> c = gram_inv * (R.transpose() * g);
  return g - M * (R * c);
}

Eigen::VectorXd MeshOperators::shift_vector(const Mat3& s) const {
  const HexMesh& mesh = *mesh_;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.dof_count()));
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto& el = mesh.elements()[e];
    for (int q = 0; q < HexMesh::kQp; ++q) {
      const Mat3 cs = c_->at(e, q).apply(s);
      for (int a = 0; a < 8; ++a)
        for (int i = 0; i < 3; ++i)
          b(static_cast<Eigen::Index>(3 * el[static_cast<std::size_t>(a)]) + i) +=
              mesh.qp_weight() * ddot(unit_strain(mesh, q, a, i, bbar_), cs);
    }
  }
  return b;
}

double MeshOperators::shift_energy(const Mat3& s) const {
  double sum = 0.0;
  for (std::size_t e = 0; e < mesh_->element_count(); ++e)
    for (int q = 0; q < HexMesh::kQp; ++q) sum += mesh_->qp_weight() * c_->at(e, q).quad(s);
  return sum;
}

// ---------------------------------------------------------------------------
// Linearized problems

LinearKKT::LinearKKT(const HexMesh& mesh, const TensorField& c, const LoadSpec& spec, LinearSolveOptions opt)
    : mesh_(&mesh), ops_(mesh, c), opt_(opt) {
  require_equilibrium(spec, mesh);
  const std::vector<double> l = load_vector(spec, mesh);
  load_ = Eigen::Map<const Eigen::VectorXd>(l.data(), static_cast<Eigen::Index>(l.size()));

  // Pinning one corner fully, a second corner in two directions and a third in one removes the rigid kernel.
  const int n = mesh.n();
  const auto n0 = static_cast<int>(mesh.node_index(0, 0, 0));
  const auto n1 = static_cast<int>(mesh.node_index(n, 0, 0));
  const auto n2 = static_cast<int>(mesh.node_index(0, n, 0));
  pinned_ = {3 * n0, 3 * n0 + 1, 3 * n0 + 2, 3 * n1 + 1, 3 * n1 + 2, 3 * n2 + 2};

  const Eigen::SparseMatrix<double> dtd = ops_.D.transpose() * ops_.D;
  r_ = opt_.rho * max_diag(ops_.K) / max_diag(dtd);
  Eigen::SparseMatrix<double> a = ops_.K + r_ * dtd;
  std::vector<char> pin(static_cast<std::size_t>(a.rows()), 0);
  for (int d : pinned_) pin[static_cast<std::size_t>(d)] = 1;
  a.prune([&](Eigen::Index i, Eigen::Index j, double) {
    return !pin[static_cast<std::size_t>(i)] && !pin[static_cast<std::size_t>(j)];
  });
  for (int d : pinned_) a.coeffRef(d, d) = 1.0;
  a_ = a;
  ldlt_.compute(a_);
  if (ldlt_.info() != Eigen::Success) throw SolverNonconvergence("minimize_E_I: factorization failed", 0.0);
}

LinearSolveReport LinearKKT::solve(const Mat3& shift, double div_target) const {
  const MeshOperators& o = ops_;
  const double vol = mesh_->element_volume();
  const Eigen::VectorXd t = Eigen::VectorXd::Constant(o.D.rows(), vol * div_target);
  const Eigen::VectorXd b = o.shift_vector(shift);
  const Eigen::VectorXd base = load_ + b + r_ * (o.D.transpose() * t);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(o.D.rows());
  Eigen::VectorXd u;
  LinearSolveReport rep;
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 1;; ++it) {
    Eigen::VectorXd rhs = base - o.D.transpose() * p;
    for (int d : pinned_) rhs(d) = 0.0;
    u = ldlt_.solve(rhs);
    // One refinement step; the augmented matrix is ill conditioned by the factor rho.
    u += ldlt_.solve(rhs - a_ * u);
    const Eigen::VectorXd c = o.D * u - t;
    p += r_ * c;
    rep.uzawa_iterations = it;
    rep.div_residual = c.lpNorm<Eigen::Infinity>() / vol;
    if (rep.div_residual <= opt_.tol_div * (1.0 + std::abs(div_target))) break;
    if (it >= opt_.max_uzawa || !(rep.div_residual < prev * (1.0 - 1e-12))) {
      std::ostringstream os;
      os << "Uzawa iteration stagnated after " << it << " steps: divergence residual " << rep.div_residual;
      throw SolverNonconvergence(os.str(), rep.div_residual);
    }
    prev = rep.div_residual;
  }
  u = o.project_primal(u);
  const Eigen::VectorXd ku = o.K * u;
  rep.value = 0.5 * u.dot(ku) - b.dot(u) + 0.5 * o.shift_energy(shift) - load_.dot(u);
  const Eigen::VectorXd res = o.project_dual(ku - b - load_ + o.D.transpose() * p);
  rep.opt_residual = res.norm() / (1.0 + load_.norm() + b.norm());
  if (rep.opt_residual > opt_.tol_opt) {
    std::ostringstream os;
    os << "linear solve: optimality residual " << rep.opt_residual << " above " << opt_.tol_opt;
    throw SolverNonconvergence(os.str(), rep.opt_residual);
  }
  rep.div_residual = (o.D * u - t).lpNorm<Eigen::Infinity>() / vol;
  rep.v_star = to_field(u);
  return rep;
}

LinearSolveReport minimize_E_I(const HexMesh& mesh, const TensorField& c, const LoadSpec& spec, LinearSolveOptions opt) {
  return LinearKKT(mesh, c, spec, opt).solve();
}

LinearSolveReport minimize_F_I(const HexMesh& mesh, const TensorField& c, const LoadSpec& spec, LinearSolveOptions opt) {
  const LinearKKT kkt(mesh, c, spec, opt);
  auto shift = [](const Vec3& w) {
    const Mat3 ww = skew_of(w);
    return 0.5 * (ww * ww);
  };
  auto J = [&](const Vec3& w) { return kkt.solve(shift(w), -dot(w, w)).value; };

  constexpr double kStep = 1e-3;
  constexpr int kMaxNewton = 100;
  // Curvature scale of J in w, from the energy of a unit deviatoric shift.
  const double scale = kkt.ops().shift_energy(Mat3::diag(1.0, -1.0, 0.0));
  const double flat = 1e-6 * kkt.load().norm() + 1e-8 * scale;
  constexpr double kMaxW = 1e6;
  std::vector<Vec3> starts{Vec3{}};
  for (int k = 0; k < 3; ++k)
    for (double s : {1.0, -1.0}) starts.push_back(s * kStep * Vec3::unit(k));

  Vec3 best_w;
  double best = std::numeric_limits<double>::infinity();
  int total_iterations = 0;
  for (const Vec3& w0 : starts) {
    Vec3 w = w0;
    bool done = false;
    for (int it = 0; it < kMaxNewton; ++it, ++total_iterations) {
      const double j0 = J(w);
      Eigen::Vector3d g;
      Eigen::Matrix3d hm;
      std::array<double, 3> jp{}, jm{};
      for (int i = 0; i < 3; ++i) {
        jp[static_cast<std::size_t>(i)] = J(w + kStep * Vec3::unit(i));
        jm[static_cast<std::size_t>(i)] = J(w - kStep * Vec3::unit(i));
        g(i) = (jp[static_cast<std::size_t>(i)] - jm[static_cast<std::size_t>(i)]) / (2.0 * kStep);
        hm(i, i) = (jp[static_cast<std::size_t>(i)] - 2.0 * j0 + jm[static_cast<std::size_t>(i)]) / (kStep * kStep);
      }
      for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
          const Vec3 ei = kStep * Vec3::unit(i), ej = kStep * Vec3::unit(j);
          hm(i, j) = hm(j, i) = (J(w + ei + ej) - J(w + ei - ej) - J(w - ei + ej) + J(w - ei - ej)) / (4.0 * kStep * kStep);
        }
      const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(hm);
      Eigen::Vector3d step;
      if (es.eigenvalues()(0) >= -flat) {
        // Curvature below the noise level is treated as flat (a marginal load): no step along it.
        Eigen::Vector3d inv = Eigen::Vector3d::Zero();
        for (int i = 0; i < 3; ++i)
          if (es.eigenvalues()(i) > flat) inv(i) = 1.0 / es.eigenvalues()(i);
        step = -es.eigenvectors() * (inv.asDiagonal() * (es.eigenvectors().transpose() * g));
      } else {
        // Negative curvature: follow it with growing length (the objective is unbounded below along it).
        Eigen::Vector3d d = es.eigenvectors().col(0);
        if (d.dot(g) > 0.0) d = -d;
        step = std::max(1.0, 2.0 * norm(w)) * d;
      }
      w += Vec3{step(0), step(1), step(2)};
      if (norm(w) > kMaxW) break;
      if (step.norm() <= 1e-10 * (1.0 + norm(w))) {
        done = true;
        break;
      }
    }
    if (!done) {
      std::ostringstream os;
      os << "minimize_F_I: outer Newton did not converge in " << kMaxNewton << " iterations (|w| = " << norm(w)
         << ", objective " << J(w) << "); the load is likely incompatible";
      throw SolverNonconvergence(os.str(), norm(w));
    }
    const double jw = J(w);
    if (jw < best - 1e-12 * scale) {
      best = jw;
      best_w = w;
    }
  }
  LinearSolveReport rep = kkt.solve(shift(best_w), -dot(best_w, best_w));
  rep.w_star = AxialVector{best_w};
  rep.outer_iterations = total_iterations;
  return rep;
}

// ---------------------------------------------------------------------------
// Nonlinear penalty problem

void PenaltySchedule::validate() const {
  if (betas.empty()) throw std::invalid_argument("penalty schedule: no betas");
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] > 0.0)) throw std::invalid_argument("penalty schedule: betas must be positive");
    if (i > 0 && !(betas[i] > betas[i - 1])) throw std::invalid_argument("penalty schedule: betas must increase");
  }
}

PenaltyObjective::PenaltyObjective(const HexMesh& mesh, const MaterialModel& model, const LoadSpec& spec, double h,
                                   int workers)
    : mesh_(&mesh), model_(&model), h_(h), workers_(workers) {
  if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("nonlinear solver: h must lie in (0, 1)");
  const std::vector<double> l = load_vector(spec, mesh);
  load_ = Eigen::Map<const Eigen::VectorXd>(l.data(), static_cast<Eigen::Index>(l.size()));
  local_.resize(mesh.element_count() * HexMesh::kQp);
  for (std::size_t e = 0; e < mesh.element_count(); ++e)
    for (int q = 0; q < HexMesh::kQp; ++q)
      local_[e * HexMesh::kQp + static_cast<std::size_t>(q)] = &model.at(mesh.qp_position(e, q));
}

double PenaltyObjective::evaluate(const Eigen::VectorXd& u, Eigen::VectorXd* g, bool penalty) const {
  const HexMesh& mesh = *mesh_;
  const std::size_t ne = mesh.element_count();
  std::vector<double> val(ne, 0.0);
  std::vector<std::array<Vec3, 8>> force(g ? ne : 0);
  std::vector<char> bad(ne, 0);
  const double h = h_;
  parallel_for(ne, workers_, [&](std::size_t e) {
    const auto& el = mesh.elements()[e];
    std::array<Vec3, 8> ue;
    for (std::size_t a = 0; a < 8; ++a)
      for (int i = 0; i < 3; ++i) ue[a][i] = u(static_cast<Eigen::Index>(3 * el[a]) + i);
    double sum = 0.0;
    std::array<Vec3, 8> fe{};
    for (int q = 0; q < HexMesh::kQp; ++q) {
      Mat3 f = Mat3::identity();
      for (int a = 0; a < 8; ++a) {
        const Vec3& gr = mesh.shape_grad(q, a);
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) f(i, j) += h * ue[static_cast<std::size_t>(a)][i] * gr[j];
      }
      const double jac = det(f);
      if (!(jac > 0.0)) {
        bad[e] = 1;
        return;
      }
      // W and dW/dF of the isochoric density, sharing the factorization.
      const MaterialModel& m = *local_[e * HexMesh::kQp + static_cast<std::size_t>(q)];
      const double s = std::pow(jac, -2.0 / 3.0);
      const Mat3 c = transpose(f) * f;
      sum += mesh.qp_weight() * m.psi(s * c);
      if (g) {
        const Mat3 p = m.dpsi(s * c);
        const Mat3 dw = s * (2.0 * (f * p) - (2.0 / 3.0) * ddot(p, c) / jac * cofactor(f));
        for (int a = 0; a < 8; ++a) fe[static_cast<std::size_t>(a)] += (mesh.qp_weight() / h) * (dw * mesh.shape_grad(q, a));
      }
    }
    sum /= h * h;
    if (penalty && beta_ > 0.0) {
      Mat3 f = Mat3::identity();
      for (int a = 0; a < 8; ++a)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) f(i, j) += h * ue[static_cast<std::size_t>(a)][i] * mesh.center_grad(a)[j];
      const double jac = det(f);
      if (!(jac > 0.0)) {
        bad[e] = 1;
        return;
      }
      const double vol = mesh.element_volume();
      sum += beta_ * vol * (jac - 1.0) * (jac - 1.0) / (h * h);
      if (g) {
        const Mat3 cof = cofactor(f);
        for (int a = 0; a < 8; ++a)
          fe[static_cast<std::size_t>(a)] += (2.0 * beta_ * vol * (jac - 1.0) / h) * (cof * mesh.center_grad(a));
      }
    }
    val[e] = sum;
    if (g) force[e] = fe;
  });
  for (char b : bad)
    if (b) return std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (double v : val) total += v;
  total -= load_.dot(u);
  if (g) {
    *g = -load_;
    for (std::size_t e = 0; e < ne; ++e) {
      const auto& el = mesh.elements()[e];
      for (std::size_t a = 0; a < 8; ++a)
        for (int i = 0; i < 3; ++i) (*g)(static_cast<Eigen::Index>(3 * el[a]) + i) += force[e][a][i];
    }
  }
  return total;
}

double PenaltyObjective::operator()(const Eigen::VectorXd& u, Eigen::VectorXd& g) const { return evaluate(u, &g, true); }

double PenaltyObjective::energy(const Eigen::VectorXd& u) const { return evaluate(u, nullptr, false); }

double PenaltyObjective::center_det_violation(const Eigen::VectorXd& u) const {
  const NodalField v = to_field(u);
  double worst = 0.0;
  for (std::size_t e = 0; e < mesh_->element_count(); ++e) {
    const Mat3 f = Mat3::identity() + h_ * center_gradient(*mesh_, v, e);
    worst = std::max(worst, std::abs(det(f) - 1.0));
  }
  return worst;
}

NonlinearReport minimize_nonlinear(const HexMesh& mesh, const MaterialModel& model, const LoadSpec& spec, double h,
                                   const NodalField& init, NonlinearOptions opt) {
  opt.schedule.validate();
  check_compatible(mesh, init);
  const PenaltyObjective base(mesh, model, spec, h, opt.workers);
  PenaltyObjective obj = base;
  const TensorField tf(mesh, model);
  const MeshOperators ops(mesh, tf, false);
  const Eigen::SparseMatrix<double> dvd = (1.0 / mesh.element_volume()) * Eigen::SparseMatrix<double>(ops.D.transpose() * ops.D);
  const double eps = 1e-8 * max_diag(ops.K) / max_diag(ops.M);

  NonlinearReport rep;
  Eigen::VectorXd u = to_vector(init);
  std::vector<double> betas = opt.schedule.betas;
  LbfgsOptions lo;
  lo.tol_grad = opt.tol_opt;
  lo.max_iterations = opt.max_iterations;
  bool stage_ok = true;
  for (std::size_t k = 0; k < betas.size(); ++k) {
    obj.set_beta(betas[k]);
    const Eigen::SparseMatrix<double> a = ops.K + 2.0 * betas[k] * dvd + eps * ops.M;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> pre(a);
    if (pre.info() != Eigen::Success) throw SolverNonconvergence("minimize_nonlinear: preconditioner factorization failed", 0.0);
    const LbfgsResult r = lbfgs_minimize(
        [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) { return obj(x, g); }, u, lo,
        [&](const Eigen::VectorXd& q) { return ops.project_primal(pre.solve(ops.project_dual(q))); },
        [&](const Eigen::VectorXd& g) { return ops.project_dual(g); });
    u = r.x;
    rep.iterations += r.iterations;
    rep.evaluations += r.evaluations;
    rep.grad_norm = r.grad_norm;
    rep.penalty_final = betas[k];
    rep.message = r.message;
    stage_ok = r.converged;
    if (!stage_ok) break;
    if (k + 1 == betas.size() && obj.center_det_violation(u) > opt.tol_det_soft && betas[k] * 10.0 <= opt.schedule.beta_max)
      betas.push_back(betas[k] * 10.0);
  }
  rep.v_h = to_field(u);
  rep.value = base.energy(u);
  rep.det_violation = obj.center_det_violation(u);
  rep.converged = stage_ok && rep.det_violation <= opt.tol_det_soft;
  if (stage_ok && !rep.converged) rep.message = "det violation above tol_det_soft at the largest penalty";
  return rep;
}

// ---------------------------------------------------------------------------
// Flow-parametrized problem

std::vector<PolyVec> potential_basis(const Box& box, int degree) {
  if (degree < 2 || degree > 6) throw std::invalid_argument("potential_basis: degree must lie in [2, 6]");
  const QuadratureSet q = box_quadrature(box, degree + 2);
  const std::size_t np = q.volume.size();
  auto sample = [&](const PolyVec& a) {
    const CompiledPolyVec c(a.curl());
    Eigen::VectorXd s(static_cast<Eigen::Index>(3 * np));
    for (std::size_t p = 0; p < np; ++p) {
      const Vec3 v = c.value(q.volume[p].x);
      const double sw = std::sqrt(q.volume[p].w);
      for (int i = 0; i < 3; ++i) s(static_cast<Eigen::Index>(3 * p) + i) = sw * v[i];
    }
    return s;
  };
  auto axis_poly = [](int k, Poly p) {
    PolyVec a;
    a.c[static_cast<std::size_t>(k)] = std::move(p);
    return a;
  };
  auto combine = [](PolyVec a, const PolyVec& b, double s) {
    for (std::size_t i = 0; i < 3; ++i) a.c[i] += b.c[i].scaled(s);
    return a;
  };

  // Rigid fields first: e_k = curl(½ e_k ∧ x), e_k ∧ x = curl(−½|x|² e_k).
  std::vector<PolyVec> cand;
  for (int k = 0; k < 3; ++k) {
    PolyVec a;
    const Vec3 e = Vec3::unit(k);
    for (int i = 0; i < 3; ++i) {
      const Vec3 row = cross(e, Vec3::unit(i));  // (e ∧ x)_j = Σ_i x_i (e ∧ e_i)_j
      for (int j = 0; j < 3; ++j)
        if (row[j] != 0.0) a.c[static_cast<std::size_t>(j)] += Poly::linear(i, 0.5 * row[j]);
    }
    cand.push_back(a);
  }
  for (int k = 0; k < 3; ++k) {
    std::vector<Monomial> t;
    for (int i = 0; i < 3; ++i) {
      std::array<int, 3> ex{0, 0, 0};
      ex[static_cast<std::size_t>(i)] = 2;
      t.push_back(Monomial{-0.5, ex});
    }
    cand.push_back(axis_poly(k, Poly(t)));
  }
  const std::size_t n_rigid = cand.size();
  for (int d = 1; d <= degree; ++d)
    for (int i = d; i >= 0; --i)
      for (int j = d - i; j >= 0; --j)
        for (int k = 0; k < 3; ++k) cand.push_back(axis_poly(k, Poly({Monomial{1.0, {i, j, d - i - j}}})));

  std::vector<PolyVec> kept;
  std::vector<Eigen::VectorXd> ks;
  for (std::size_t c = 0; c < cand.size(); ++c) {
    PolyVec a = cand[c];
    Eigen::VectorXd s = sample(a);
    const double n0 = s.norm();
    if (n0 == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t m = 0; m < ks.size(); ++m) {
        const double coef = ks[m].dot(s);
        s -= coef * ks[m];
        a = combine(a, kept[m], -coef);
      }
    const double n1 = s.norm();
    if (c >= n_rigid && n1 < 1e-8 * n0) continue;
    kept.push_back(combine(PolyVec{}, a, 1.0 / n1));
    ks.push_back(s / n1);
  }
  return std::vector<PolyVec>(kept.begin() + static_cast<std::ptrdiff_t>(n_rigid), kept.end());
}

NonlinearReport minimize_nonlinear_flowparam(const HexMesh& mesh, const MaterialModel& model, const LoadSpec& spec,
                                             double h, const std::vector<double>& theta_init, NonlinearOptions opt) {
  if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("nonlinear solver: h must lie in (0, 1)");
  const std::vector<PolyVec> basis = potential_basis(mesh.box(), opt.potential_degree);
  const auto nb = static_cast<Eigen::Index>(basis.size());
  if (!theta_init.empty() && static_cast<Eigen::Index>(theta_init.size()) != nb)
    throw std::invalid_argument("minimize_nonlinear_flowparam: theta_init has the wrong size");
  const std::vector<double> lv = load_vector(spec, mesh);
  const Eigen::VectorXd load = Eigen::Map<const Eigen::VectorXd>(lv.data(), static_cast<Eigen::Index>(lv.size()));
  std::vector<const MaterialModel*> local(mesh.element_count() * HexMesh::kQp);
  for (std::size_t e = 0; e < mesh.element_count(); ++e)
    for (int q = 0; q < HexMesh::kQp; ++q) local[e * HexMesh::kQp + static_cast<std::size_t>(q)] = &model.at(mesh.qp_position(e, q));

  auto potential = [&](const Eigen::VectorXd& th) {
    PolyVec a;
    for (Eigen::Index k = 0; k < nb; ++k)
      for (std::size_t i = 0; i < 3; ++i) a.c[i] += basis[static_cast<std::size_t>(k)].c[i].scaled(th(k));
    return a;
  };
  struct Eval {
    double value = std::numeric_limits<double>::infinity();
    double det_residual = 0.0;
    NodalField field;
  };
  auto evaluate = [&](const Eigen::VectorXd& th) {
    Eval out;
    Recovery rec;
    try {
      rec = recovery_field(DivFreeField(CurlOf{potential(th)}), h, opt.substeps, mesh, opt.workers, false);
    } catch (const FlowExit&) {
      return out;
    }
    double sum = 0.0;
    for (std::size_t e = 0; e < mesh.element_count(); ++e)
      for (int q = 0; q < HexMesh::kQp; ++q) {
        const std::size_t idx = e * HexMesh::kQp + static_cast<std::size_t>(q);
        sum += mesh.qp_weight() * eval_W(*local[idx], mesh.qp_position(e, q), Mat3::identity() + h * rec.qp_gradients[idx]);
      }
    out.value = sum / (h * h) - load.dot(to_vector(rec.field));
    out.det_residual = rec.report.det_residual;
    out.field = std::move(rec.field);
    return out;
  };

  // Linearized Hessian in parameter space: ∫ ∇b_i : C : ∇b_j at the mesh quadrature points.
  const TensorField tf(mesh, model);
  std::vector<CompiledPolyVec> curls;
  for (const auto& a : basis) curls.emplace_back(a.curl());
  Eigen::MatrixXd hl = Eigen::MatrixXd::Zero(nb, nb);
  std::vector<Mat3> grads(basis.size());
  for (std::size_t e = 0; e < mesh.element_count(); ++e)
    for (int q = 0; q < HexMesh::kQp; ++q) {
      const Vec3 x = mesh.qp_position(e, q);
      for (std::size_t k = 0; k < basis.size(); ++k) {
        Vec3 v;
        curls[k].value_and_jacobian(x, v, grads[k]);
      }
      const ElasticityTensor& c = tf.at(e, q);
      for (std::size_t i = 0; i < basis.size(); ++i) {
        const Mat3 ci = c.apply(grads[i]);
        for (std::size_t j = i; j < basis.size(); ++j)
          hl(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += mesh.qp_weight() * ddot(ci, grads[j]);
      }
    }
  hl = hl.selfadjointView<Eigen::Upper>();
  hl.diagonal().array() += 1e-10 * hl.diagonal().maxCoeff();
  const Eigen::LLT<Eigen::MatrixXd> h0(hl);
  if (h0.info() != Eigen::Success) throw SolverNonconvergence("minimize_nonlinear_flowparam: singular preconditioner", 0.0);

  int evaluations = 0;
  const Objective f = [&](const Eigen::VectorXd& th, Eigen::VectorXd& g) {
    const double v0 = evaluate(th).value;
    ++evaluations;
    g.resize(nb);
    if (!std::isfinite(v0)) return v0;
    for (Eigen::Index k = 0; k < nb; ++k) {
      const double d = 1e-5 * std::max(1.0, std::abs(th(k)));
      Eigen::VectorXd tp = th, tm = th;
      tp(k) += d;
      tm(k) -= d;
      const double fp = evaluate(tp).value, fm = evaluate(tm).value;
      evaluations += 2;
      if (!std::isfinite(fp) || !std::isfinite(fm)) return std::numeric_limits<double>::infinity();
      g(k) = (fp - fm) / (2.0 * d);
    }
    return v0;
  };
  Eigen::VectorXd th0 = Eigen::VectorXd::Zero(nb);
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(theta_init.size()); ++k) th0(k) = theta_init[static_cast<std::size_t>(k)];
  LbfgsOptions lo;
  lo.tol_grad = opt.tol_opt;
  lo.max_iterations = opt.max_iterations;
  const LbfgsResult r = lbfgs_minimize(f, th0, lo, [&](const Eigen::VectorXd& q) -> Eigen::VectorXd { return h0.solve(q); });

  const Eval fin = evaluate(r.x);
  NonlinearReport rep;
  rep.v_h = fin.field;
  rep.value = fin.value;
  rep.det_violation = fin.det_residual;
  rep.iterations = r.iterations;
  rep.evaluations = evaluations;
  rep.grad_norm = r.grad_norm;
  rep.converged = r.converged && rep.det_violation <= opt.tol_det_soft;
  rep.message = r.message;
  rep.theta.assign(r.x.data(), r.x.data() + r.x.size());
  return rep;
}

}  // namespace traclin
