#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "traclin/rng.hpp"
#include "traclin/solver.hpp"

using namespace traclin;

namespace {

Poly mono(double c, int i, int j, int k) { return Poly(std::vector<Monomial>{Monomial{c, {i, j, k}}}); }

LoadSpec centered_dilation() {
  PolyVec f;
  for (int i = 0; i < 3; ++i) f.c[static_cast<std::size_t>(i)] = Poly::linear(i);
  return {VectorExpr(f), VectorExpr::zero()};
}
LoadSpec bump_and_pressure(double lambda) {
  return {VectorExpr::named("gradient_potential", {3e7, 0.05, -0.1, 0.0, 0.3, 0.25, 0.35}),
          VectorExpr::named("pressure", {lambda})};
}
// Equilibrated on the centered unit box and not symmetric under the cube group.
LoadSpec shear_load() {
  PolyVec f;
  f.c[0] = mono(1.0, 0, 2, 0);
  f.c[0] += Poly::constant(-1.0 / 12.0);
  return {VectorExpr(f), VectorExpr::zero()};
}

// Independent B-bar energy: Σ_e Σ_q w Ē : C : Ē from the mesh strain routines.
double bbar_energy(const HexMesh& mesh, const TensorField& tf, const NodalField& v) {
  double s = 0.0;
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const double div = element_divergence(mesh, v, e);
    for (int q = 0; q < HexMesh::kQp; ++q) {
      const Mat3 E = strain(mesh, v, e, q);
      const Mat3 Eb = E + ((div - trace(E)) / 3.0) * Mat3::identity();
      s += mesh.qp_weight() * tf.at(e, q).quad(Eb);
    }
  }
  return s;
}

NodalField random_field(const HexMesh& mesh, SplitMix64& rng, double scale) {
  NodalField v(mesh.node_count());
  for (std::size_t n = 0; n < v.size(); ++n)
    v[n] = scale * Vec3{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
  return v;
}

}  // namespace

TEST_CASE("vector conversions round trip") {
  const HexMesh mesh = build_box_mesh(Box{}, 2);
  SplitMix64 rng(1);
  const NodalField v = random_field(mesh, rng, 1.0);
  const NodalField w = to_field(to_vector(v));
  for (std::size_t n = 0; n < v.size(); ++n) CHECK(norm(v[n] - w[n]) == 0.0);
}

TEST_CASE("mesh operators") {
  const HexMesh mesh = build_box_mesh(Box{{0.1, 0.0, -0.2}, {0.5, 0.4, 0.6}}, 3);
  const MaterialModel model = MaterialModel::ogden({{1.0, 2.0}, {-0.3, -2.0}});
  const TensorField tf(mesh, model);
  const MeshOperators ops(mesh, tf);
  SplitMix64 rng(2);

  SUBCASE("rigid fields are in the kernel of K and D") {
    const Eigen::MatrixXd kr = ops.K * ops.R, dr = ops.D * ops.R;
    CHECK(kr.lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(dr.lpNorm<Eigen::Infinity>() < 1e-12);
  }
  SUBCASE("stiffness matches a direct B-bar quadrature") {
    for (int t = 0; t < 5; ++t) {
      const NodalField v = random_field(mesh, rng, 1.0);
      const Eigen::VectorXd u = to_vector(v);
      CHECK(u.dot(ops.K * u) == doctest::Approx(bbar_energy(mesh, tf, v)).epsilon(1e-12));
    }
  }
  SUBCASE("divergence operator is the volume-weighted element divergence") {
    const NodalField v = random_field(mesh, rng, 1.0);
    const Eigen::VectorXd d = ops.D * to_vector(v);
    for (std::size_t e = 0; e < mesh.element_count(); ++e)
      CHECK(d(static_cast<Eigen::Index>(e)) ==
            doctest::Approx(mesh.element_volume() * element_divergence(mesh, v, e)).epsilon(1e-12));
  }
  SUBCASE("projections") {
    const Eigen::VectorXd u = to_vector(random_field(mesh, rng, 1.0));
    const Eigen::VectorXd p = ops.project_primal(u);
    CHECK((ops.R.transpose() * (ops.M * p)).norm() < 1e-13);
    // Agreement with the rigid-split routine.
    const RigidSplit split = project_rigid(mesh, to_field(u));
    CHECK((p - to_vector(split.remainder)).lpNorm<Eigen::Infinity>() < 1e-12);
    const Eigen::VectorXd g = ops.M * (ops.R * Eigen::Matrix<double, 6, 1>::Ones());
    CHECK(ops.project_dual(g).norm() < 1e-13);
  }
  SUBCASE("shift terms") {
    const Mat3 s = sym(Mat3{{0.2, -0.1, 0.4, 0.3, 0.0, 0.1, -0.5, 0.2, -0.2}});
    const NodalField v = NodalField::sample(mesh, [&](const Vec3& x) { return s * x; });
    const Eigen::VectorXd u = to_vector(v);
    CHECK(ops.shift_vector(s).dot(u) == doctest::Approx(bbar_energy(mesh, tf, v)).epsilon(1e-12));
    CHECK(ops.shift_energy(s) == doctest::Approx(bbar_energy(mesh, tf, v)).epsilon(1e-12));
  }
}

TEST_CASE("minimize_E_I") {
  const HexMesh mesh = build_box_mesh(Box{}, 4);
  const MaterialModel model = MaterialModel::quad_green();
  const TensorField tf(mesh, model);

  SUBCASE("zero loads") {
    const LinearSolveReport r = minimize_E_I(mesh, tf, LoadSpec{});
    CHECK(r.value == 0.0);
    for (const Vec3& u : r.v_star.values()) CHECK(norm(u) == 0.0);
  }
  SUBCASE("gradient load balanced by pressure has minimum 0") {
    const LinearSolveReport r = minimize_E_I(mesh, tf, bump_and_pressure(1.0));
    CHECK(std::abs(r.value) <= 1e-9);
    CHECK(strain_l2(mesh, r.v_star) <= 1e-6);
  }
  SUBCASE("unequilibrated loads are rejected") {
    const LoadSpec bad{VectorExpr(PolyVec{{Poly::constant(1.0), Poly(), Poly()}}), VectorExpr::zero()};
    CHECK_THROWS_AS(minimize_E_I(mesh, tf, bad), LoadConditionViolated);
  }
  SUBCASE("dilation load: constraint, gauge and penalty oracle") {
    const LoadSpec spec = centered_dilation();
    const LinearSolveReport r = minimize_E_I(mesh, tf, spec);
    CHECK(r.value < 0.0);
    CHECK(r.div_residual <= 1e-10);
    CHECK(r.opt_residual <= 1e-8);
    const RigidSplit split = project_rigid(mesh, r.v_star);
    CHECK(norm(split.rigid.a) + norm(split.rigid.b) < 1e-12);

    // Value equals the quadratic-mode energy minus the load.
    const std::vector<double> l = load_vector(spec, mesh);
    const EnergyIntegral ei = integrate_energy(mesh, QuadraticMode{&tf}, r.v_star);
    REQUIRE(ei.value.is_finite());
    CHECK(ei.value.value() - eval_L(l, r.v_star) == doctest::Approx(r.value).epsilon(1e-10));
    // L is blind to rigid additions.
    NodalField shifted = r.v_star;
    for (std::size_t n = 0; n < mesh.node_count(); ++n) shifted[n] += cross(Vec3{0.3, -1, 2}, mesh.nodes()[n]) + Vec3{1, 2, 3};
    CHECK(eval_L(l, shifted) == doctest::Approx(eval_L(l, r.v_star)).epsilon(1e-10));

    // Dense penalty oracle: min ½uᵀKu + ½β|Du|²/|e| − ℓᵀu with the rigid modes removed by a Gram penalty.
    const MeshOperators ops(mesh, tf);
    const Eigen::MatrixXd k = Eigen::MatrixXd(ops.K);
    const Eigen::MatrixXd d = Eigen::MatrixXd(ops.D);
    const Eigen::Map<const Eigen::VectorXd> lv(l.data(), static_cast<Eigen::Index>(l.size()));
    const double beta = 1e6 * k.diagonal().maxCoeff() / (d.transpose() * d).diagonal().maxCoeff();
    const Eigen::MatrixXd mr = Eigen::MatrixXd(ops.M) * ops.R;
    const Eigen::MatrixXd a = k + beta * d.transpose() * d + k.diagonal().maxCoeff() * mr * mr.transpose();
    const Eigen::VectorXd u = a.ldlt().solve(lv);
    const double oracle = 0.5 * u.dot(k * u) - lv.dot(u);
    CHECK(r.value == doctest::Approx(oracle).epsilon(1e-4));
  }
}

TEST_CASE("minimize_F_I") {
  const HexMesh mesh = build_box_mesh(Box{}, 4);
  const MaterialModel model = MaterialModel::quad_green();
  const TensorField tf(mesh, model);

  SUBCASE("zero loads") {
    const LinearSolveReport r = minimize_F_I(mesh, tf, LoadSpec{});
    CHECK(r.value == 0.0);
    CHECK(norm(r.w_star.w) == 0.0);
  }
  SUBCASE("strictly compatible loads: min F = min E and w = 0") {
    for (const LoadSpec& spec : {LoadSpec{VectorExpr::named("radial"), VectorExpr::zero()}, bump_and_pressure(1.0)}) {
      const LinearSolveReport e = minimize_E_I(mesh, tf, spec);
      const LinearSolveReport f = minimize_F_I(mesh, tf, spec);
      CHECK(f.value <= e.value + 1e-12);
      CHECK(std::abs(f.value - e.value) <= 1e-8 * (1.0 + std::abs(e.value)));
      CHECK(norm(f.w_star.w) <= 1e-5);
    }
  }
  SUBCASE("w-objective identity: J(w) − J(0) = −½ L(W²x)") {
    const LoadSpec spec{VectorExpr::named("radial"), VectorExpr::named("pressure", {0.4})};
    const LinearKKT kkt(mesh, tf, spec);
    const double j0 = kkt.solve().value;
    const std::vector<double> l = load_vector(spec, mesh);
    SplitMix64 rng(3);
    for (int t = 0; t < 5; ++t) {
      const Vec3 w{rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
      const Mat3 ww = skew_of(w) * skew_of(w);
      const double jw = kkt.solve(0.5 * ww, -dot(w, w)).value;
      const double lw2 = eval_L(l, NodalField::sample(mesh, [&](const Vec3& x) { return ww * x; }));
      CHECK(jw - j0 == doctest::Approx(-0.5 * lw2).epsilon(1e-8).scale(1e-12));
      // Against the moment-matrix margin: −½ L(W²x) ≥ −½ margin |w|².
      const CompatReport c = compatibility_margin(spec, mesh);
      CHECK(jw - j0 >= -0.5 * c.margin * dot(w, w) - 1e-12);
    }
  }
  SUBCASE("violating load has no minimum") {
    CHECK_THROWS_AS(minimize_F_I(mesh, tf, {VectorExpr::zero(), VectorExpr::named("pressure", {-1.0})}), SolverNonconvergence);
  }
}

TEST_CASE("penalty objective gradient matches central differences") {
  const HexMesh mesh = build_box_mesh(Box{}, 3);
  const MaterialModel model = MaterialModel::ogden({{1.0, 2.0}, {-0.3, -2.0}});
  PenaltyObjective obj(mesh, model, shear_load(), 0.1);
  obj.set_beta(1e3);
  SplitMix64 rng(4);
  for (int it = 0; it < 3; ++it) {
    const Eigen::VectorXd u = to_vector(random_field(mesh, rng, 0.3));
    Eigen::VectorXd g;
    const double f0 = obj(u, g);
    REQUIRE(std::isfinite(f0));
    for (int d = 0; d < 20; ++d) {
      const Eigen::VectorXd dir = to_vector(random_field(mesh, rng, 1.0)).normalized();
      const double eps = 1e-5;
      Eigen::VectorXd gd;
      const double fd = (obj(u + eps * dir, gd) - obj(u - eps * dir, gd)) / (2.0 * eps);
      CHECK(g.dot(dir) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("penalty schedule validation") {
  CHECK_NOTHROW(PenaltySchedule{}.validate());
  CHECK_THROWS_AS((PenaltySchedule{{1e3, 1e2}, 1e8}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((PenaltySchedule{{}, 1e8}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((PenaltySchedule{{-1.0}, 1e8}.validate()), std::invalid_argument);
}

TEST_CASE("minimize_nonlinear") {
  const HexMesh mesh = build_box_mesh(Box{}, 4);
  const MaterialModel model = MaterialModel::quad_green();
  const NodalField zero(mesh.node_count());

  SUBCASE("zero loads from zero") {
    const NonlinearReport r = minimize_nonlinear(mesh, model, LoadSpec{}, 0.1, zero);
    CHECK(r.converged);
    CHECK(r.value == 0.0);
    for (const Vec3& u : r.v_h.values()) CHECK(norm(u) == 0.0);
  }
  SUBCASE("rotation field stays at zero energy") {
    const double h = 0.1;
    const Mat3 rot = exp_axial({0.2, -0.5, 0.3}).matrix();
    const NodalField init = NodalField::sample(mesh, [&](const Vec3& x) { return (1.0 / h) * (rot * x - x); });
    const PenaltyObjective obj(mesh, model, LoadSpec{}, h);
    const double v0 = obj.energy(to_vector(init));
    CHECK(std::abs(v0) <= 1e-12);
    const NonlinearReport r = minimize_nonlinear(mesh, model, LoadSpec{}, h, init);
    CHECK(r.converged);
    CHECK(r.value <= v0 + 1e-14);
  }
  SUBCASE("stays close to the linearized minimum for small h") {
    const LoadSpec spec = shear_load();
    const double e = minimize_E_I(mesh, TensorField(mesh, model), spec).value;
    for (double h : {0.2, 0.05, 0.0125}) {
      const NonlinearReport r = minimize_nonlinear(mesh, model, spec, h, zero);
      INFO("h=" << h << " value " << r.value << " min E " << e);
      CHECK(r.converged);
      CHECK(r.det_violation <= 1e-6);
      const double gap = std::abs(r.value - e);
      // Remaining gap is the element-center constraint bias, independent of h.
      CHECK(gap <= 1e-3 * std::abs(e));
    }
  }
  SUBCASE("bad arguments") {
    CHECK_THROWS_AS(minimize_nonlinear(mesh, model, LoadSpec{}, 1.0, zero), std::invalid_argument);
    CHECK_THROWS_AS(minimize_nonlinear(mesh, model, LoadSpec{}, 0.1, NodalField(3)), std::invalid_argument);
  }
}

TEST_CASE("potential basis") {
  const Box box{{0.2, 0.0, 0.1}, {0.5, 0.4, 0.3}};
  const std::vector<PolyVec> basis = potential_basis(box, 4);
  CHECK(basis.size() == 44);  // divergence-free cubic fields (3·20 − 10) minus 6 rigid
  const QuadratureSet q = box_quadrature(box, 6);
  std::vector<PolyVec> curls;
  for (const auto& a : basis) curls.push_back(a.curl());
  for (std::size_t i = 0; i < curls.size(); ++i) {
    for (const Vec3& x : {Vec3{0.3, 0.1, 0.2}, Vec3{0.45, 0.35, 0.15}})
      CHECK(std::abs(curls[i].divergence()(x)) < 1e-9);
    for (std::size_t j = i; j < curls.size(); ++j) {
      const double ip = volume_quadrature(q, [&](const Vec3& x) { return dot(curls[i](x), curls[j](x)); });
      CHECK(ip == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-9).scale(1.0));
    }
    for (int k = 0; k < 3; ++k) {
      const Vec3 e = Vec3::unit(k);
      CHECK(std::abs(volume_quadrature(q, [&](const Vec3& x) { return dot(curls[i](x), e); })) < 1e-10);
      CHECK(std::abs(volume_quadrature(q, [&](const Vec3& x) { return dot(curls[i](x), cross(e, x)); })) < 1e-10);
    }
  }
}

TEST_CASE("minimize_nonlinear_flowparam") {
  const HexMesh mesh = build_box_mesh(Box{}, 3);
  const MaterialModel model = MaterialModel::quad_green();
  NonlinearOptions opt;
  opt.potential_degree = 3;

  SUBCASE("zero loads") {
    const NonlinearReport r = minimize_nonlinear_flowparam(mesh, model, LoadSpec{}, 0.1, {}, opt);
    CHECK(r.value == 0.0);
    CHECK(r.det_violation <= 1e-8);
    for (double t : r.theta) CHECK(t == 0.0);
  }
  SUBCASE("small h reproduces the linearized minimum over the same fields") {
    const LoadSpec spec = shear_load();
    const double h = 0.01;
    const NonlinearReport r = minimize_nonlinear_flowparam(mesh, model, spec, h, {}, opt);
    CHECK(r.det_violation <= 1e-8);

    // Oracle: −½ cᵀH⁻¹c with H = ∫∇b:C:∇b at the mesh quadrature points and c the nodal load of each field.
    const std::vector<PolyVec> basis = potential_basis(mesh.box(), 3);
    const ElasticityTensor c = hessian_identity(model, Vec3{}).tensor;
    const std::vector<double> l = load_vector(spec, mesh);
    const auto nb = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd hm = Eigen::MatrixXd::Zero(nb, nb);
    Eigen::VectorXd cv(nb);
    for (Eigen::Index i = 0; i < nb; ++i) {
      const PolyVec vi = basis[static_cast<std::size_t>(i)].curl();
      cv(i) = eval_L(l, NodalField::sample(mesh, [&](const Vec3& x) { return vi(x); }));
      for (Eigen::Index j = 0; j < nb; ++j) {
        const PolyVec vj = basis[static_cast<std::size_t>(j)].curl();
        for (std::size_t e = 0; e < mesh.element_count(); ++e)
          for (int q = 0; q < HexMesh::kQp; ++q) {
            const Vec3 x = mesh.qp_position(e, q);
            hm(i, j) += mesh.qp_weight() * ddot(c.apply(vi.jacobian(x)), vj.jacobian(x));
          }
      }
    }
    const double oracle = -0.5 * cv.dot(hm.ldlt().solve(cv));
    INFO("flow " << r.value << " linear " << oracle);
    CHECK(oracle < 0.0);
    CHECK(r.value == doctest::Approx(oracle).epsilon(0.05));
  }
}
