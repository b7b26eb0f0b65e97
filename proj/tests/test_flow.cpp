#include <cmath>

#include "doctest.h"
#include "traclin/flow.hpp"
#include "traclin/rng.hpp"

using namespace traclin;

namespace {

// exp(θ[w]) for a unit axis, written out independently of the library.
Mat3 rodrigues(const Vec3& w, double theta) {
  Mat3 k;
  k(0, 1) = -w[2];
  k(0, 2) = w[1];
  k(1, 0) = w[2];
  k(1, 2) = -w[0];
  k(2, 0) = -w[1];
  k(2, 1) = w[0];
  return Mat3::identity() + std::sin(theta) * k + (1.0 - std::cos(theta)) * (k * k);
}

std::vector<Vec3> sample_points(int n) {
  std::vector<Vec3> p;
  SplitMix64 rng(11);
  for (int i = 0; i < n; ++i) p.push_back({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)});
  return p;
}

const Box kUnit{};
const Box kOuter = inflate(kUnit, 0.25);

}  // namespace

TEST_CASE("q_bound") {
  CHECK(q_bound(0.0) == 0.0);
  CHECK(q_bound(1.0) == doctest::Approx(2.718281828459045).epsilon(1e-15));
  CHECK(q_bound(0.1) == doctest::Approx(0.11051709180756477).epsilon(1e-14));
  CHECK_THROWS_AS(q_bound(-1e-3), std::invalid_argument);
}

TEST_CASE("zero field flow is the identity") {
  const auto pts = sample_points(20);
  const FlowResult r = integrate_flow(DivFreeField::zero(), 0.3, 8, pts, kOuter);
  CHECK(r.det_residual == 0.0);
  CHECK(r.steps == 8);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(norm(r.y[i] - pts[i]) == 0.0);
    CHECK(norm(r.F[i] - Mat3::identity()) == 0.0);
  }
  const HexMesh mesh = build_box_mesh(kUnit, 4);
  const Recovery rec = recovery_field(DivFreeField::zero(), 0.1, 8, mesh);
  for (const Vec3& u : rec.field.values()) CHECK(norm(u) == 0.0);
}

TEST_CASE("integrate_flow preconditions") {
  const auto pts = sample_points(3);
  const DivFreeField v = builtin_field("stretch");
  CHECK_THROWS_AS(integrate_flow(v, 0.1, 3, pts, kOuter), std::invalid_argument);
  CHECK_THROWS_AS(integrate_flow(v, 0.0, 8, pts, kOuter), std::invalid_argument);
  CHECK_THROWS_AS(integrate_flow(v, 1.0, 8, pts, kOuter), std::invalid_argument);
  CHECK_THROWS_AS(builtin_field("nope"), std::invalid_argument);
}

TEST_CASE("trajectory leaving the region is reported") {
  // y₁ = x₁ eᵗ leaves |y₁| ≤ 0.625 from x₁ = 0.5 at t = ln 1.25.
  const DivFreeField v = builtin_field("stretch");
  try {
    integrate_flow(v, 0.9, 64, {{0.5, 0.0, 0.0}}, kOuter);
    FAIL("expected FlowExit");
  } catch (const FlowExit& e) {
    CHECK(e.exit_point[0] > 0.625);
    CHECK(e.time == doctest::Approx(std::log(1.25)).epsilon(0.02));
    CHECK(norm(e.start - Vec3{0.5, 0.0, 0.0}) == 0.0);
  }
}

TEST_CASE("LinearSkew flow matches Euler-Rodrigues") {
  const Vec3 axis{1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0};
  const auto pts = sample_points(50);
  for (double scale : {1.0, -2.5}) {
    const DivFreeField v(LinearSkew{AxialVector{axis}, scale});
    const double h = 0.2;
    const FlowResult r = integrate_flow(v, h, 64, pts, Box{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}});
    const Mat3 rot = rodrigues(axis, scale * h);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      CHECK(norm(r.F[i] - rot) < 1e-9);
      CHECK(norm(r.y[i] - rot * pts[i]) < 1e-9);
    }
    CHECK(r.det_residual < 1e-9);
  }
}

TEST_CASE("LinearSkew recovery field closed form") {
  const Vec3 axis{0.0, 0.0, 1.0};
  const DivFreeField v(LinearSkew{AxialVector{axis}, 1.0});
  const HexMesh mesh = build_box_mesh(kUnit, 4);
  double prev = 1e300;
  for (double h : {0.2, 0.1, 0.05}) {
    const Recovery rec = recovery_field(v, h, 64, mesh);
    const Mat3 m = (1.0 / h) * (rodrigues(axis, h) - Mat3::identity());
    for (std::size_t i = 0; i < mesh.node_count(); ++i) CHECK(norm(rec.field[i] - m * mesh.nodes()[i]) < 1e-9);
    CHECK(rec.report.sup_err_v < prev);
    prev = rec.report.sup_err_v;
  }
}

TEST_CASE("stretch field: exact flow and RK4 order of the det residual") {
  // curl(0, 0, x₁x₂) = (x₁, −x₂, 0): y = (x₁eᵗ, x₂e⁻ᵗ, x₃).
  const DivFreeField v = builtin_field("stretch");
  const auto pts = sample_points(30);
  const double h = 0.1;
  const FlowResult fine = integrate_flow(v, h, 64, pts, kOuter);
  CHECK(fine.det_residual <= 1e-10);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 exact{pts[i][0] * std::exp(h), pts[i][1] * std::exp(-h), pts[i][2]};
    CHECK(norm(fine.y[i] - exact) < 1e-12);
  }
  std::vector<double> res;
  for (int n : {4, 8, 16}) res.push_back(integrate_flow(v, h, n, pts, kOuter).det_residual);
  for (std::size_t i = 0; i + 1 < res.size(); ++i) {
    INFO("residuals " << res[i] << " -> " << res[i + 1]);
    CHECK(std::log2(res[i] / res[i + 1]) >= 3.8);
  }
}

TEST_CASE("flux bounds hold for built-in fields") {
  const HexMesh mesh = build_box_mesh(kUnit, 4);
  for (const auto& name : builtin_field_names()) {
    const DivFreeField v = builtin_field(name);
    for (double h : {0.2, 0.1, 0.05}) {
      const Recovery rec = recovery_field(v, h, 32, mesh);
      const RecoveryReport& r = rec.report;
      INFO(name << " h=" << h << " err_v=" << r.sup_err_v << " b2=" << r.bound_flux2 << " err_g=" << r.sup_err_grad
                << " b4=" << r.bound_flux4);
      CHECK(r.flux2_ok());
      CHECK(r.flux3_ok());
      CHECK(r.flux4_ok());
      CHECK(r.det_residual < 1e-8);
    }
  }
}

TEST_CASE("worker count does not change results") {
  const DivFreeField v = builtin_field("vortex");
  const auto pts = sample_points(200);
  const FlowResult a = integrate_flow(v, 0.2, 16, pts, kOuter, 1);
  const FlowResult b = integrate_flow(v, 0.2, 16, pts, kOuter, 4);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(norm(a.y[i] - b.y[i]) == 0.0);
    CHECK(norm(a.F[i] - b.F[i]) == 0.0);
  }
}

TEST_CASE("recovery fields have finite nonlinear energy") {
  const HexMesh mesh = build_box_mesh(kUnit, 6);
  const MaterialModel model = MaterialModel::ogden({{1.0, 2.0}, {-0.2, -2.0}});
  for (const auto& name : builtin_field_names()) {
    for (double h : {0.2, 0.1}) {
      const Recovery rec = recovery_field(builtin_field(name), h, 32, mesh);
      const NonlinearMode mode{&model, h, IncompressibilityTolerance(1e-6)};
      const EnergyIntegral e = integrate_energy(mesh, mode, rec.qp_gradients);
      INFO(name << " h=" << h << " worst det violation " << e.worst_violation);
      CHECK(e.value.is_finite());
      CHECK(e.worst_violation <= 1e-8);
      // The Q1 interpolant keeps det = 1 only for fields whose recovery is affine along each component's own axis.
      if (name != "vortex") CHECK(integrate_energy(mesh, mode, rec.field).value.is_finite());
    }
  }
}

TEST_CASE("sampled fields") {
  const HexMesh grid = build_box_mesh(kOuter, 10);
  const DivFreeField stretch = builtin_field("stretch");
  const Sampled s = make_sampled(grid, NodalField::sample(grid, [&](const Vec3& x) { return stretch.value(x); }));
  CHECK(s.div_residual < 1e-12);
  const DivFreeField v(s);
  const Vec3 x{0.13, -0.21, 0.07};
  CHECK(norm(v.value(x) - stretch.value(x)) < 1e-12);
  CHECK(v.evaluable(x));
  CHECK_FALSE(v.evaluable({0.0, 0.0, 0.7}));
  CHECK_THROWS_AS(integrate_flow(v, 0.5, 8, {{0.6, 0.0, 0.0}}, kOuter), FlowExit);
}

TEST_CASE("mollifier kernel") {
  const Mollifier m(0.3);
  const GaussRule g = gauss_legendre(12);
  double mass = 0.0;
  for (std::size_t i = 0; i < g.x.size(); ++i) mass += 0.3 * g.w[i] * m(0.3 * g.x[i]);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  for (double t : {0.0, 0.1, 0.25, 0.3, 0.5}) {
    CHECK(m(t) >= 0.0);
    CHECK(m(t) == m(-t));
  }
  const auto w = m.discrete(0.1);
  double sum = w[0];
  for (std::size_t j = 1; j < w.size(); ++j) sum += 2.0 * w[j];
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(Mollifier(0.0), std::invalid_argument);
}

TEST_CASE("mollify") {
  const HexMesh grid = build_box_mesh(kOuter, 20);  // spacing 0.0625
  const Mollifier m(0.15);
  const Mollifier tiny(0.1);

  SUBCASE("constant field unchanged") {
    const Sampled s = make_sampled(grid, NodalField::sample(grid, [](const Vec3&) { return Vec3{1.0, -2.0, 0.5}; }));
    const Sampled out = mollify(s, m);
    for (std::size_t i = 0; i < grid.node_count(); ++i) CHECK(norm(out.values[i] - s.values[i]) < 1e-12);
    CHECK_THROWS_AS(mollify(s, tiny), std::invalid_argument);
  }
  SUBCASE("linear field unchanged in the interior") {
    const Vec3 w{0.3, -1.0, 0.7};
    const Sampled s = make_sampled(grid, NodalField::sample(grid, [&](const Vec3& x) { return cross(w, x); }));
    const Sampled out = mollify(s, m);
    CHECK(out.margin_layers == 2);
    for (int k = 2; k <= 18; ++k)
      for (int j = 2; j <= 18; ++j)
        for (int i = 2; i <= 18; ++i) {
          const std::size_t n = grid.node_index(i, j, k);
          CHECK(norm(out.values[n] - s.values[n]) < 1e-10);
        }
    CHECK(out.div_residual < 1e-12);
  }
  SUBCASE("noisy field norms do not grow") {
    SplitMix64 rng(5);
    const Sampled s = make_sampled(grid, NodalField::sample(grid, [&](const Vec3& x) {
                                     return Vec3{x[1] + 0.05 * rng.uniform(-1, 1), -x[0] + 0.05 * rng.uniform(-1, 1),
                                                 0.05 * rng.uniform(-1, 1)};
                                   }));
    const Sampled out = mollify(s, m);
    CHECK(sampled_w1_norm(out, out.margin_layers) <= sampled_w1_norm(s, 0));
    CHECK(out.div_residual <= s.div_residual);
  }
}
