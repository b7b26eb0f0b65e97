#include <cmath>

#include "doctest.h"
#include "traclin/energy.hpp"
#include "traclin/rng.hpp"

using namespace traclin;

namespace {

const Vec3 kOrigin{};

Mat3 random_traceless(SplitMix64& rng) {
  Mat3 b;
  for (auto& x : b.a) x = rng.normal();
  return b - (trace(b) / 3.0) * Mat3::identity();
}

Mat3 random_det_one(SplitMix64& rng, double scale) {
  Mat3 f = Mat3::identity();
  for (auto& x : f.a) x += scale * rng.normal();
  if (det(f) <= 0.0) f = Mat3::identity();
  return isochoric(f);
}

// Direct oracle for Ogden energy: Σ μ/α (Σ σ_i^α − 3) with σ_i² the eigenvalues of FᵀF.
double ogden_oracle(const std::vector<OgdenTerm>& terms, const Mat3& f) {
  const Vec3 lam = sym_eig(transpose(f) * f).values;
  double s = 0.0;
  for (const auto& t : terms) {
    double tr = 0.0;
    for (int k = 0; k < 3; ++k) tr += std::pow(std::sqrt(lam[k]), t.alpha);
    s += t.mu / t.alpha * (tr - 3.0);
  }
  return s;
}

}  // namespace

TEST_CASE("ExtendedScalar arithmetic") {
  const auto a = ExtendedScalar::finite(2.0);
  const auto inf = ExtendedScalar::infinity();
  CHECK((a + a).value() == 4.0);
  CHECK((a + inf).is_infinite());
  CHECK((3.0 * a).value() == 6.0);
  CHECK((0.0 * inf).is_infinite());
  CHECK_THROWS_AS(inf.value(), std::domain_error);
  CHECK_THROWS(-1.0 * a);
  CHECK(to_string(inf) == "+inf");
}

TEST_CASE("material model validation") {
  CHECK_THROWS(MaterialModel::ogden({{2.0, -1.0}}));
  CHECK_THROWS(MaterialModel::ogden({}));
  CHECK_NOTHROW(MaterialModel::ogden({{-1.0, -2.0}}));
  CHECK_THROWS(IncompressibilityTolerance(0.0));
}

TEST_CASE("eval_WI examples") {
  const auto qg = MaterialModel::quad_green();
  const auto og = MaterialModel::ogden({{2.0, 2.0}});
  CHECK(eval_WI(qg, kOrigin, exp_skew(AxialVector{{0, 1, 0}}, 1.1).matrix()).value() < 1e-28);
  CHECK(eval_WI(og, kOrigin, Mat3::diag(2, 0.5, 1)).value() == doctest::Approx(2.25).epsilon(1e-14));
  CHECK(eval_WI(og, kOrigin, 2.0 * Mat3::identity()).is_infinite());
  CHECK(eval_WI(qg, kOrigin, 2.0 * Mat3::identity()).is_infinite());
}

TEST_CASE("eval_W examples") {
  const auto qg = MaterialModel::quad_green();
  const auto og = MaterialModel::ogden({{2.0, 2.0}});
  CHECK(eval_W(qg, kOrigin, Mat3::identity()) == doctest::Approx(0.0));
  CHECK(std::abs(eval_W(qg, kOrigin, 3.0 * Mat3::identity())) < 1e-28);
  CHECK(eval_W(og, kOrigin, Mat3::diag(2, 0.5, 1)) == doctest::Approx(2.25).epsilon(1e-14));
  CHECK_THROWS(eval_W(qg, kOrigin, Mat3::diag(1, 1, -1)));
}

TEST_CASE("eval_green examples") {
  const auto qg = MaterialModel::quad_green();
  const auto og = MaterialModel::ogden({{2.0, 2.0}});
  CHECK(eval_green(og, kOrigin, Mat3::zero()) == doctest::Approx(0.0));
  const Mat3 g = Mat3::diag(1.5, 0.0, -0.375);
  CHECK(det(Mat3::identity() + 2.0 * g) == doctest::Approx(1.0));
  // F = √(I+2G) = diag(2,1,½) already has det 1, so W = |C − I|² = 9 + 0.5625.
  CHECK(eval_green(qg, kOrigin, g) == doctest::Approx(9.5625).epsilon(1e-12));
  CHECK(eval_green(qg, kOrigin, g) == doctest::Approx(eval_W(qg, kOrigin, Mat3::diag(2, 1, 0.5))).epsilon(1e-12));
  const Mat3 g2 = 0.5 * (Mat3::diag(4, 0.25, 1) - Mat3::identity());
  CHECK(eval_green(og, kOrigin, g2) == doctest::Approx(2.25).epsilon(1e-12));
  CHECK_THROWS(eval_green(og, kOrigin, Mat3::diag(-1, 0, 0)));
}

TEST_CASE("frame indifference and W^I vs W") {
  SplitMix64 rng(101);
  const auto og = MaterialModel::ogden({{1.3, 2.5}, {-0.2, -1.5}});
  const auto qg = MaterialModel::quad_green();
  for (int s = 0; s < 500; ++s) {
    Mat3 f = Mat3::identity();
    for (auto& x : f.a) x += 0.4 * rng.normal();
    if (det(f) <= 0.1) continue;
    const Mat3 r = random_rotation(rng);
    for (const auto* m : {&og, &qg}) {
      const double w = eval_W(*m, kOrigin, f);
      CHECK(std::abs(eval_W(*m, kOrigin, r * f) - w) <= 1e-10 * (1.0 + w));
    }
    const Mat3 fi = isochoric(f);
    const auto wi = eval_WI(og, kOrigin, fi);
    REQUIRE(wi.is_finite());
    CHECK(wi.value() >= eval_W(og, kOrigin, fi) - 1e-12);
    CHECK(std::abs(wi.value() - eval_W(og, kOrigin, fi)) <= 1e-12 * (1.0 + wi.value()));
    CHECK(eval_W(og, kOrigin, fi) == doctest::Approx(ogden_oracle({{1.3, 2.5}, {-0.2, -1.5}}, fi)).epsilon(1e-11));
  }
}

TEST_CASE("eval_dW matches finite differences of eval_W") {
  SplitMix64 rng(7);
  const auto og = MaterialModel::ogden({{1.0, 3.0}});
  const auto qg = MaterialModel::quad_green();
  for (int s = 0; s < 20; ++s) {
    Mat3 f = Mat3::identity();
    for (auto& x : f.a) x += 0.2 * rng.normal();
    for (const auto* m : {&og, &qg}) {
      const Mat3 d = eval_dW(*m, kOrigin, f);
      for (int k = 0; k < 9; ++k) {
        Mat3 e;
        e.a[static_cast<std::size_t>(k)] = 1e-6;
        const double fd = (eval_W(*m, kOrigin, f + e) - eval_W(*m, kOrigin, f - e)) / 2e-6;
        CHECK(d.a[static_cast<std::size_t>(k)] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
      }
    }
  }
}

TEST_CASE("hessian_identity: QuadGreen gives 4|sym B|²") {
  const auto rep = hessian_identity(MaterialModel::quad_green(), kOrigin);
  CHECK(rep.richardson_residual < 1e-5);
  SplitMix64 rng(13);
  for (int s = 0; s < 200; ++s) {
    const Mat3 b = random_traceless(rng);
    const Mat3 sb = sym(b);
    const auto q = q_form(rep.tensor, b);
    REQUIRE(q.is_finite());
    CHECK(std::abs(q.value() - 4.0 * ddot(sb, sb)) <= 1e-6 * (1.0 + ddot(sb, sb)));
    CHECK(q_form(rep.tensor, sb).value() == doctest::Approx(q.value()).epsilon(1e-12));
  }
  CHECK(q_form(rep.tensor, Mat3::diag(1, -1, 0)).value() == doctest::Approx(8.0).epsilon(1e-6));
  CHECK(q_form(rep.tensor, Mat3::identity()).is_infinite());
  const Mat3 w = Mat3::outer({1, 0, 0}, {0, 1, 0}) - Mat3::outer({0, 1, 0}, {1, 0, 0});
  CHECK(std::abs(q_form(rep.tensor, w).value()) < 1e-6);
}

TEST_CASE("hessian_identity: Ogden shear modulus μα/2") {
  for (const OgdenTerm t : {OgdenTerm{2.0, 2.0}, OgdenTerm{0.7, 3.5}, OgdenTerm{-1.0, -2.0}}) {
    const auto rep = hessian_identity(MaterialModel::ogden({t}), kOrigin);
    SplitMix64 rng(29);
    double c_min = 1e300;
    for (int s = 0; s < 100; ++s) {
      const Mat3 b = random_traceless(rng);
      const double sb2 = ddot(sym(b), sym(b));
      const double q = q_form(rep.tensor, b).value();
      CHECK(q == doctest::Approx(0.5 * t.mu * t.alpha * sb2).epsilon(1e-6));
      c_min = std::min(c_min, q / sb2);
    }
    CHECK(c_min > 0.0);
  }
}

TEST_CASE("hessian annihilates the volumetric direction") {
  const auto rep = hessian_identity(MaterialModel::ogden({{1.0, 2.0}}), kOrigin);
  CHECK(norm(rep.tensor.apply(Mat3::identity())) < 1e-6);
}

TEST_CASE("piecewise models resolve by region") {
  auto soft = std::make_shared<const MaterialModel>(MaterialModel::ogden({{1.0, 2.0}}));
  auto hard = std::make_shared<const MaterialModel>(MaterialModel::ogden({{5.0, 2.0}}));
  const MaterialModel pc(PiecewiseConstant{{{AxisBox{{-1, -1, -1}, {0, 1, 1}}, soft}, {AxisBox{{0, -1, -1}, {1, 1, 1}}, hard}}});
  const Mat3 f = Mat3::diag(2, 0.5, 1);
  CHECK(eval_W(pc, {-0.5, 0, 0}, f) == doctest::Approx(eval_W(*soft, kOrigin, f)));
  CHECK(eval_W(pc, {0.5, 0, 0}, f) == doctest::Approx(eval_W(*hard, kOrigin, f)));
  CHECK_THROWS_AS(eval_W(pc, {2, 0, 0}, f), std::domain_error);
}

TEST_CASE("coercivity_probe") {
  const GrowthFunction g2(2.0);
  const auto qg = coercivity_probe(MaterialModel::quad_green(), g2, 1000, 1);
  CHECK(qg.violations.empty());
  CHECK(qg.constant >= 1.0);
  const auto og = coercivity_probe(MaterialModel::ogden({{2.0, 2.0}}), g2, 1000, 1);
  CHECK(og.violations.empty());
  CHECK(og.constant > 0.0);
  CHECK_THROWS(coercivity_probe(MaterialModel::quad_green(), g2, 10, 1));
}

TEST_CASE("det-one samples stay on the constraint") {
  SplitMix64 rng(2);
  for (int s = 0; s < 100; ++s) CHECK(eval_WI(MaterialModel::quad_green(), kOrigin, random_det_one(rng, 0.3)).is_finite());
}
