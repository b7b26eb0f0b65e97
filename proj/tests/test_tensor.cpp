#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "traclin/rng.hpp"
#include "traclin/tensor.hpp"

using namespace traclin;

namespace {

// Independent oracle: truncated exponential series Σ (θW)^k / k!.
Mat3 series_exp(const Mat3& a, int terms = 30) {
  Mat3 sum = Mat3::identity();
  Mat3 term = Mat3::identity();
  for (int k = 1; k < terms; ++k) {
    term = (1.0 / k) * (term * a);
    sum += term;
  }
  return sum;
}

Eigen::Matrix3d to_eigen(const Mat3& m) {
  Eigen::Matrix3d e;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) e(i, j) = m(i, j);
  return e;
}

// |Σ − I| from an SVD, valid for det F > 0.
double svd_distance(const Mat3& f) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(to_eigen(f));
  return (svd.singularValues() - Eigen::Vector3d::Ones()).norm();
}

double max_abs_diff(const Mat3& a, const Mat3& b) {
  double d = 0.0;
  for (int k = 0; k < 9; ++k) d = std::max(d, std::abs(a.a[static_cast<std::size_t>(k)] - b.a[static_cast<std::size_t>(k)]));
  return d;
}

}  // namespace

TEST_CASE("exp_skew examples against the series") {
  const AxialVector e3{{0, 0, 1}};
  CHECK(max_abs_diff(exp_skew(e3, 0.0).matrix(), Mat3::identity()) == 0.0);
  const double pi = std::numbers::pi;
  const Mat3 r_pi = exp_skew(e3, pi).matrix();
  CHECK(max_abs_diff(r_pi, series_exp(pi * skew_of(e3))) < 1e-10);
  CHECK(max_abs_diff(r_pi, Mat3::diag(-1, -1, 1)) < 1e-12);
  const Mat3 r_half = exp_skew(e3, pi / 2).matrix();
  CHECK(max_abs_diff(r_half, series_exp(0.5 * pi * skew_of(e3))) < 1e-10);
  CHECK(max_abs_diff(r_half, Mat3::from_rows({0, -1, 0}, {1, 0, 0}, {0, 0, 1})) < 1e-12);
}

TEST_CASE("exp_skew rejects non-unit axial vectors") {
  CHECK_THROWS_AS(exp_skew(AxialVector{{0, 0, 1.1}}, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(Rotation(Mat3::diag(1, 1, -1)), std::domain_error);
}

TEST_CASE("exp_skew random samples") {
  SplitMix64 rng(11);
  for (int s = 0; s < 1000; ++s) {
    const Vec3 w = rng.unit3();
    const double theta = rng.uniform(-4.0, 4.0);
    const Mat3 r = exp_skew(AxialVector{w}, theta).matrix();
    CHECK(orthogonality_defect(r) <= 1e-12);
    CHECK(max_abs_diff(r, series_exp(theta * skew_of(w))) <= 1e-10);
  }
}

TEST_CASE("skew_of and axial vectors") {
  SplitMix64 rng(3);
  for (int s = 0; s < 50; ++s) {
    const Vec3 w = rng.normal3();
    const Vec3 x = rng.normal3();
    const Mat3 W = skew_of(w);
    CHECK(max_abs_diff(W, -transpose(W)) == 0.0);
    CHECK(ddot(W, W) == doctest::Approx(2.0 * dot(w, w)).epsilon(1e-14));
    CHECK(norm(W * x - cross(w, x)) < 1e-14);
    const Vec3 u = (1.0 / norm(w)) * w;
    const Mat3 U2 = skew_of(u) * skew_of(u);
    CHECK(ddot(U2, U2) == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(norm(axial_of(W) - w) < 1e-14);
  }
}

TEST_CASE("sym/skw split is orthogonal") {
  SplitMix64 rng(5);
  for (int s = 0; s < 20; ++s) {
    Mat3 a;
    for (auto& x : a.a) x = rng.normal();
    CHECK(ddot(a, a) == doctest::Approx(ddot(sym(a), sym(a)) + ddot(skw(a), skw(a))).epsilon(1e-14));
  }
}

TEST_CASE("dist_SO3 examples") {
  CHECK(dist_SO3(Mat3::identity()).value == doctest::Approx(0.0));
  CHECK(dist_SO3(exp_skew(AxialVector{{1, 0, 0}}, 0.7).matrix()).value < 1e-12);
  const Mat3 f = Mat3::diag(2, 1, 0.5);
  CHECK(dist_SO3(f).value == doctest::Approx(svd_distance(f)).epsilon(1e-12));
  CHECK(dist_SO3(f).value == doctest::Approx(1.118033988749895).epsilon(1e-12));
  CHECK_FALSE(dist_SO3(f).sampled_fallback);
}

TEST_CASE("dist_SO3 is left-rotation invariant and matches SVD") {
  SplitMix64 rng(17);
  for (int s = 0; s < 200; ++s) {
    Mat3 f;
    for (auto& x : f.a) x = rng.normal();
    if (det(f) <= 0.05) continue;
    const Mat3 r = random_rotation(rng);
    CHECK(std::abs(dist_SO3(r * f).value - dist_SO3(f).value) <= 1e-10);
    CHECK(std::abs(dist_SO3(f).value - svd_distance(f)) <= 1e-10);
  }
}

TEST_CASE("dist_SO3 falls back to sampling for reflections") {
  const auto d = dist_SO3(Mat3::diag(1, 1, -1));
  CHECK(d.sampled_fallback);
  // Nearest rotation to diag(1,1,−1) is at distance 2 (flip two signs would cost more).
  CHECK(d.value == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("g_p values and shape") {
  const GrowthFunction g15(1.5), g2(2.0);
  CHECK(g15(1.0) == doctest::Approx(1.0));
  CHECK(g2(3.7) == doctest::Approx(13.69).epsilon(1e-14));
  CHECK(g15(2.0) == doctest::Approx((4.0 * std::sqrt(2.0) - 2.0) / 1.5 + 1.0).epsilon(1e-14));
  CHECK(g15(2.0) == doctest::Approx(3.437901).epsilon(1e-6));
  CHECK_THROWS(g15(-0.1));
  CHECK_THROWS(GrowthFunction(1.0));
  CHECK_THROWS(GrowthFunction(2.5));

  for (double p : {1.2, 1.5, 2.0}) {
    const GrowthFunction g(p);
    const double dt = 1e-3;
    double prev = -1.0;
    for (int i = 1; i < 5000; ++i) {
      const double t = i * dt;
      const double second = g(t + dt) - 2.0 * g(t) + g(t - dt);
      CHECK(second >= -1e-12);
      CHECK(g(t) >= prev);
      prev = g(t);
    }
    // C¹ at t = 1.
    const double eps = 1e-7;
    CHECK((g(1.0 + eps) - g(1.0)) / eps == doctest::Approx((g(1.0) - g(1.0 - eps)) / eps).epsilon(1e-5));
    for (int i = 1; i <= 40; ++i)
      for (int j = 1; j <= 40; ++j) {
        const double a = 0.1 * i, t = 0.1 * j;
        CHECK(2.0 * g(a * t) >= std::min(a * a, std::pow(a, p)) * g(t) - 1e-12);
      }
  }
}

TEST_CASE("isochoric") {
  CHECK(max_abs_diff(isochoric(Mat3::identity()), Mat3::identity()) < 1e-15);
  CHECK(max_abs_diff(isochoric(2.0 * Mat3::identity()), Mat3::identity()) < 1e-15);
  const Mat3 f = isochoric(Mat3::diag(4, 1, 1));
  CHECK(max_abs_diff(f, (1.0 / std::cbrt(4.0)) * Mat3::diag(4, 1, 1)) < 1e-14);
  CHECK(std::abs(det(f) - 1.0) < 1e-12);
  CHECK_THROWS(isochoric(Mat3::diag(1, 1, -1)));
}

TEST_CASE("sqrt_spd") {
  CHECK(max_abs_diff(sqrt_spd(Mat3::identity()), Mat3::identity()) < 1e-14);
  CHECK(max_abs_diff(sqrt_spd(Mat3::diag(4, 9, 16)), Mat3::diag(2, 3, 4)) < 1e-13);
  SplitMix64 rng(23);
  for (int s = 0; s < 50; ++s) {
    const Mat3 r = random_rotation(rng);
    const Mat3 c = transpose(r) * Mat3::diag(1, 2, 3) * r;
    const Mat3 expect = transpose(r) * Mat3::diag(1, std::sqrt(2.0), std::sqrt(3.0)) * r;
    const Mat3 s_c = sqrt_spd(c);
    CHECK(max_abs_diff(s_c, expect) < 1e-10);
    CHECK(max_abs_diff(s_c * s_c, c) < 1e-10);
  }
  CHECK_THROWS(sqrt_spd(Mat3::diag(1, -1, 1)));
  CHECK_THROWS(sqrt_spd(Mat3::from_rows({1, 1, 0}, {0, 1, 0}, {0, 0, 1})));
}
