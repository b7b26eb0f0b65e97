// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <string>

#include "traclin/experiments.hpp"
#include "traclin/rng.hpp"

using namespace traclin;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

int failures = 0;

void criterion(int k, const std::string& title, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = s <= limit_s;
  const bool ok = o.ok && in_time;
  if (!ok) ++failures;
  std::cout << "criterion " << k << " [" << (ok ? "PASS" : "FAIL") << "] " << title << ": " << o.detail << "; runtime "
            << fmt(s) << " s (limit " << fmt(limit_s) << " s)" << (in_time ? "" : " EXCEEDED") << std::endl;
}

Mat3 exp_series(const Mat3& a) {
  Mat3 term = Mat3::identity(), sum = Mat3::identity();
  for (int k = 1; k < 60; ++k) {
    term = (1.0 / k) * (term * a);
    sum += term;
  }
  return sum;
}

ScenarioConfig s1_config() {
  ScenarioConfig c;
  c.id = "S1";
  c.domain = Box{};
  c.n = 8;
  c.material = MaterialModel::quad_green();
  c.load = {VectorExpr::named("radial"), VectorExpr::zero()};
  c.h_list = {0.2, 0.1, 0.05, 0.025};
  return c;
}

const Check* find_check(const ScenarioResult& r, const std::string& prefix) {
  for (const Check& c : r.checks)
    if (c.name.rfind(prefix, 0) == 0) return &c;
  return nullptr;
}

}  // namespace

int main() {
  criterion(1, "Euler-Rodrigues orthogonality and series agreement", 1.0, [] {
    SplitMix64 rng(1);
    double orth = 0.0, series = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const Vec3 w = rng.unit3();
      const double theta = rng.uniform(-std::numbers::pi, std::numbers::pi);
      const Mat3 r = exp_skew(AxialVector{w}, theta).matrix();
      orth = std::max(orth, norm(transpose(r) * r - Mat3::identity()));
      series = std::max(series, norm(r - exp_series(theta * skew_of(w))));
    }
    return Outcome{orth <= 1e-12 && series <= 1e-10, "max |R^T R - I| " + fmt(orth) + ", max series error " + fmt(series)};
  });

  criterion(2, "QuadGreen quadratic form equals 4|sym B|^2", 5.0, [] {
    const ElasticityTensor c = hessian_identity(MaterialModel::quad_green(), Vec3{}).tensor;
    SplitMix64 rng(2);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      Mat3 b;
      for (int r = 0; r < 3; ++r)
        for (int s = 0; s < 3; ++s) b(r, s) = rng.normal();
      b = dev(b);
      const double want = 4.0 * ddot(sym(b), sym(b));
      worst = std::max(worst, std::abs(q_form(c, b).value() - want) / (1.0 + want));
    }
    return Outcome{worst <= 1e-6, "max relative deviation " + fmt(worst)};
  });

  criterion(3, "compatibility eigen-reduction vs sphere sampling", 5.0, [] {
    const PolyVec cubic{{Poly(std::vector<Monomial>{{1.0, {0, 1, 2}}}), Poly(std::vector<Monomial>{{-0.5, {3, 0, 0}}}),
                         Poly(std::vector<Monomial>{{0.25, {1, 1, 1}}})}};
    const std::vector<std::pair<LoadSpec, DomainDesc>> lib{
        {{VectorExpr::named("radial"), VectorExpr::zero()}, Box{}},
        {{VectorExpr::named("radial", {1.0, 0.3, 0.1, -0.2}), VectorExpr::zero()}, Box{{0.3, 0.1, -0.2}, {0.5, 0.75, 0.25}}},
        {{VectorExpr::named("radial"), VectorExpr::zero()}, Ball{1.0}},
        {{VectorExpr::zero(), VectorExpr::named("pressure", {1.0})}, Box{}},
        {{VectorExpr::zero(), VectorExpr::named("pressure", {-0.7})}, Ball{1.0}},
        {{VectorExpr::zero(), VectorExpr::named("pressure", {2.0})}, Cylinder{1.0, 1.0}},
        {{VectorExpr::zero(), VectorExpr::named("compress_lateral")}, Cylinder{1.0, 1.0}},
        {{VectorExpr::named("gradient_potential", {3e7, 0.05, -0.1, 0.0, 0.3, 0.25, 0.35}), VectorExpr::named("pressure", {1.0})},
         Box{}},
        {LoadSpec{}, Box{}},
        {{VectorExpr(cubic), VectorExpr::zero()}, Box{}},
    };
    double worst = 0.0;
    for (const auto& [spec, dom] : lib) {
      const CompatReport cr = compatibility_margin(spec, dom);
      const double oracle = compatibility_margin_oracle(spec, dom);
      worst = std::max(worst, std::abs(cr.margin - oracle) / (1.0 + norm(cr.moment)));
    }
    const double pm = compatibility_margin({VectorExpr::zero(), VectorExpr::named("pressure", {1.0})}, Box{}).margin;
    return Outcome{worst <= 1e-9 && std::abs(pm + 2.0) <= 1e-9,
                   "max scaled disagreement " + fmt(worst) + " over " + std::to_string(lib.size()) +
                       " loads, pressure margin " + fmt(pm)};
  });

  criterion(4, "flow recovery residual, order and flux bounds", 10.0, [] {
    const DivFreeField v = builtin_field("stretch");
    const HexMesh mesh = build_box_mesh(Box{}, 6);
    const RecoveryReport r64 = recovery_field(v, 0.1, 64, mesh).report;
    std::vector<double> ns, res;
    bool bounds = r64.flux2_ok() && r64.flux4_ok();
    for (int n : {4, 8, 16}) {
      const RecoveryReport r = recovery_field(v, 0.1, n, mesh).report;
      ns.push_back(n);
      res.push_back(r.det_residual);
      bounds = bounds && r.flux2_ok() && r.flux4_ok();
    }
    const double order = -fit_exponent(ns, res);
    return Outcome{r64.det_residual <= 1e-10 && order >= 3.8 && bounds,
                   "det residual " + fmt(r64.det_residual) + " at 64 substeps, fitted order " + fmt(order) +
                       ", flux2/flux4 " + (bounds ? "hold" : "violated")};
  });

  criterion(5, "S5 divergence slope -3 pi on the cylinder", 10.0, [] {
    ScenarioConfig c;
    c.id = "S5";
    c.domain = Cylinder{1.0, 1.0};
    c.load = {VectorExpr::zero(), VectorExpr::named("compress_lateral")};
    c.h_list = {0.1, 0.05, 0.025};
    const ScenarioResult r = run_S5_incompatible(c);
    const double slope = r.summary["configured"]["slope"].get<double>();
    const double want = -3.0 * std::numbers::pi;
    const Check* dec = find_check(r, "configured: values decrease");
    return Outcome{std::abs(slope - want) <= 0.01 * std::abs(want) && dec && dec->passed,
                   "slope " + fmt(slope) + " vs " + fmt(want)};
  });

  criterion(6, "S3 rotations: zero energy, strain exponent -1", 5.0, [] {
    ScenarioConfig c;
    c.id = "S3";
    c.n = 4;
    const ScenarioResult r = run_S3_rotations(c);
    const double k = r.summary["exponent"].get<double>();
    const Check* zero = find_check(r, "values zero");
    return Outcome{zero->passed && std::abs(k + 1.0) <= 0.05, zero->detail + ", exponent " + fmt(k)};
  });

  criterion(7, "min F^I = min E^I on strictly compatible loads", 120.0, [] {
    const HexMesh mesh = build_box_mesh(Box{}, 8);
    const TensorField tf(mesh, MaterialModel::quad_green());
    const std::vector<LoadSpec> loads{
        {VectorExpr::named("radial"), VectorExpr::zero()},
        {VectorExpr::named("gradient_potential", {3e7, 0.05, -0.1, 0.0, 0.3, 0.25, 0.35}), VectorExpr::named("pressure", {1.0})}};
    bool ok = true;
    std::string d;
    for (const LoadSpec& s : loads) {
      const LinearSolveReport e = minimize_E_I(mesh, tf, s);
      const LinearSolveReport f = minimize_F_I(mesh, tf, s);
      const double gap = std::abs(f.value - e.value);
      ok = ok && gap <= 1e-8 * (1.0 + std::abs(e.value)) && norm(f.w_star.w) <= 1e-5;
      d += (d.empty() ? "" : "; ") + std::string("gap ") + fmt(gap) + ", |w| " + fmt(norm(f.w_star.w));
    }
    return Outcome{ok, d};
  });

  criterion(8, "S1 convergence of nonlinear minima", 600.0, [] {
    const ScenarioResult r = run_S1_convergence(s1_config());
    const Check* tail = find_check(r, "gap nonincreasing");
    const Check* fin = find_check(r, "final gap");
    const Check* bnd = find_check(r, "strain norms bounded");
    return Outcome{tail->passed && fin->passed && bnd->passed,
                   "gaps " + tail->detail + "; final " + fin->detail + "; " + bnd->detail};
  });

  criterion(9, "penalty vs flow-parametrized minimum at h = 0.1", 600.0, [] {
    ScenarioConfig c = s1_config();
    c.h_list = {0.1};
    const double pen = run_S1_convergence(c).table.column("value")[0];
    c.solver.method = "flowparam";
    const double flo = run_S1_convergence(c).table.column("value")[0];
    const double rel = std::abs(pen - flo) / std::max(std::abs(pen), std::abs(flo));
    return Outcome{rel <= 5e-3, "penalty " + fmt(pen) + ", flow " + fmt(flo) + ", relative difference " + fmt(rel)};
  });

  criterion(10, "Korn and rigidity quotients", 120.0, [] {
    ProbeOptions a, b;
    a.seed = 7;
    b.seed = 8;
    const ScenarioResult ra = probe_inequalities(a), rb = probe_inequalities(b);
    const bool bounds = ra.all_passed() && rb.all_passed();
    auto spread = [&](const char* key) {
      const double x = ra.summary[key].get<double>(), y = rb.summary[key].get<double>();
      return std::abs(x - y) / std::min(x, y);
    };
    const double sk = spread("korn_max"), sr = spread("rigidity_max");
    return Outcome{bounds && sk <= 0.1 && sr <= 0.1,
                   std::string("all quotients >= 1 and finite: ") + (bounds ? "yes" : "no") + ", korn max " +
                       fmt(ra.summary["korn_max"].get<double>()) + " / " + fmt(rb.summary["korn_max"].get<double>()) +
                       " (spread " + fmt(sk) + "), rigidity max " + fmt(ra.summary["rigidity_max"].get<double>()) + " / " +
                       fmt(rb.summary["rigidity_max"].get<double>()) + " (spread " + fmt(sr) + ")"};
  });

  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail") << std::endl;
  return failures == 0 ? 0 : 1;
}
