#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "traclin/experiments.hpp"

using namespace traclin;
using nlohmann::json;

namespace {

std::filesystem::path scratch_dir() {
  const auto p = std::filesystem::temp_directory_path() / "traclin_test_experiments";
  std::filesystem::create_directories(p);
  return p;
}

std::string write_file(const std::string& name, const std::string& text) {
  const auto p = scratch_dir() / name;
  std::ofstream(p) << text;
  return p.string();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(TRACLIN_CLI) + " " + args + " > /dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

const Check& check_named(const ScenarioResult& r, const std::string& prefix) {
  for (const Check& c : r.checks)
    if (c.name.rfind(prefix, 0) == 0) return c;
  throw std::out_of_range("no check " + prefix);
}

ScenarioConfig small(const std::string& id) {
  ScenarioConfig c;
  c.id = id;
  c.n = 3;
  c.h_list = {0.2, 0.1, 0.05};
  return c;
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("defaults") {
    const ScenarioConfig c = parse_config(json::object());
    CHECK(c.id == "custom");
    CHECK(c.n == 8);
    CHECK(std::holds_alternative<Box>(c.domain));
    CHECK(c.h_list == std::vector<double>{0.2, 0.1, 0.05, 0.025});
    CHECK(c.solver.nonlinear.tol_opt == 1e-8);
    CHECK(c.solver.nonlinear.tol_det_soft == 1e-6);
    CHECK(c.load.f.is_zero());
  }
  SUBCASE("full document round trip") {
    const json j = json::parse(R"({
      "id": "S1",
      "domain": {"box": {"center": [0.1, 0, 0], "half_extents": [0.5, 0.25, 0.5]}, "n": 5},
      "material": {"model": "ogden", "terms": [[1.0, 2.0], [-0.3, -2.0]]},
      "load": {"f": {"poly": [[[1.0, 0, 2, 0], [-0.0208333, 0, 0, 0]], [], []]}, "g": {"named": "pressure", "params": [0.5]}, "scale": 2.0},
      "h_list": [0.3, 0.1],
      "solver": {"betas": [10, 100], "beta_max": 1e6, "method": "flowparam", "potential_degree": 3},
      "field": {"curl_of": [[], [], [[1.0, 1, 1, 0]]]},
      "rotation": {"axis": [1, 0, 0], "angle": 0.25},
      "seed": 11, "workers": 2,
      "output": {"dir": "out", "stem": "x"}
    })");
    const ScenarioConfig c = parse_config(j);
    CHECK(c.n == 5);
    CHECK(std::get<Box>(c.domain).half_extents[1] == 0.25);
    CHECK(c.solver.method == "flowparam");
    CHECK(c.solver.nonlinear.schedule.betas == std::vector<double>{10, 100});
    CHECK(c.seed == 11);
    CHECK(c.workers == 2);
    // Scaling multiplies both loads.
    const Vec3 x{0.2, 0.3, -0.1}, n{1, 0, 0};
    CHECK(c.scaled_load().f(x)[0] == doctest::Approx(2.0 * (0.09 - 0.0208333)));
    CHECK(c.scaled_load().g(x, n)[0] == doctest::Approx(1.0));
    const ScenarioConfig d = parse_config(to_json(c));
    CHECK(to_json(d) == to_json(c));
  }
  SUBCASE("other domains and materials") {
    CHECK(std::get<Ball>(parse_domain(json::parse(R"({"ball": {"radius": 2}})"))).radius == 2.0);
    CHECK(std::get<Cylinder>(parse_domain(json::parse(R"({"cylinder": {"height": 3}})"))).height == 3.0);
    const MaterialModel pw = parse_material(json::parse(
        R"({"model": "piecewise", "regions": [{"lo": [-1,-1,-1], "hi": [0,1,1], "material": {"model": "quad_green"}}]})"));
    CHECK_FALSE(pw.is_homogeneous());
    CHECK(to_json(parse_material(to_json(pw))) == to_json(pw));
  }
  SUBCASE("invalid documents") {
    for (const char* bad : {R"([1, 2])", R"({"id": "S9"})", R"({"h_list": [0.1, 0.2]})", R"({"h_list": [1.5]})",
                            R"({"h_list": []})", R"({"material": {"model": "neo"}})",
                            R"({"material": {"model": "ogden", "terms": [[1.0, -2.0]]}})",
                            R"({"load": {"f": {"named": "nope"}}})", R"({"load": {"f": {"named": "pressure"}}})",
                            R"({"solver": {"betas": [100, 10]}})", R"({"solver": {"method": "newton"}})",
                            R"({"domain": {"box": {"half_extents": [1, 0, 1]}}})", R"({"domain": {"n": 1}})",
                            R"({"field": "tornado"})", R"({"unknown_key": 1})", R"({"workers": 0})", R"({"substeps": 2})"}) {
      INFO(bad);
      CHECK_THROWS_AS(parse_config(json::parse(bad)), ConfigError);
    }
  }
  SUBCASE("files") {
    CHECK_THROWS_AS(load_config((scratch_dir() / "missing.json").string()), ConfigError);
    CHECK_THROWS_AS(load_config(write_file("broken.json", "{ not json")), ConfigError);
    const ScenarioConfig c = load_config(write_file("named.json", R"({"id": "S3"})"));
    CHECK(c.out_stem == "named");
    CHECK(c.out_dir == scratch_dir().string());
  }
}

TEST_CASE("scaled load expressions") {
  const Vec3 x{0.1, -0.2, 0.3}, n{0, 0, 1};
  for (const VectorExpr& e : {VectorExpr::named("radial"), VectorExpr::named("radial", {2.0, 0.1, 0.0, 0.0}),
                              VectorExpr::named("compress_lateral"), VectorExpr::named("pressure", {0.5}),
                              VectorExpr::named("gradient_potential", {3e7, 0.05, -0.1, 0.0, 0.3, 0.25, 0.35})}) {
    const Vec3 a = e(x, n), b = scaled(e, -1.5)(x, n);
    CHECK(norm(b + 1.5 * a) <= 1e-12 * (1.0 + norm(a)));
  }
  CHECK(scaled(VectorExpr::zero(), 3.0).is_zero());
}

TEST_CASE("tables and fits") {
  Table t;
  t.columns = {"name", "x"};
  t.add({"a", 0.1});
  t.add({"b", 1.0 / 3.0});
  CHECK(to_csv(t) == "name,x\na,0.10000000000000001\nb,0.33333333333333331\n");
  CHECK(to_json(t)[1]["x"].get<double>() == 1.0 / 3.0);
  CHECK_THROWS(t.add({1.0}));
  CHECK(t.column("x")[1] == 1.0 / 3.0);

  const std::vector<double> h{0.2, 0.1, 0.05};
  std::vector<double> y;
  for (double v : h) y.push_back(3.0 * std::pow(v, -1.5));
  CHECK(fit_exponent(h, y) == doctest::Approx(-1.5).epsilon(1e-12));
  const auto [a, b] = fit_line({1, 2, 3}, {5, 7, 9});
  CHECK(a == doctest::Approx(2.0));
  CHECK(b == doctest::Approx(3.0));
  CHECK_THROWS(fit_line({1}, {2}));
}

TEST_CASE("load requirements") {
  ScenarioConfig c = small("S1");
  c.load = {VectorExpr(PolyVec{{Poly::constant(1.0), Poly(), Poly()}}), VectorExpr::zero()};
  CHECK_THROWS_AS(require_loads(c, false), LoadConditionViolated);
  c.load = {VectorExpr::zero(), VectorExpr::named("pressure", {-1.0})};
  CHECK_NOTHROW(require_loads(c, false));
  CHECK_THROWS_AS(require_loads(c, true), LoadConditionViolated);
  CHECK_THROWS_AS(run_S1_convergence(c), LoadConditionViolated);

  const ScenarioResult r = check_loads(c);
  CHECK(check_named(r, "equilibrium").passed);
  CHECK_FALSE(check_named(r, "compatibility").passed);
  CHECK(r.summary["margin"].get<double>() == doctest::Approx(2.0));
}

TEST_CASE("S1 small sweeps") {
  SUBCASE("zero loads give zeros") {
    const ScenarioResult r = run_S1_convergence(small("S1"));
    for (const char* col : {"value", "gap", "strain_l2_err", "strain_l2_norm"})
      for (double v : r.table.column(col)) CHECK(v == 0.0);
  }
  SUBCASE("worker count does not change the table") {
    ScenarioConfig c = small("S1");
    c.load = {VectorExpr::named("radial"), VectorExpr::zero()};
    const ScenarioResult a = run_S1_convergence(c);
    c.workers = 3;
    const ScenarioResult b = run_S1_convergence(c);
    CHECK(to_csv(a.table) == to_csv(b.table));
    CHECK(a.table.rows.size() == 3);
    CHECK(check_named(a, "min F^I = min E^I").passed);
    CHECK(check_named(a, "final gap").passed);
  }
}

TEST_CASE("S2 recovery") {
  ScenarioConfig c = small("S2");
  c.load = {VectorExpr::named("radial"), VectorExpr::zero()};
  SUBCASE("rotation generator: strain-free target") {
    c.knobs.field = json::parse(R"({"linear_skew": [0, 0, 1]})");
    const ScenarioResult r = run_S2_recovery(c);
    CHECK(std::abs(r.summary["target_energy"].get<double>()) <= 1e-14);
  }
  SUBCASE("stretch field converges") {
    const ScenarioResult r = run_S2_recovery(c);
    const std::vector<double> d = r.table.column("diff");
    CHECK(std::abs(d[2]) < std::abs(d[1]));
    CHECK(std::abs(d[1]) < std::abs(d[0]));
    CHECK(check_named(r, "|F_h").passed);
  }
}

TEST_CASE("S3 rotations against Rodrigues") {
  ScenarioConfig c = small("S3");
  const double theta = 0.5;
  const ScenarioResult r = run_S3_rotations(c);
  const std::vector<double> h = r.table.column("h"), sn = r.table.column("strain_l2_norm"), v = r.table.column("value");
  for (std::size_t i = 0; i < h.size(); ++i) {
    // sym(R − I) = (1 − cos θ) W², |W²| = √2, unit volume.
    CHECK(sn[i] == doctest::Approx((1.0 - std::cos(theta)) * std::sqrt(2.0) / h[i]).epsilon(1e-12));
    CHECK(std::abs(v[i]) <= 1e-12);
  }
  CHECK(r.all_passed());
  c.knobs.rotation_angle = 0.0;
  const ScenarioResult z = run_S3_rotations(c);
  for (double s : z.table.column("strain_l2_norm")) CHECK(s == 0.0);
  CHECK(z.all_passed());
}

TEST_CASE("S4 drift on the ball") {
  ScenarioConfig c;
  c.id = "S4";
  c.domain = Ball{1.0};
  c.load = {VectorExpr::named("radial"), VectorExpr::zero()};
  c.h_list = {0.1, 0.05, 0.025, 0.0125};
  const ScenarioResult r = run_S4_drift(c);
  const std::vector<double> h = r.table.column("h"), v = r.table.column("value");
  for (std::size_t i = 0; i < h.size(); ++i) {
    // −L(v) with f = x: h⁻¹(1 − √(1 − h^{2α})) ∫_B (x₁² + x₂²), the integral being 8π/15.
    const double want = (1.0 - std::sqrt(1.0 - std::pow(h[i], 1.5))) / h[i] * 8.0 * std::numbers::pi / 15.0;
    CHECK(v[i] == doctest::Approx(want).epsilon(1e-10));
  }
  CHECK(check_named(r, "values decreasing").passed);
  CHECK(check_named(r, "gradient exponent").passed);
  CHECK(check_named(r, "y_j is a rotation").passed);
  c.knobs.alpha = 0.4;
  CHECK_THROWS_AS(run_S4_drift(c), ConfigError);
  c.knobs.alpha = 0.75;
  c.domain = Box{};
  CHECK_THROWS_AS(run_S4_drift(c), ConfigError);
}

TEST_CASE("S5 incompatible loads") {
  ScenarioConfig c;
  c.id = "S5";
  c.domain = Cylinder{1.0, 1.0};
  c.load = {VectorExpr::zero(), VectorExpr::named("compress_lateral")};
  c.h_list = {0.1, 0.05, 0.025};
  const ScenarioResult r = run_S5_incompatible(c);
  for (const auto& row : r.table.rows) {
    const double h = row[1].get<double>(), v = row[2].get<double>();
    const std::string var = row[0].get<std::string>();
    // Lateral surface 2π plus two caps of π/2 each; box pressure gives ±2|Ω|/h.
    const double want = var == "configured" ? -3.0 * std::numbers::pi / h : (var == "box_pressure_neg" ? -2.0 / h : 2.0 / h);
    CHECK(v == doctest::Approx(want).epsilon(1e-10));
  }
  CHECK(r.all_passed());
}

TEST_CASE("S6 rigid minimizers") {
  ScenarioConfig c = small("S6");
  c.n = 4;
  c.load = {VectorExpr::named("gradient_potential", {3e7, 0.05, -0.1, 0.0, 0.3, 0.25, 0.35}),
            VectorExpr::named("pressure", {1.0})};
  const ScenarioResult r = run_S6_rigid_minimizers(c);
  CHECK(r.all_passed());
  CHECK(r.table.rows[1][3].get<std::string>() == to_string(Compatibility::Marginal));
}

TEST_CASE("flow table") {
  ScenarioConfig c = small("custom");
  c.knobs.field = "shear";
  c.knobs.substeps = 32;
  const ScenarioResult r = run_flow(c);
  CHECK(r.table.rows.size() == 3);
  CHECK(r.all_passed());
  for (double d : r.table.column("det_residual")) CHECK(d <= 1e-10);
}

TEST_CASE("inequality probes") {
  ProbeOptions o;
  o.mesh_n = 3;
  const ScenarioResult a = probe_inequalities(o);
  CHECK(a.all_passed());
  CHECK(a.table.rows.size() == 50);
  for (double k : a.table.column("korn_quotient")) CHECK(k >= 1.0 - 1e-10);
  for (double k : a.table.column("rigidity_quotient")) CHECK(k >= 1.0 - 1e-10);
  o.workers = 4;
  CHECK(to_csv(probe_inequalities(o).table) == to_csv(a.table));
  o.seed = 8;
  CHECK(to_csv(probe_inequalities(o).table) != to_csv(a.table));
  o.fields = 10;
  CHECK_THROWS_AS(probe_inequalities(o), std::invalid_argument);
}

TEST_CASE("cli exit codes and outputs") {
  const std::string dir = (scratch_dir() / "cli").string();
  const std::string ok = write_file("s3.json", R"({"id": "S3", "domain": {"box": {}, "n": 3}, "h_list": [0.2, 0.1]})");
  CHECK(cli("run --config " + ok + " --out " + dir) == 0);
  CHECK(std::filesystem::exists(dir + "/s3.csv"));
  const json mirror = json::parse(std::ifstream(dir + "/s3.json"));
  CHECK(mirror["rows"].size() == 2);
  CHECK(mirror["rows"][0].contains("wallclock"));
  std::ifstream csv(dir + "/s3.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "h,value,strain_l2_norm,det_error");

  CHECK(cli("run --config " + write_file("bad.json", "{ nope") + " --out " + dir) == 2);
  CHECK(cli("run --config " + write_file("badh.json", R"({"h_list": [0.1, 0.2]})") + " --out " + dir) == 2);
  CHECK(cli("run") == 2);
  const std::string viol =
      write_file("viol.json", R"({"id": "S1", "domain": {"box": {}, "n": 3}, "load": {"g": {"named": "pressure", "params": [-1]}}})");
  CHECK(cli("run --config " + viol + " --out " + dir) == 4);
  CHECK(cli("check-loads --config " + viol + " --out " + dir) == 4);
  const std::string slow = write_file(
      "slow.json",
      R"({"id": "S1", "domain": {"box": {}, "n": 3}, "load": {"f": {"named": "radial"}}, "h_list": [0.2], "solver": {"max_iterations": 1}})");
  CHECK(cli("run --config " + slow + " --out " + dir) == 3);
  CHECK(cli("probe --mesh-n 3 --fields 50 --seed 7 --out " + dir) == 0);
  CHECK(std::filesystem::exists(dir + "/probe_n3_s7.csv"));
}
