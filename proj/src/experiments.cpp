#include "traclin/experiments.hpp"

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "traclin/parallel.hpp"
#include "traclin/rng.hpp"

namespace traclin {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

Check make_check(std::string name, bool ok, std::string detail) { return {std::move(name), ok, std::move(detail)}; }

// Tail of length min(3, size): each entry ≤ its predecessor.
bool tail_nonincreasing(const std::vector<double>& v) {
  const std::size_t start = v.size() >= 3 ? v.size() - 3 : 0;
  for (std::size_t i = start + 1; i < v.size(); ++i)
    if (!(v[i] <= v[i - 1])) return false;
  return true;
}

std::string list(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + fmt(x);
  return s;
}

NodalField difference(const NodalField& a, const NodalField& b) {
  NodalField d = b;
  d *= -1.0;
  d += a;
  return d;
}

// |skw(√h · mean ∇v)|
double skew_drift(const HexMesh& mesh, const NodalField& v, double h) {
  Mat3 mean = Mat3::zero();
  double vol = 0.0;
  for (std::size_t e = 0; e < mesh.element_count(); ++e)
    for (int q = 0; q < HexMesh::kQp; ++q) {
      mean += mesh.qp_weight() * gradient(mesh, v, e, q);
      vol += mesh.qp_weight();
    }
  return norm(skw((std::sqrt(h) / vol) * mean));
}

NonlinearReport solve_nonlinear(const ScenarioConfig& c, const HexMesh& mesh, const LoadSpec& spec, double h) {
  NonlinearOptions o = c.solver.nonlinear;
  o.workers = 1;
  NonlinearReport r = c.solver.method == "flowparam"
                          ? minimize_nonlinear_flowparam(mesh, c.material, spec, h, {}, o)
                          : minimize_nonlinear(mesh, c.material, spec, h, NodalField(mesh.node_count()), o);
  if (!r.converged) {
    std::ostringstream os;
    os << "nonlinear minimization at h = " << h << " did not converge: " << r.message << " (det violation "
       << r.det_violation << ")";
    throw SolverNonconvergence(os.str(), r.grad_norm);
  }
  return r;
}

// h⁻²∫W^I(I + hG) over the quadrature set for a constant gradient G.
double constant_gradient_energy(const MaterialModel& m, const QuadratureSet& q, const Mat3& g, double h) {
  double s = 0.0;
  for (const VolumePoint& p : q.volume) {
    const ExtendedScalar w = eval_WI(m, p.x, Mat3::identity() + h * g);
    if (w.is_infinite()) return std::numeric_limits<double>::infinity();
    s += p.w * w.value();
  }
  return s / (h * h);
}

Mat3 polar_rotation(const Mat3& f) { return f * inverse(sqrt_spd(transpose(f) * f)); }

}  // namespace

void Table::add(std::vector<json> row) {
  if (row.size() != columns.size()) throw std::logic_error("table row has the wrong number of cells");
  rows.push_back(std::move(row));
}

std::vector<double> Table::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::out_of_range("no column '" + name + "'");
  const auto k = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r[k].get<double>());
  return out;
}

std::string to_csv(const Table& t) {
  std::string s;
  for (std::size_t i = 0; i < t.columns.size(); ++i) s += (i ? "," : "") + t.columns[i];
  s += '\n';
  char buf[64];
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) s += ',';
      if (r[i].is_number()) {
        std::snprintf(buf, sizeof buf, "%.17g", r[i].get<double>());
        s += buf;
      } else if (r[i].is_boolean()) {
        s += r[i].get<bool>() ? "true" : "false";
      } else {
        s += r[i].get<std::string>();
      }
    }
    s += '\n';
  }
  return s;
}

json to_json(const Table& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    json o = json::object();
    for (std::size_t i = 0; i < r.size(); ++i) o[t.columns[i]] = r[i];
    rows.push_back(o);
  }
  return rows;
}

bool ScenarioResult::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

json to_json(const ScenarioResult& r, const ScenarioConfig& c) {
  json rows = to_json(r.table);
  for (std::size_t i = 0; i < rows.size() && i < r.wallclock.size(); ++i) rows[i]["wallclock"] = r.wallclock[i];
  json checks = json::array();
  for (const Check& k : r.checks) checks.push_back({{"name", k.name}, {"passed", k.passed}, {"detail", k.detail}});
  return json{{"scenario", r.id},
              {"columns", r.table.columns},
              {"rows", rows},
              {"checks", checks},
              {"all_checks_passed", r.all_passed()},
              {"summary", r.summary},
              {"wallclock_total", r.total_seconds},
              {"config", to_json(c)}};
}

std::vector<std::string> write_outputs(const ScenarioResult& r, const ScenarioConfig& c) {
  std::filesystem::create_directories(c.out_dir);
  const std::filesystem::path base = std::filesystem::path(c.out_dir) / c.out_stem;
  const std::string csv = base.string() + ".csv", js = base.string() + ".json";
  std::ofstream(csv) << to_csv(r.table);
  std::ofstream(js) << to_json(r, c).dump(2) << '\n';
  return {csv, js};
}

CompatReport require_loads(const ScenarioConfig& c, bool strict) {
  const LoadSpec spec = c.scaled_load();
  EquilibriumReport eq;
  CompatReport cr;
  if (std::holds_alternative<Box>(c.domain)) {
    const HexMesh mesh = c.mesh();
    eq = check_equilibrium(spec, mesh);
    cr = compatibility_margin(spec, mesh);
  } else {
    eq = check_equilibrium(spec, c.domain);
    cr = compatibility_margin(spec, c.domain);
  }
  if (!eq.pass) {
    std::ostringstream os;
    os << "loads are not equilibrated: resultant " << norm(eq.resultant) << ", torque " << norm(eq.torque);
    throw LoadConditionViolated(os.str());
  }
  if (strict && cr.classification == Compatibility::Violating) {
    std::ostringstream os;
    os << "loads violate the compatibility condition: margin " << cr.margin << " along axis (" << cr.worst_axis[0]
       << ", " << cr.worst_axis[1] << ", " << cr.worst_axis[2] << ")";
    throw LoadConditionViolated(os.str());
  }
  return cr;
}

double fit_exponent(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_line(lx, ly).first;
}

std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need at least two points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
  const double a = sxy / sxx;
  return {a, my - a * mx};
}

// ---------------------------------------------------------------------------

ScenarioResult run_S1_convergence(const ScenarioConfig& c) {
  const auto t0 = Clock::now();
  const HexMesh mesh = c.mesh();
  const LoadSpec spec = c.scaled_load();
  const CompatReport cr = require_loads(c, true);
  const TensorField tf(mesh, c.material);
  const LinearSolveReport e = minimize_E_I(mesh, tf, spec, c.solver.linear);
  const LinearSolveReport f = minimize_F_I(mesh, tf, spec, c.solver.linear);
  const double star_norm = strain_l2(mesh, e.v_star);

  const std::size_t nh = c.h_list.size();
  std::vector<NonlinearReport> reps(nh);
  std::vector<double> secs(nh);
  parallel_for(nh, c.workers, [&](std::size_t i) {
    const auto t = Clock::now();
    reps[i] = solve_nonlinear(c, mesh, spec, c.h_list[i]);
    secs[i] = seconds_since(t);
  });

  ScenarioResult r;
  r.id = c.id;
  r.table.columns = {"h", "value", "gap", "strain_l2_err", "strain_l2_norm", "det_violation", "iterations", "drift"};
  for (std::size_t i = 0; i < nh; ++i) {
    const NonlinearReport& n = reps[i];
    const double h = c.h_list[i];
    r.table.add({h, n.value, std::abs(n.value - e.value), strain_l2(mesh, difference(n.v_h, e.v_star)),
                 strain_l2(mesh, n.v_h), n.det_violation, n.iterations, skew_drift(mesh, n.v_h, h)});
  }
  r.wallclock = secs;

  const std::vector<double> gap = r.table.column("gap"), err = r.table.column("strain_l2_err"),
                            sn = r.table.column("strain_l2_norm"), val = r.table.column("value");
  const double scale = 1.0 + std::abs(e.value);
  const double m_bound = 2.0 * star_norm;
  r.checks.push_back(make_check("min F^I = min E^I", std::abs(f.value - e.value) <= 1e-8 * scale,
                                "min E " + fmt(e.value) + ", min F " + fmt(f.value) + ", |w| " + fmt(norm(f.w_star.w))));
  r.checks.push_back(make_check("gap nonincreasing over the tail", tail_nonincreasing(gap), list(gap)));
  r.checks.push_back(make_check("strain error nonincreasing over the tail", tail_nonincreasing(err), list(err)));
  r.checks.push_back(make_check("final gap within tolerance", gap.back() <= c.knobs.gap_tolerance * scale,
                                fmt(gap.back()) + " <= " + fmt(c.knobs.gap_tolerance * scale)));
  const double max_sn = *std::max_element(sn.begin(), sn.end());
  r.checks.push_back(make_check("strain norms bounded", max_sn <= m_bound + 1e-14,
                                "max " + fmt(max_sn) + ", bound 2|E(v*)| = " + fmt(m_bound)));
  const bool finite = std::all_of(val.begin(), val.end(), [](double x) { return std::isfinite(x); });
  r.checks.push_back(make_check("values finite and bounded below", finite,
                                "min value " + fmt(*std::min_element(val.begin(), val.end()))));

  r.summary = {{"min_E", e.value},
               {"min_F", f.value},
               {"w_star", {f.w_star.w[0], f.w_star.w[1], f.w_star.w[2]}},
               {"strain_l2_star", star_norm},
               {"margin", cr.margin},
               {"classification", to_string(cr.classification)},
               {"method", c.solver.method}};
  r.total_seconds = seconds_since(t0);
  return r;
}

ScenarioResult run_S2_recovery(const ScenarioConfig& c) {
  const auto t0 = Clock::now();
  const HexMesh mesh = c.mesh();
  const LoadSpec spec = c.scaled_load();
  require_loads(c, false);
  const DivFreeField v = parse_field(c.knobs.field);
  const TensorField tf(mesh, c.material);
  const std::vector<double> load = load_vector(spec, mesh);

  // Oracle: quadratic energy of the exact gradient at the element quadrature points minus the nodal load.
  double target = 0.0;
  for (std::size_t e = 0; e < mesh.element_count(); ++e)
    for (int q = 0; q < HexMesh::kQp; ++q) {
      Vec3 val;
      Mat3 g;
      v.value_and_gradient(mesh.qp_position(e, q), val, g);
      const ExtendedScalar qf = q_form(tf.at(e, q), sym(g));
      if (qf.is_infinite()) throw SolverNonconvergence("S2: target field is not divergence free", trace(g));
      target += mesh.qp_weight() * qf.value();
    }
  target -= eval_L(load, NodalField::sample(mesh, [&](const Vec3& x) { return v.value(x); }));

  const std::size_t nh = c.h_list.size();
  std::vector<std::vector<json>> rows(nh);
  std::vector<double> secs(nh);
  const IncompressibilityTolerance tol(c.solver.nonlinear.tol_det_soft);
  parallel_for(nh, c.workers, [&](std::size_t i) {
    const auto t = Clock::now();
    const double h = c.h_list[i];
    const Recovery rec = recovery_field(v, h, c.knobs.substeps, mesh, 1, false);
    const EnergyIntegral ei = integrate_energy(mesh, NonlinearMode{&c.material, h, tol}, rec.qp_gradients);
    if (ei.value.is_infinite()) {
      std::ostringstream os;
      os << "S2: recovery at h = " << h << " violates det = 1 by " << ei.worst_violation;
      throw SolverNonconvergence(os.str(), ei.worst_violation);
    }
    const double value = ei.value.value() - eval_L(load, rec.field);
    rows[i] = {h, c.knobs.substeps, value, target, value - target, rec.report.det_residual, rec.report.sup_err_v};
    secs[i] = seconds_since(t);
  });

  ScenarioResult r;
  r.id = c.id;
  r.table.columns = {"h", "substeps", "value", "target_energy", "diff", "det_residual", "sup_err_v"};
  for (auto& row : rows) r.table.add(std::move(row));
  r.wallclock = secs;
  std::vector<double> diff = r.table.column("diff");
  for (double& d : diff) d = std::abs(d);
  r.checks.push_back(make_check("|F_h(v_h) - E(v)| nonincreasing over the tail", tail_nonincreasing(diff), list(diff)));
  r.checks.push_back(make_check("final difference within 1e-3 (1 + |E(v)|)", diff.back() <= 1e-3 * (1.0 + std::abs(target)),
                                fmt(diff.back())));
  r.summary = {{"target_energy", target}, {"field", c.knobs.field}};
  r.total_seconds = seconds_since(t0);
  return r;
}

ScenarioResult run_S3_rotations(const ScenarioConfig& c) {
  const auto t0 = Clock::now();
  const HexMesh mesh = c.mesh();
  const LoadSpec spec = c.scaled_load();
  const Vec3 axis = (1.0 / norm(c.knobs.rotation_axis)) * c.knobs.rotation_axis;
  const Mat3 rot = exp_skew(AxialVector{axis}, c.knobs.rotation_angle).matrix();
  const std::vector<double> load = load_vector(spec, mesh);

  ScenarioResult r;
  r.id = c.id;
  r.table.columns = {"h", "value", "strain_l2_norm", "det_error"};
  for (double h : c.h_list) {
    const auto t = Clock::now();
    const NodalField v = NodalField::sample(mesh, [&](const Vec3& x) { return (1.0 / h) * (rot * x - x); });
    const EnergyIntegral ei = integrate_energy(mesh, NonlinearMode{&c.material, h, IncompressibilityTolerance{}}, v);
    const double value = ei.value.value_or(std::numeric_limits<double>::infinity()) - eval_L(load, v);
    r.table.add({h, value, strain_l2(mesh, v), ei.worst_violation});
    r.wallclock.push_back(seconds_since(t));
  }
  const std::vector<double> hs = r.table.column("h"), val = r.table.column("value"), sn = r.table.column("strain_l2_norm");
  double worst = 0.0;
  for (double x : val) worst = std::max(worst, std::abs(x));
  r.checks.push_back(make_check("values zero within 1e-12", worst <= 1e-12, "max |value| " + fmt(worst)));
  if (sn.front() == 0.0) {
    const bool zero = std::all_of(sn.begin(), sn.end(), [](double x) { return x == 0.0; });
    r.checks.push_back(make_check("identity rotation gives zero strains", zero, list(sn)));
    r.summary = {{"exponent", nullptr}};
  } else {
    const double k = hs.size() >= 2 ? fit_exponent(hs, sn) : -1.0;
    r.checks.push_back(make_check("strain norm exponent -1 +- 0.05", std::abs(k + 1.0) <= 0.05, fmt(k)));
    bool ratios = true;
    for (std::size_t i = 0; i + 1 < hs.size(); ++i)
      ratios = ratios && std::abs((sn[i + 1] / sn[i]) / (hs[i] / hs[i + 1]) - 1.0) <= 0.02;
    r.checks.push_back(make_check("strain ratios match h ratios within 2%", ratios, list(sn)));
    r.summary = {{"exponent", k}};
  }
  r.total_seconds = seconds_since(t0);
  return r;
}

ScenarioResult run_S4_drift(const ScenarioConfig& c) {
  const auto t0 = Clock::now();
  if (!std::holds_alternative<Ball>(c.domain)) throw ConfigError("S4 needs a ball domain");
  const double alpha = c.knobs.alpha;
  if (!(alpha > 0.5 && alpha < 1.0)) throw ConfigError("S4: alpha must lie in (1/2, 1)");
  const LoadSpec spec = c.scaled_load();
  const QuadratureSet q = analytic_quadrature(c.domain);
  const double vol = volume(c.domain);
  const Mat3 w = skew_of((1.0 / norm(c.knobs.skew_axis)) * c.knobs.skew_axis);
  const Mat3 w2 = w * w;

  ScenarioResult r;
  r.id = c.id;
  r.table.columns = {"h", "value", "grad_l2_norm", "dist_so3", "load_term"};
  for (double h : c.h_list) {
    const auto t = Clock::now();
    const double s = std::pow(h, alpha);
    // 1 − √(1 − s²) without cancellation.
    const double one_minus_cos = s * s / (1.0 + std::sqrt(1.0 - s * s));
    const Mat3 g = std::pow(h, alpha - 1.0) * w + (one_minus_cos / h) * w2;
    const double l = eval_L(spec, q, [&](const Vec3& x) { return g * x; });
    const double value = constant_gradient_energy(c.material, q, g, h) - l;
    r.table.add({h, value, norm(g) * std::sqrt(vol), dist_SO3(Mat3::identity() + h * g).value, l});
    r.wallclock.push_back(seconds_since(t));
  }
  const std::vector<double> hs = r.table.column("h"), val = r.table.column("value"), gn = r.table.column("grad_l2_norm"),
                            ds = r.table.column("dist_so3");
  bool decreasing = true;
  for (std::size_t i = 1; i < val.size(); ++i) decreasing = decreasing && val[i] < val[i - 1];
  r.checks.push_back(make_check("values decreasing", decreasing, list(val)));
  r.checks.push_back(make_check("final value <= 1e-3", val.back() <= 1e-3, fmt(val.back())));
  const double k = hs.size() >= 2 ? fit_exponent(hs, gn) : alpha - 1.0;
  r.checks.push_back(make_check("gradient exponent alpha - 1 +- 0.05", std::abs(k - (alpha - 1.0)) <= 0.05,
                                fmt(k) + " vs " + fmt(alpha - 1.0)));
  const double dmax = *std::max_element(ds.begin(), ds.end());
  r.checks.push_back(make_check("y_j is a rotation", dmax <= 1e-10, "max dist " + fmt(dmax)));
  r.summary = {{"alpha", alpha}, {"gradient_exponent", k}};
  r.total_seconds = seconds_since(t0);
  return r;
}

ScenarioResult run_S5_incompatible(const ScenarioConfig& c) {
  const auto t0 = Clock::now();
  const Mat3 w = skew_of((1.0 / norm(c.knobs.skew_axis)) * c.knobs.skew_axis);
  const Mat3 g1 = w + w * w;

  struct Variant {
    std::string name;
    DomainDesc domain;
    LoadSpec spec;
  };
  const std::vector<Variant> variants{
      {"configured", c.domain, c.scaled_load()},
      {"box_pressure_neg", Box{}, {VectorExpr::zero(), VectorExpr::named("pressure", {-1.0})}},
      {"box_pressure_pos", Box{}, {VectorExpr::zero(), VectorExpr::named("pressure", {1.0})}},
  };

  ScenarioResult r;
  r.id = c.id;
  r.table.columns = {"variant", "h", "value", "value_times_h", "predicted"};
  json summary = json::object();
  for (const Variant& var : variants) {
    const QuadratureSet q = analytic_quadrature(var.domain);
    const double lw2 = eval_L(var.spec, q, [&](const Vec3& x) { return (w * w) * x; });
    std::vector<double> inv_h, vals;
    for (double h : c.h_list) {
      const auto t = Clock::now();
      const Mat3 g = (1.0 / h) * g1;
      const double value = constant_gradient_energy(c.material, q, g, h) - eval_L(var.spec, q, [&](const Vec3& x) { return g * x; });
      r.table.add({var.name, h, value, value * h, -lw2 / h});
      r.wallclock.push_back(seconds_since(t));
      inv_h.push_back(1.0 / h);
      vals.push_back(value);
    }
    const double slope = vals.size() >= 2 ? fit_line(inv_h, vals).first : vals[0] * c.h_list[0];
    summary[var.name] = {{"L_W2x", lw2}, {"slope", slope}};
    bool decreasing = true, bounded = true;
    for (std::size_t i = 1; i < vals.size(); ++i) decreasing = decreasing && vals[i] < vals[i - 1];
    for (double v : vals) bounded = bounded && v >= 0.0;
    if (lw2 > 0.0) {
      r.checks.push_back(make_check(var.name + ": slope -L(W^2 x) within 1%", std::abs(slope + lw2) <= 0.01 * lw2,
                                    fmt(slope) + " vs " + fmt(-lw2)));
      r.checks.push_back(make_check(var.name + ": values decrease without bound", decreasing, list(vals)));
    } else {
      r.checks.push_back(make_check(var.name + ": values bounded below", bounded, list(vals)));
    }
  }
  r.summary = summary;
  r.total_seconds = seconds_since(t0);
  return r;
}

ScenarioResult run_S6_rigid_minimizers(const ScenarioConfig& c) {
  const auto t0 = Clock::now();
  const HexMesh mesh = c.mesh();
  const LoadSpec main = c.scaled_load();
  require_loads(c, true);
  const TensorField tf(mesh, c.material);

  // Pressure that balances the body force exactly: G = (λ|Ω| − ∫φ) I on the mesh.
  const double g00 = moment_matrix(LoadSpec{main.f, VectorExpr::zero()}, mesh).g(0, 0);
  const double vol = volume(c.domain);
  const double lambda_m = -g00 / vol;
  double lambda = 0.0;
  if (const auto* nl = std::get_if<NamedLoad>(&main.g.variant()); nl && nl->id == "pressure") lambda = nl->params[0];

  struct Case {
    std::string name;
    double lambda;
    LoadSpec spec;
  };
  const std::vector<Case> cases{{"configured", lambda, main},
                                {"marginal", lambda_m, {main.f, VectorExpr::named("pressure", {lambda_m})}},
                                {"zero", 0.0, LoadSpec{}}};

  ScenarioResult r;
  r.id = c.id;
  r.table.columns = {"case", "lambda", "margin", "classification", "min_E", "min_F", "w_norm", "strain_l2_norm"};
  for (const Case& k : cases) {
    const auto t = Clock::now();
    const CompatReport cr = compatibility_margin(k.spec, mesh);
    const LinearSolveReport e = minimize_E_I(mesh, tf, k.spec, c.solver.linear);
    const LinearSolveReport f = minimize_F_I(mesh, tf, k.spec, c.solver.linear);
    const double sn = strain_l2(mesh, e.v_star);
    r.table.add({k.name, k.lambda, cr.margin, to_string(cr.classification), e.value, f.value, norm(f.w_star.w), sn});
    r.wallclock.push_back(seconds_since(t));
    const double scale = 1.0 + std::abs(e.value);
    if (k.name == "configured") {
      r.checks.push_back(make_check("configured: |min E|, |min F| <= 1e-9",
                                    std::abs(e.value) <= 1e-9 && std::abs(f.value) <= 1e-9,
                                    fmt(e.value) + ", " + fmt(f.value)));
      r.checks.push_back(make_check("configured: |E(v*)| <= 1e-6", sn <= 1e-6, fmt(sn)));
    } else if (k.name == "marginal") {
      r.checks.push_back(make_check("marginal: classified Marginal", cr.classification == Compatibility::Marginal,
                                    to_string(cr.classification) + ", margin " + fmt(cr.margin)));
      r.checks.push_back(make_check("marginal: min F = min E", std::abs(f.value - e.value) <= 1e-8 * scale,
                                    fmt(e.value) + ", " + fmt(f.value)));
    } else {
      r.checks.push_back(make_check("zero loads: all zero", e.value == 0.0 && f.value == 0.0 && sn == 0.0,
                                    fmt(e.value) + ", " + fmt(f.value) + ", " + fmt(sn)));
    }
  }
  r.summary = {{"lambda_marginal", lambda_m}};
  r.total_seconds = seconds_since(t0);
  return r;
}

ScenarioResult run_scenario(const ScenarioConfig& c) {
  if (c.id == "S1" || c.id == "custom") return run_S1_convergence(c);
  if (c.id == "S2") return run_S2_recovery(c);
  if (c.id == "S3") return run_S3_rotations(c);
  if (c.id == "S4") return run_S4_drift(c);
  if (c.id == "S5") return run_S5_incompatible(c);
  if (c.id == "S6") return run_S6_rigid_minimizers(c);
  throw ConfigError("unknown scenario '" + c.id + "'");
}

// ---------------------------------------------------------------------------

ScenarioResult check_loads(const ScenarioConfig& c) {
  const auto t0 = Clock::now();
  const LoadSpec spec = c.scaled_load();
  EquilibriumReport eq;
  CompatReport cr;
  if (std::holds_alternative<Box>(c.domain)) {
    const HexMesh mesh = c.mesh();
    eq = check_equilibrium(spec, mesh);
    cr = compatibility_margin(spec, mesh);
  } else {
    eq = check_equilibrium(spec, c.domain);
    cr = compatibility_margin(spec, c.domain);
  }
  const double oracle = compatibility_margin_oracle(spec, c.domain, 10000, c.seed);

  ScenarioResult r;
  r.id = "check-loads";
  r.table.columns = {"quantity", "value"};
  for (int i = 0; i < 3; ++i) r.table.add({"resultant_" + std::to_string(i + 1), eq.resultant[i]});
  for (int i = 0; i < 3; ++i) r.table.add({"torque_" + std::to_string(i + 1), eq.torque[i]});
  r.table.add({"load_scale", load_scale(spec, c.domain)});
  r.table.add({"margin", cr.margin});
  r.table.add({"margin_oracle", oracle});
  for (int i = 0; i < 3; ++i) r.table.add({"worst_axis_" + std::to_string(i + 1), cr.worst_axis[i]});
  r.table.add({"equilibrated", eq.pass});
  r.table.add({"classification", to_string(cr.classification)});
  r.checks.push_back(make_check("equilibrium", eq.pass, "|resultant| " + fmt(norm(eq.resultant)) + ", |torque| " + fmt(norm(eq.torque))));
  r.checks.push_back(make_check("compatibility not violated", cr.classification != Compatibility::Violating,
                                to_string(cr.classification) + ", margin " + fmt(cr.margin)));
  r.summary = {{"classification", to_string(cr.classification)}, {"margin", cr.margin}, {"equilibrated", eq.pass}};
  r.total_seconds = seconds_since(t0);
  r.wallclock.assign(r.table.rows.size(), 0.0);
  return r;
}

ScenarioResult run_flow(const ScenarioConfig& c) {
  const auto t0 = Clock::now();
  const HexMesh mesh = c.mesh();
  const DivFreeField v = parse_field(c.knobs.field);
  ScenarioResult r;
  r.id = "flow";
  r.table.columns = {"h", "substeps", "det_residual", "sup_err_v", "bound_flux2", "sup_err_gradv", "bound_flux4"};
  bool ok2 = true, ok3 = true, ok4 = true;
  for (double h : c.h_list) {
    const auto t = Clock::now();
    const RecoveryReport rep = recovery_field(v, h, c.knobs.substeps, mesh, c.workers).report;
    r.table.add({h, c.knobs.substeps, rep.det_residual, rep.sup_err_v, rep.bound_flux2, rep.sup_err_grad, rep.bound_flux4});
    r.wallclock.push_back(seconds_since(t));
    ok2 = ok2 && rep.flux2_ok();
    ok3 = ok3 && rep.flux3_ok();
    ok4 = ok4 && rep.flux4_ok();
  }
  r.checks.push_back(make_check("flux2 bound", ok2, ""));
  r.checks.push_back(make_check("flux3 bound", ok3, ""));
  r.checks.push_back(make_check("flux4 bound", ok4, ""));
  r.summary = {{"field", c.knobs.field}};
  r.total_seconds = seconds_since(t0);
  return r;
}

// ---------------------------------------------------------------------------

namespace {

// Σ w g_p(|F_q − R|) for R = base · exp(w).
struct RotationFit {
  const std::vector<Mat3>* grads;
  const std::vector<double>* weights;
  const GrowthFunction* gp;

  double operator()(const Mat3& r) const {
    double s = 0.0;
    for (std::size_t i = 0; i < grads->size(); ++i) s += (*weights)[i] * (*gp)(norm((*grads)[i] - r));
    return s;
  }
};

// Damped Newton in the axial chart around `base` with finite-difference derivatives.
Mat3 newton_rotation(const RotationFit& fit, const Mat3& base) {
  Mat3 r = base;
  double fr = fit(r);
  constexpr double kStep = 1e-4;
  for (int it = 0; it < 50; ++it) {
    auto phi = [&](const Vec3& w) { return fit(r * exp_axial(w).matrix()); };
    Eigen::Vector3d g;
    Eigen::Matrix3d hm;
    for (int i = 0; i < 3; ++i) {
      const Vec3 ei = kStep * Vec3::unit(i);
      const double fp = phi(ei), fm = phi(-1.0 * ei);
      g(i) = (fp - fm) / (2.0 * kStep);
      hm(i, i) = (fp - 2.0 * fr + fm) / (kStep * kStep);
      for (int j = 0; j < i; ++j) {
        const Vec3 ej = kStep * Vec3::unit(j);
        hm(i, j) = hm(j, i) = (phi(ei + ej) - phi(ei - ej) - phi(ej - ei) + phi(-1.0 * ei - ej)) / (4.0 * kStep * kStep);
      }
    }
    double mu = 0.0;
    bool moved = false;
    for (int k = 0; k < 30 && !moved; ++k) {
      const Eigen::Vector3d d = -(hm + mu * Eigen::Matrix3d::Identity()).ldlt().solve(g);
      const Mat3 cand = r * exp_axial({d(0), d(1), d(2)}).matrix();
      const double fc = fit(cand);
      if (std::isfinite(fc) && fc < fr) {
        moved = true;
        r = cand;
        const bool small = d.norm() < 1e-12;
        fr = fc;
        if (small) return r;
      } else {
        mu = mu == 0.0 ? 1e-6 * (1.0 + hm.norm()) : 10.0 * mu;
      }
    }
    if (!moved) break;
  }
  return r;
}

// Products of Legendre polynomials orthonormal on [−½, ½]: 1, √3·2t, √5(6t² − ½).
Poly legendre(int axis, int degree) {
  std::array<int, 3> e1{0, 0, 0}, e2{0, 0, 0};
  e1[static_cast<std::size_t>(axis)] = 1;
  e2[static_cast<std::size_t>(axis)] = 2;
  if (degree == 0) return Poly::constant(1.0);
  if (degree == 1) return Poly(std::vector<Monomial>{Monomial{2.0 * std::sqrt(3.0), e1}});
  return Poly(std::vector<Monomial>{Monomial{6.0 * std::sqrt(5.0), e2}, Monomial{-0.5 * std::sqrt(5.0), {0, 0, 0}}});
}

// Degree ≤ 2 field with i.i.d. normal coefficients in an L²(unit box)-orthonormal basis.
PolyVec random_quadratic_field(SplitMix64& rng) {
  PolyVec v;
  for (std::size_t i = 0; i < 3; ++i) {
    Poly p;
    for (int a = 0; a <= 2; ++a)
      for (int b = 0; a + b <= 2; ++b)
        for (int d = 0; a + b + d <= 2; ++d) p += (legendre(0, a) * legendre(1, b) * legendre(2, d)).scaled(rng.normal());
    v.c[i] = p;
  }
  return v;
}

}  // namespace

ScenarioResult probe_inequalities(const ProbeOptions& o) {
  const auto t0 = Clock::now();
  if (o.fields < 50) throw std::invalid_argument("probe_inequalities: need at least 50 fields");
  const HexMesh mesh = build_box_mesh(Box{}, o.mesh_n);
  const GrowthFunction gp(o.p);
  std::vector<Vec3> xs;
  std::vector<double> ws;
  for (std::size_t e = 0; e < mesh.element_count(); ++e)
    for (int q = 0; q < HexMesh::kQp; ++q) {
      xs.push_back(mesh.qp_position(e, q));
      ws.push_back(mesh.qp_weight());
    }

  // One child stream per field, so that rows do not depend on the worker count.
  SplitMix64 root(o.seed);
  std::vector<SplitMix64> streams;
  for (int i = 0; i < o.fields; ++i) streams.push_back(root.split());

  const auto nf = static_cast<std::size_t>(o.fields);
  std::vector<std::array<double, 4>> out(nf);
  std::vector<double> secs(nf);
  parallel_for(nf, o.workers, [&](std::size_t i) {
    const auto t = Clock::now();
    SplitMix64 rng = streams[i];
    const PolyVec v = random_quadratic_field(rng);
    std::vector<Mat3> g(xs.size());
    Mat3 mean_skw = Mat3::zero();
    double vol = 0.0, gmax = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      g[k] = v.jacobian(xs[k]);
      mean_skw += ws[k] * skw(g[k]);
      vol += ws[k];
      gmax = std::max(gmax, norm(g[k]));
    }
    mean_skw *= 1.0 / vol;
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      num += ws[k] * std::pow(norm(g[k] - mean_skw), o.p);
      den += ws[k] * std::pow(norm(sym(g[k])), o.p);
    }
    const double korn = den > 0.0 ? std::pow(num / den, 1.0 / o.p) : std::numeric_limits<double>::quiet_NaN();

    // y = R0 (x + δ v) with |δ∇v| ≤ 0.1.
    const Mat3 r0 = random_rotation(rng);
    const double delta = 0.1 / gmax;
    std::vector<Mat3> fy(xs.size());
    double dist = 0.0;
    Mat3 mean_f = Mat3::zero();
    for (std::size_t k = 0; k < xs.size(); ++k) {
      fy[k] = r0 * (Mat3::identity() + delta * g[k]);
      dist += ws[k] * gp(dist_SO3(fy[k]).value);
      mean_f += ws[k] * fy[k];
    }
    const RotationFit fit{&fy, &ws, &gp};
    const Mat3 polar = polar_rotation(mean_f);
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 4; ++s) {
      const Mat3 base = s == 0 ? polar : polar * exp_axial(0.5 * std::numbers::pi * Vec3::unit(s - 1)).matrix();
      best = std::min(best, fit(newton_rotation(fit, base)));
    }
    out[i] = {korn, best / dist, std::pow(den, 1.0 / o.p), dist};
    secs[i] = seconds_since(t);
  });

  ScenarioResult r;
  r.id = "probe";
  r.table.columns = {"field", "korn_quotient", "rigidity_quotient", "strain_l2_norm", "dist_integral"};
  for (std::size_t i = 0; i < nf; ++i) r.table.add({static_cast<int>(i), out[i][0], out[i][1], out[i][2], out[i][3]});
  r.wallclock = secs;
  const std::vector<double> kq = r.table.column("korn_quotient"), rq = r.table.column("rigidity_quotient");
  auto all_ok = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x) && x >= 1.0 - 1e-10; });
  };
  const double kmax = *std::max_element(kq.begin(), kq.end()), rmax = *std::max_element(rq.begin(), rq.end());
  const double kmin = *std::min_element(kq.begin(), kq.end()), rmin = *std::min_element(rq.begin(), rq.end());
  r.checks.push_back(make_check("korn quotients finite and >= 1", all_ok(kq), "min " + fmt(kmin) + ", max " + fmt(kmax)));
  r.checks.push_back(make_check("rigidity quotients finite and >= 1", all_ok(rq), "min " + fmt(rmin) + ", max " + fmt(rmax)));
  r.summary = {{"korn_max", kmax},   {"korn_min", kmin},      {"rigidity_max", rmax}, {"rigidity_min", rmin},
               {"mesh_n", o.mesh_n}, {"fields", o.fields},     {"seed", o.seed},       {"p", o.p}};
  r.total_seconds = seconds_since(t0);
  return r;
}

}  // namespace traclin
