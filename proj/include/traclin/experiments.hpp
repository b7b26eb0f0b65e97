#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "traclin/config.hpp"

namespace traclin {

/// Fixed-column table; cells are numbers or strings.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;

  void add(std::vector<nlohmann::json> row);
  /// Column by name (numbers only).
  std::vector<double> column(const std::string& name) const;
};

/// Numbers as %.17g, so that equal tables give byte-identical files.
std::string to_csv(const Table& t);
/// Array of row objects.
nlohmann::json to_json(const Table& t);

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ScenarioResult {
  std::string id;
  Table table;
  std::vector<Check> checks;
  nlohmann::json summary = nlohmann::json::object();
  /// Seconds per table row; JSON only, so that the CSV stays reproducible.
  std::vector<double> wallclock;
  double total_seconds = 0.0;

  bool all_passed() const;
};

/// JSON mirror: the table rows (with wallclock), checks, summary and the config.
nlohmann::json to_json(const ScenarioResult& r, const ScenarioConfig& c);
/// Writes <dir>/<stem>.csv and <dir>/<stem>.json; returns the two paths.
std::vector<std::string> write_outputs(const ScenarioResult& r, const ScenarioConfig& c);

/// Throws LoadConditionViolated unless the loads are equilibrated; with `strict` also when they are Violating.
CompatReport require_loads(const ScenarioConfig& c, bool strict);

/// Sweep of nonlinear minima over h_list with gap to min E^I.
/// Columns: h, value, gap, strain_l2_err, strain_l2_norm, det_violation, iterations, drift.
ScenarioResult run_S1_convergence(const ScenarioConfig& c);
/// F^I_h at the recovery field of the target versus E^I of the target.
/// Columns: h, substeps, value, target_energy, diff, det_residual, sup_err_v.
ScenarioResult run_S2_recovery(const ScenarioConfig& c);
/// F^I_h at h⁻¹(R − I)x. Columns: h, value, strain_l2_norm, det_error.
ScenarioResult run_S3_rotations(const ScenarioConfig& c);
/// F^I_h along the drifting rotation sequence on the ball. Columns: h, value, grad_l2_norm, dist_so3, load_term.
ScenarioResult run_S4_drift(const ScenarioConfig& c);
/// F^I_h at h⁻¹(W*x + W*²x) for the configured load plus the box pressure variants.
/// Columns: variant, h, value, value_times_h, predicted.
ScenarioResult run_S5_incompatible(const ScenarioConfig& c);
/// Minima of E^I and F^I for a gradient body force balanced by pressure, the marginal pressure and zero loads.
/// Columns: case, lambda, margin, classification, min_E, min_F, w_norm, strain_l2_norm.
ScenarioResult run_S6_rigid_minimizers(const ScenarioConfig& c);
/// Dispatch on c.id (custom runs S1).
ScenarioResult run_scenario(const ScenarioConfig& c);

/// Equilibrium and compatibility summary. Columns: quantity, value.
ScenarioResult check_loads(const ScenarioConfig& c);
/// Recovery error and flux bounds per h.
/// Columns: h, substeps, det_residual, sup_err_v, bound_flux2, sup_err_gradv, bound_flux4.
ScenarioResult run_flow(const ScenarioConfig& c);

struct ProbeOptions {
  int mesh_n = 8;
  int fields = 50;
  std::uint64_t seed = 7;
  double p = 2.0;
  int workers = 1;
};
/// Korn and rigidity quotients for random polynomial fields on the unit box.
/// Columns: field, korn_quotient, rigidity_quotient, strain_l2_norm, dist_integral.
ScenarioResult probe_inequalities(const ProbeOptions& o);

/// Least-squares slope of log y against log x.
double fit_exponent(const std::vector<double>& x, const std::vector<double>& y);
/// Least-squares (a, b) of y ≈ a·x + b.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace traclin
