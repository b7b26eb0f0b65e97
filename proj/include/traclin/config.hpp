#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "traclin/domain.hpp"
#include "traclin/energy.hpp"
#include "traclin/flow.hpp"
#include "traclin/loads.hpp"
#include "traclin/solver.hpp"

namespace traclin {

/// Malformed or invalid scenario configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolverConfig {
  NonlinearOptions nonlinear;
  LinearSolveOptions linear;
  /// "penalty" or "flowparam".
  std::string method = "penalty";
};

/// Scenario-specific knobs; each scenario reads only its own.
struct ScenarioKnobs {
  /// S2 and flow: target divergence-free field, as its JSON description.
  nlohmann::json field = "stretch";
  int substeps = 64;
  /// S3: rotation R = exp(angle·W(axis)).
  Vec3 rotation_axis{0.0, 0.0, 1.0};
  double rotation_angle = 0.5;
  /// S4 drift exponent and the unit axial vector of W in S4/S5.
  double alpha = 0.75;
  Vec3 skew_axis{0.0, 0.0, 1.0};
  /// S1: final gap ≤ gap_tolerance·(1 + |min E^I|).
  double gap_tolerance = 2e-2;
};

struct ScenarioConfig {
  /// S1..S6 or custom (custom runs the S1 sweep on the given setup).
  std::string id = "custom";
  DomainDesc domain = Box{};
  int n = 8;
  MaterialModel material = MaterialModel::quad_green();
  LoadSpec load;
  /// Multiplies both load expressions.
  double load_scale = 1.0;
  std::vector<double> h_list{0.2, 0.1, 0.05, 0.025};
  SolverConfig solver;
  ScenarioKnobs knobs;
  std::uint64_t seed = 7;
  int workers = 1;
  /// Output directory and file stem (CSV and JSON share the stem).
  std::string out_dir = ".";
  std::string out_stem;

  /// The loads with load_scale applied.
  LoadSpec scaled_load() const;
  /// The mesh of the box domain (throws ConfigError for other domains).
  HexMesh mesh() const;
  Box box() const;
};

ScenarioConfig parse_config(const nlohmann::json& j);
/// Reads and parses a file; out_dir defaults to the file's directory and out_stem to its stem.
ScenarioConfig load_config(const std::string& path);
nlohmann::json to_json(const ScenarioConfig& c);

MaterialModel parse_material(const nlohmann::json& j);
nlohmann::json to_json(const MaterialModel& m);
VectorExpr parse_vector_expr(const nlohmann::json& j);
nlohmann::json to_json(const VectorExpr& e);
DomainDesc parse_domain(const nlohmann::json& j);
nlohmann::json to_json(const DomainDesc& d);
/// A built-in name, {"curl_of": poly table} or {"linear_skew": [w1, w2, w3], "scale": s}.
DivFreeField parse_field(const nlohmann::json& j);

/// s·e; named loads are scaled through their leading parameter.
VectorExpr scaled(const VectorExpr& e, double s);

}  // namespace traclin
