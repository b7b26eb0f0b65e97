#include "traclin/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace traclin {

using nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Vec3 parse_vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + ": expected an array of 3 numbers");
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}
json vec3_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

// A polynomial is a list of [coeff, i, j, k] rows.
Poly parse_poly(const json& j) {
  if (!j.is_array()) throw ConfigError("polynomial: expected a list of [coeff, i, j, k]");
  std::vector<Monomial> terms;
  for (const json& t : j) {
    if (!t.is_array() || t.size() != 4) throw ConfigError("polynomial term: expected [coeff, i, j, k]");
    Monomial m{t.at(0).get<double>(), {t.at(1).get<int>(), t.at(2).get<int>(), t.at(3).get<int>()}};
    for (int e : m.exps)
      if (e < 0) throw ConfigError("polynomial term: negative exponent");
    terms.push_back(m);
  }
  return Poly(std::move(terms));
}
json poly_json(const Poly& p) {
  json out = json::array();
  for (const Monomial& m : p.terms()) out.push_back({m.coeff, m.exps[0], m.exps[1], m.exps[2]});
  return out;
}
PolyVec parse_polyvec(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("polynomial field: expected 3 component tables");
  PolyVec v;
  for (std::size_t i = 0; i < 3; ++i) v.c[i] = parse_poly(j.at(i));
  return v;
}
json polyvec_json(const PolyVec& v) { return json::array({poly_json(v.c[0]), poly_json(v.c[1]), poly_json(v.c[2])}); }

std::vector<double> parse_doubles(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + ": expected an array");
  std::vector<double> out;
  for (const json& x : j) out.push_back(x.get<double>());
  return out;
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + it.key() + "'");
  }
}

ScenarioConfig parse_config_unchecked(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  reject_unknown(j,
                 {"id", "domain", "material", "load", "h_list", "solver", "field", "substeps", "rotation", "alpha", "skew",
                  "gap_tolerance", "seed", "workers", "output"},
                 "config");
  ScenarioConfig c;
  c.id = j.value("id", std::string("custom"));
  static const std::vector<std::string> ids{"S1", "S2", "S3", "S4", "S5", "S6", "custom"};
  if (std::find(ids.begin(), ids.end(), c.id) == ids.end()) throw ConfigError("config: unknown scenario id '" + c.id + "'");

  if (j.contains("domain")) {
    c.domain = parse_domain(j["domain"]);
    c.n = j["domain"].value("n", 8);
  }
  if (j.contains("material")) c.material = parse_material(j["material"]);
  if (j.contains("load")) {
    const json& l = j["load"];
    reject_unknown(l, {"f", "g", "scale"}, "load");
    if (l.contains("f")) c.load.f = parse_vector_expr(l["f"]);
    if (l.contains("g")) c.load.g = parse_vector_expr(l["g"]);
    c.load_scale = l.value("scale", 1.0);
  }
  if (j.contains("h_list")) c.h_list = parse_doubles(j["h_list"], "h_list");
  if (j.contains("solver")) {
    const json& s = j["solver"];
    reject_unknown(s,
                   {"tol_opt", "tol_det_soft", "betas", "beta_max", "max_iterations", "method", "substeps",
                    "potential_degree", "tol_linear", "tol_div"},
                   "solver");
    NonlinearOptions& o = c.solver.nonlinear;
    o.tol_opt = s.value("tol_opt", o.tol_opt);
    o.tol_det_soft = s.value("tol_det_soft", o.tol_det_soft);
    if (s.contains("betas")) o.schedule.betas = parse_doubles(s["betas"], "solver.betas");
    o.schedule.beta_max = s.value("beta_max", o.schedule.beta_max);
    o.max_iterations = s.value("max_iterations", o.max_iterations);
    o.substeps = s.value("substeps", o.substeps);
    o.potential_degree = s.value("potential_degree", o.potential_degree);
    c.solver.method = s.value("method", c.solver.method);
    c.solver.linear.tol_opt = s.value("tol_linear", c.solver.linear.tol_opt);
    c.solver.linear.tol_div = s.value("tol_div", c.solver.linear.tol_div);
  }
  ScenarioKnobs& k = c.knobs;
  if (j.contains("field")) k.field = j["field"];
  k.substeps = j.value("substeps", k.substeps);
  if (j.contains("rotation")) {
    const json& r = j["rotation"];
    reject_unknown(r, {"axis", "angle"}, "rotation");
    if (r.contains("axis")) k.rotation_axis = parse_vec3(r["axis"], "rotation.axis");
    k.rotation_angle = r.value("angle", k.rotation_angle);
  }
  k.alpha = j.value("alpha", k.alpha);
  if (j.contains("skew")) k.skew_axis = parse_vec3(j["skew"], "skew");
  k.gap_tolerance = j.value("gap_tolerance", k.gap_tolerance);
  c.seed = j.value("seed", c.seed);
  c.workers = j.value("workers", c.workers);
  if (j.contains("output")) {
    const json& o = j["output"];
    reject_unknown(o, {"dir", "stem"}, "output");
    c.out_dir = o.value("dir", c.out_dir);
    c.out_stem = o.value("stem", c.out_stem);
  }
  if (c.out_stem.empty()) c.out_stem = c.id;

  // Invariants.
  validate(c.domain);
  if (c.n < 2 || c.n > 64) throw ConfigError("domain.n must lie in [2, 64]");
  if (c.h_list.empty()) throw ConfigError("h_list: must not be empty");
  for (std::size_t i = 0; i < c.h_list.size(); ++i) {
    if (!(c.h_list[i] > 0.0 && c.h_list[i] < 1.0)) throw ConfigError("h_list: values must lie in (0, 1)");
    if (i > 0 && !(c.h_list[i] < c.h_list[i - 1])) throw ConfigError("h_list: must be strictly decreasing");
  }
  c.solver.nonlinear.schedule.validate();
  if (c.solver.method != "penalty" && c.solver.method != "flowparam")
    throw ConfigError("solver.method must be 'penalty' or 'flowparam'");
  if (!(c.solver.nonlinear.tol_opt > 0.0 && c.solver.nonlinear.tol_det_soft > 0.0))
    throw ConfigError("solver tolerances must be positive");
  if (c.knobs.substeps < 4) throw ConfigError("substeps must be at least 4");
  if (c.workers < 1) throw ConfigError("workers must be at least 1");
  if (!std::isfinite(c.load_scale)) throw ConfigError("load.scale must be finite");
  if (norm(k.rotation_axis) == 0.0 || norm(k.skew_axis) == 0.0) throw ConfigError("axes must be nonzero");
  parse_field(k.field);
  return c;
}

}  // namespace

Box ScenarioConfig::box() const {
  const Box* b = std::get_if<Box>(&domain);
  if (!b) throw ConfigError("scenario '" + id + "' needs a box domain");
  return *b;
}

HexMesh ScenarioConfig::mesh() const { return build_box_mesh(box(), n); }

VectorExpr scaled(const VectorExpr& e, double s) {
  if (const auto* p = std::get_if<PolyVec>(&e.variant())) {
    PolyVec out;
    for (std::size_t i = 0; i < 3; ++i) out.c[i] = p->c[i].scaled(s);
    return VectorExpr(out);
  }
  NamedLoad nl = std::get<NamedLoad>(e.variant());
  if (nl.id == "zero" || s == 1.0) return VectorExpr(nl);
  if (nl.params.empty()) nl.params.push_back(s);
  else nl.params[0] *= s;
  return VectorExpr(nl);
}

LoadSpec ScenarioConfig::scaled_load() const { return {scaled(load.f, load_scale), scaled(load.g, load_scale)}; }

MaterialModel parse_material(const json& j) {
  if (!j.is_object() || !j.contains("model")) throw ConfigError("material: expected {\"model\": ...}");
  const std::string model = j["model"].get<std::string>();
  if (model == "quad_green") return MaterialModel::quad_green();
  if (model == "ogden") {
    std::vector<OgdenTerm> terms;
    for (const json& t : j.at("terms")) {
      if (!t.is_array() || t.size() != 2) throw ConfigError("ogden term: expected [mu, alpha]");
      terms.push_back({t.at(0).get<double>(), t.at(1).get<double>()});
    }
    return MaterialModel::ogden(std::move(terms));
  }
  if (model == "piecewise") {
    PiecewiseConstant pc;
    for (const json& r : j.at("regions"))
      pc.regions.push_back({AxisBox{parse_vec3(r.at("lo"), "region.lo"), parse_vec3(r.at("hi"), "region.hi")},
                            std::make_shared<const MaterialModel>(parse_material(r.at("material")))});
    return MaterialModel(std::move(pc));
  }
  throw ConfigError("material: unknown model '" + model + "'");
}

json to_json(const MaterialModel& m) {
  return std::visit(Overloaded{[](const QuadGreen&) { return json{{"model", "quad_green"}}; },
                               [](const Ogden& o) {
                                 json terms = json::array();
                                 for (const OgdenTerm& t : o.terms) terms.push_back({t.mu, t.alpha});
                                 return json{{"model", "ogden"}, {"terms", terms}};
                               },
                               [](const PiecewiseConstant& p) {
                                 json regions = json::array();
                                 for (const MaterialRegion& r : p.regions)
                                   regions.push_back({{"lo", vec3_json(r.box.lo)},
                                                      {"hi", vec3_json(r.box.hi)},
                                                      {"material", to_json(*r.model)}});
                                 return json{{"model", "piecewise"}, {"regions", regions}};
                               }},
                    m.variant());
}

VectorExpr parse_vector_expr(const json& j) {
  if (j.is_null() || (j.is_string() && j.get<std::string>() == "zero")) return VectorExpr::zero();
  if (j.is_object() && j.contains("named")) {
    reject_unknown(j, {"named", "params"}, "load expression");
    std::vector<double> params;
    if (j.contains("params")) params = parse_doubles(j["params"], "params");
    return VectorExpr::named(j["named"].get<std::string>(), std::move(params));
  }
  if (j.is_object() && j.contains("poly")) {
    reject_unknown(j, {"poly"}, "load expression");
    return VectorExpr(parse_polyvec(j["poly"]));
  }
  throw ConfigError("load expression: expected \"zero\", {\"named\": ...} or {\"poly\": ...}");
}

json to_json(const VectorExpr& e) {
  if (const auto* p = std::get_if<PolyVec>(&e.variant())) return json{{"poly", polyvec_json(*p)}};
  const NamedLoad& nl = std::get<NamedLoad>(e.variant());
  return json{{"named", nl.id}, {"params", nl.params}};
}

DomainDesc parse_domain(const json& j) {
  if (!j.is_object()) throw ConfigError("domain: expected an object");
  reject_unknown(j, {"box", "ball", "cylinder", "n"}, "domain");
  if (j.contains("box")) {
    const json& b = j["box"];
    Box box;
    if (b.contains("center")) box.center = parse_vec3(b["center"], "box.center");
    if (b.contains("half_extents")) box.half_extents = parse_vec3(b["half_extents"], "box.half_extents");
    return box;
  }
  if (j.contains("ball")) return Ball{j["ball"].value("radius", 1.0)};
  if (j.contains("cylinder")) return Cylinder{j["cylinder"].value("radius", 1.0), j["cylinder"].value("height", 1.0)};
  throw ConfigError("domain: expected one of box, ball, cylinder");
}

json to_json(const DomainDesc& d) {
  return std::visit(
      Overloaded{[](const Box& b) {
                   return json{{"box", {{"center", vec3_json(b.center)}, {"half_extents", vec3_json(b.half_extents)}}}};
                 },
                 [](const Ball& b) { return json{{"ball", {{"radius", b.radius}}}}; },
                 [](const Cylinder& c) { return json{{"cylinder", {{"radius", c.radius}, {"height", c.height}}}}; }},
      d);
}

DivFreeField parse_field(const json& j) {
  try {
    if (j.is_string()) return builtin_field(j.get<std::string>());
    if (j.is_object() && j.contains("curl_of")) return DivFreeField(CurlOf{parse_polyvec(j["curl_of"])});
    if (j.is_object() && j.contains("linear_skew"))
      return DivFreeField(LinearSkew{AxialVector{parse_vec3(j["linear_skew"], "linear_skew")}, j.value("scale", 1.0)});
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("field: ") + e.what());
  }
  throw ConfigError("field: expected a built-in name, {\"curl_of\": ...} or {\"linear_skew\": ...}");
}

ScenarioConfig parse_config(const json& j) {
  try {
    return parse_config_unchecked(j);
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  const std::filesystem::path p(path);
  const bool has_dir = j.contains("output") && j["output"].is_object() && j["output"].contains("dir");
  const bool has_stem = j.contains("output") && j["output"].is_object() && j["output"].contains("stem");
  ScenarioConfig c = parse_config(j);
  if (!has_dir) c.out_dir = p.parent_path().empty() ? "." : p.parent_path().string();
  if (!has_stem) c.out_stem = p.stem().string();
  return c;
}

json to_json(const ScenarioConfig& c) {
  json domain = to_json(c.domain);
  domain["n"] = c.n;
  const NonlinearOptions& o = c.solver.nonlinear;
  return json{{"id", c.id},
              {"domain", domain},
              {"material", to_json(c.material)},
              {"load", {{"f", to_json(c.load.f)}, {"g", to_json(c.load.g)}, {"scale", c.load_scale}}},
              {"h_list", c.h_list},
              {"solver",
               {{"tol_opt", o.tol_opt},
                {"tol_det_soft", o.tol_det_soft},
                {"betas", o.schedule.betas},
                {"beta_max", o.schedule.beta_max},
                {"max_iterations", o.max_iterations},
                {"method", c.solver.method},
                {"substeps", o.substeps},
                {"potential_degree", o.potential_degree},
                {"tol_linear", c.solver.linear.tol_opt},
                {"tol_div", c.solver.linear.tol_div}}},
              {"field", c.knobs.field},
              {"substeps", c.knobs.substeps},
              {"rotation", {{"axis", vec3_json(c.knobs.rotation_axis)}, {"angle", c.knobs.rotation_angle}}},
              {"alpha", c.knobs.alpha},
              {"skew", vec3_json(c.knobs.skew_axis)},
              {"gap_tolerance", c.knobs.gap_tolerance},
              {"seed", c.seed},
              {"workers", c.workers},
              {"output", {{"dir", c.out_dir}, {"stem", c.out_stem}}}};
}

}  // namespace traclin
