#include "traclin/loads.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "traclin/rigid.hpp"
#include "traclin/rng.hpp"

namespace traclin {

namespace {

std::size_t expected_params(const std::string& id, std::size_t given) {
  if (id == "zero") return 0;
  if (id == "radial") return given == 0 ? 0 : (given == 1 ? 1 : 4);
  if (id == "pressure") return 1;
  if (id == "compress_lateral") return given == 0 ? 0 : 1;
  if (id == "gradient_potential") return 7;
  throw std::invalid_argument("unknown named load '" + id + "'");
}

double param(const NamedLoad& n, std::size_t i, double fallback) { return i < n.params.size() ? n.params[i] : fallback; }

// ((r² − s²)₊)² and its derivative in s.
double bump(double s, double r) {
  const double u = r * r - s * s;
  return u > 0.0 ? u * u : 0.0;
}
double bump_d(double s, double r) {
  const double u = r * r - s * s;
  return u > 0.0 ? -4.0 * s * u : 0.0;
}

const NamedLoad* as_named(const VectorExpr& e) { return std::get_if<NamedLoad>(&e.variant()); }

// ∫_lo^hi ((r² − (t − c)²)₊)² dt, exact (degree-4 polynomial on the support).
double bump_integral(double lo, double hi, double c, double r) {
  const double a = std::max(lo, c - r), b = std::min(hi, c + r);
  if (b <= a) return 0.0;
  auto prim = [&](double t) {
    const double s = t - c;
    return r * r * r * r * s - 2.0 * r * r * s * s * s / 3.0 + s * s * s * s * s / 5.0;
  };
  return prim(b) - prim(a);
}

std::array<std::vector<double>, 3> load_breaks(const LoadSpec& spec) {
  std::array<std::vector<double>, 3> br;
  for (const VectorExpr* e : {&spec.f, &spec.g})
    if (e->is_gradient_potential()) {
      const auto& p = as_named(*e)->params;
      for (std::size_t i = 0; i < 3; ++i) {
        br[i].push_back(p[1 + i] - p[4 + i]);
        br[i].push_back(p[1 + i] + p[4 + i]);
      }
    }
  return br;
}

QuadratureSet load_quadrature(const LoadSpec& spec, const DomainDesc& d) {
  if (const auto* b = std::get_if<Box>(&d)) return box_quadrature(*b, 6, load_breaks(spec));
  if (spec.f.is_gradient_potential() || spec.g.is_gradient_potential())
    throw std::invalid_argument("gradient_potential loads are supported on box domains only");
  return analytic_quadrature(d, 32);
}

}  // namespace

VectorExpr::VectorExpr(Variant v) : v_(std::move(v)) {
  if (const auto* n = std::get_if<NamedLoad>(&v_)) {
    const std::size_t want = expected_params(n->id, n->params.size());
    if (n->params.size() != want) {
      std::ostringstream os;
      os << "named load '" << n->id << "' takes " << want << " parameters, got " << n->params.size();
      throw std::invalid_argument(os.str());
    }
    for (double p : n->params)
      if (!std::isfinite(p)) throw std::invalid_argument("named load '" + n->id + "': non-finite parameter");
    if (n->id == "gradient_potential")
      for (std::size_t i = 4; i < 7; ++i)
        if (!(n->params[i] > 0.0)) throw std::invalid_argument("gradient_potential: support radii must be positive");
  } else {
    if (std::get<PolyVec>(v_).degree() > 3) throw std::invalid_argument("polynomial loads are limited to degree 3");
  }
}

Vec3 VectorExpr::operator()(const Vec3& x, const Vec3& n) const {
  if (const auto* p = std::get_if<PolyVec>(&v_)) return (*p)(x);
  const auto& nl = std::get<NamedLoad>(v_);
  if (nl.id == "zero") return {};
  if (nl.id == "radial") {
    const double s = param(nl, 0, 1.0);
    return s * (x - Vec3{param(nl, 1, 0.0), param(nl, 2, 0.0), param(nl, 3, 0.0)});
  }
  if (nl.id == "pressure") return nl.params[0] * n;
  if (nl.id == "compress_lateral") return param(nl, 0, 1.0) * Vec3{-x[0], -x[1], 0.0};
  // gradient_potential
  const auto& p = nl.params;
  std::array<double, 3> b{}, db{};
  for (std::size_t i = 0; i < 3; ++i) {
    b[i] = bump(x[i] - p[1 + i], p[4 + i]);
    db[i] = bump_d(x[i] - p[1 + i], p[4 + i]);
  }
  return p[0] * Vec3{db[0] * b[1] * b[2], b[0] * db[1] * b[2], b[0] * b[1] * db[2]};
}

bool VectorExpr::is_zero() const {
  if (const auto* p = std::get_if<PolyVec>(&v_)) return p->c[0].is_zero() && p->c[1].is_zero() && p->c[2].is_zero();
  const auto& nl = std::get<NamedLoad>(v_);
  return nl.id == "zero" || (!nl.params.empty() && nl.params[0] == 0.0);
}

bool VectorExpr::is_gradient_potential() const {
  const auto* n = as_named(*this);
  return n != nullptr && n->id == "gradient_potential";
}

double VectorExpr::potential(const Vec3& x) const {
  if (!is_gradient_potential()) throw std::logic_error("potential() requires a gradient_potential load");
  const auto& p = std::get<NamedLoad>(v_).params;
  return p[0] * bump(x[0] - p[1], p[4]) * bump(x[1] - p[2], p[5]) * bump(x[2] - p[3], p[6]);
}

double eval_L(const LoadSpec& spec, const QuadratureSet& q, const std::function<Vec3(const Vec3&)>& v) {
  double s = 0.0;
  if (!spec.f.is_zero())
    for (const auto& p : q.volume) s += p.w * dot(spec.f(p.x), v(p.x));
  if (!spec.g.is_zero())
    for (const auto& p : q.surface) s += p.w * dot(spec.g(p.x, p.n), v(p.x));
  return s;
}

double eval_L(const LoadSpec& spec, const DomainDesc& d, const std::function<Vec3(const Vec3&)>& v) {
  return eval_L(spec, load_quadrature(spec, d), v);
}

std::vector<double> load_vector(const LoadSpec& spec, const HexMesh& mesh) {
  std::vector<double> out(mesh.dof_count(), 0.0);
  auto add = [&](std::size_t node, const Vec3& val) {
    for (std::size_t c = 0; c < 3; ++c) out[3 * node + c] += val[c];
  };
  const GaussRule g3 = gauss_legendre(3);
  const Vec3 h = mesh.spacing();
  if (spec.f.is_gradient_potential()) {
    const auto& p = as_named(spec.f)->params;
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
      const Vec3 lo = mesh.nodes()[mesh.elements()[e][0]];
      double integral = p[0];
      for (std::size_t i = 0; i < 3; ++i) integral *= bump_integral(lo[i], lo[i] + h[i], p[1 + i], p[4 + i]);
      if (integral == 0.0) continue;
      for (int a = 0; a < 8; ++a) add(mesh.elements()[e][static_cast<std::size_t>(a)], -integral * mesh.center_grad(a));
    }
  } else if (!spec.f.is_zero()) {
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
      const Vec3 lo = mesh.nodes()[mesh.elements()[e][0]];
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
          for (std::size_t k = 0; k < 3; ++k) {
            const double xi[3] = {0.5 * (1.0 + g3.x[i]), 0.5 * (1.0 + g3.x[j]), 0.5 * (1.0 + g3.x[k])};
            const double w = g3.w[i] * g3.w[j] * g3.w[k] * mesh.element_volume() / 8.0;
            const Vec3 x{lo[0] + xi[0] * h[0], lo[1] + xi[1] * h[1], lo[2] + xi[2] * h[2]};
            const Vec3 fx = w * spec.f(x);
            for (int a = 0; a < 8; ++a) {
              double n = 1.0;
              for (int ax = 0; ax < 3; ++ax) n *= ((a >> ax) & 1) ? xi[ax] : 1.0 - xi[ax];
              add(mesh.elements()[e][static_cast<std::size_t>(a)], n * fx);
            }
          }
    }
  }
  if (!spec.g.is_zero()) {
    if (spec.g.is_gradient_potential()) throw std::invalid_argument("gradient_potential is a body force, not a traction");
    const auto& faces = mesh.boundary_faces();
    for (std::size_t fidx = 0; fidx < faces.size(); ++fidx) {
      const auto& f = faces[fidx];
      const double area = 4.0 * mesh.face_qp_weight(fidx);
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
          const double s = 0.5 * (1.0 + g3.x[i]), t = 0.5 * (1.0 + g3.x[j]);
          const std::array<double, 4> nb{(1 - s) * (1 - t), s * (1 - t), (1 - s) * t, s * t};
          Vec3 x;
          for (std::size_t b = 0; b < 4; ++b) x += nb[b] * mesh.nodes()[f.nodes[b]];
          const Vec3 gx = (0.25 * area * g3.w[i] * g3.w[j]) * spec.g(x, f.normal);
          for (std::size_t b = 0; b < 4; ++b) add(f.nodes[b], nb[b] * gx);
        }
    }
  }
  return out;
}

double eval_L(const std::vector<double>& load, const NodalField& v) {
  if (load.size() != 3 * v.size()) throw std::invalid_argument("eval_L: load vector and field sizes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t c = 0; c < 3; ++c) s += load[3 * i + c] * v[i][c];
  return s;
}

double eval_L(const LoadSpec& spec, const HexMesh& mesh, const NodalField& v) {
  check_compatible(mesh, v);
  return eval_L(load_vector(spec, mesh), v);
}

LoadSampler::LoadSampler(const LoadSpec& spec, const QuadratureSet& q) : q_(q) {
  fw_.reserve(q.volume.size());
  gw_.reserve(q.surface.size());
  for (const auto& p : q.volume) fw_.push_back(spec.f.is_zero() ? Vec3{} : p.w * spec.f(p.x));
  for (const auto& p : q.surface) gw_.push_back(spec.g.is_zero() ? Vec3{} : p.w * spec.g(p.x, p.n));
}

double LoadSampler::operator()(const std::vector<Vec3>& v_volume, const std::vector<Vec3>& v_surface) const {
  if (v_volume.size() != fw_.size() || v_surface.size() != gw_.size())
    throw std::invalid_argument("LoadSampler: sample counts do not match the quadrature");
  double s = 0.0;
  for (std::size_t i = 0; i < fw_.size(); ++i) s += dot(fw_[i], v_volume[i]);
  for (std::size_t i = 0; i < gw_.size(); ++i) s += dot(gw_[i], v_surface[i]);
  return s;
}

double LoadSampler::operator()(const std::function<Vec3(const Vec3&)>& v) const {
  double s = 0.0;
  for (std::size_t i = 0; i < fw_.size(); ++i) s += dot(fw_[i], v(q_.volume[i].x));
  for (std::size_t i = 0; i < gw_.size(); ++i) s += dot(gw_[i], v(q_.surface[i].x));
  return s;
}

MomentMatrix moment_matrix(const LoadSpec& spec, const DomainDesc& d) {
  const QuadratureSet q = load_quadrature(spec, d);
  MomentMatrix m;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const Vec3 ea = Vec3::unit(a);
      m.g(a, b) = eval_L(spec, q, [&](const Vec3& x) { return x[static_cast<std::size_t>(b)] * ea; });
    }
  return m;
}

MomentMatrix moment_matrix(const LoadSpec& spec, const HexMesh& mesh) {
  const auto load = load_vector(spec, mesh);
  MomentMatrix m;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const Vec3 ea = Vec3::unit(a);
      m.g(a, b) = eval_L(load, NodalField::sample(mesh, [&](const Vec3& x) { return x[static_cast<std::size_t>(b)] * ea; }));
    }
  return m;
}

double load_scale(const LoadSpec& spec, const DomainDesc& d) {
  const QuadratureSet q = load_quadrature(spec, d);
  double s = 0.0;
  if (!spec.f.is_zero())
    for (const auto& p : q.volume) s += p.w * norm(spec.f(p.x));
  if (!spec.g.is_zero())
    for (const auto& p : q.surface) s += p.w * norm(spec.g(p.x, p.n));
  return s;
}

namespace {

EquilibriumReport equilibrium_from(const std::function<double(const std::function<Vec3(const Vec3&)>&)>& l,
                                   double scale) {
  EquilibriumReport r;
  for (int a = 0; a < 3; ++a) {
    const Vec3 ea = Vec3::unit(a);
    r.resultant[static_cast<std::size_t>(a)] = l([&](const Vec3&) { return ea; });
    r.torque[static_cast<std::size_t>(a)] = l([&](const Vec3& x) { return cross(ea, x); });
  }
  const double tol = kTolEquilibrium * (1.0 + scale);
  r.pass = true;
  for (std::size_t a = 0; a < 3; ++a)
    if (std::abs(r.resultant[a]) > tol || std::abs(r.torque[a]) > tol) r.pass = false;
  return r;
}

}  // namespace

EquilibriumReport check_equilibrium(const LoadSpec& spec, const DomainDesc& d) {
  const QuadratureSet q = load_quadrature(spec, d);
  return equilibrium_from([&](const std::function<Vec3(const Vec3&)>& v) { return eval_L(spec, q, v); },
                          load_scale(spec, d));
}

EquilibriumReport check_equilibrium(const LoadSpec& spec, const HexMesh& mesh) {
  const auto load = load_vector(spec, mesh);
  return equilibrium_from(
      [&](const std::function<Vec3(const Vec3&)>& v) { return eval_L(load, NodalField::sample(mesh, v)); },
      load_scale(spec, DomainDesc{mesh.box()}));
}

std::string to_string(Compatibility c) {
  switch (c) {
    case Compatibility::StrictlyCompatible:
      return "strictly_compatible";
    case Compatibility::Marginal:
      return "marginal";
    case Compatibility::Violating:
      return "violating";
  }
  return "?";
}

CompatReport compatibility_report(const Vec3& resultant, const Vec3& torque, const Mat3& g) {
  CompatReport r;
  r.resultant = resultant;
  r.torque = torque;
  r.moment = g;
  const SymEig e = sym_eig(sym(g) - trace(g) * Mat3::identity());
  r.margin = e.values[2];
  r.worst_axis = {e.vectors(0, 2), e.vectors(1, 2), e.vectors(2, 2)};
  const double tol = kTolMargin * (1.0 + norm(g));
  if (r.margin < -tol)
    r.classification = Compatibility::StrictlyCompatible;
  else if (r.margin <= tol)
    r.classification = Compatibility::Marginal;
  else
    r.classification = Compatibility::Violating;
  return r;
}

CompatReport compatibility_margin(const LoadSpec& spec, const DomainDesc& d) {
  const auto eq = check_equilibrium(spec, d);
  return compatibility_report(eq.resultant, eq.torque, moment_matrix(spec, d).g);
}

CompatReport compatibility_margin(const LoadSpec& spec, const HexMesh& mesh) {
  const auto eq = check_equilibrium(spec, mesh);
  return compatibility_report(eq.resultant, eq.torque, moment_matrix(spec, mesh).g);
}

double compatibility_margin_oracle(const LoadSpec& spec, const DomainDesc& d, int n_dirs, std::uint64_t seed) {
  if (n_dirs < 1000) throw std::invalid_argument("compatibility_margin_oracle: need at least 1000 directions");
  const QuadratureSet q = load_quadrature(spec, d);
  // Weighted force samples (x, w·force); zero contributions dropped.
  std::vector<std::pair<Vec3, Vec3>> samples;
  if (!spec.f.is_zero())
    for (const auto& p : q.volume) samples.emplace_back(p.x, p.w * spec.f(p.x));
  if (!spec.g.is_zero())
    for (const auto& p : q.surface) samples.emplace_back(p.x, p.w * spec.g(p.x, p.n));
  Mat3 rot = Mat3::identity();
  if (seed != 0) {
    SplitMix64 rng(seed);
    rot = random_rotation(rng);
  }
  auto value = [&](const Vec3& w) {
    double s = 0.0;
    for (const auto& [x, fw] : samples) s += dot(fw, dot(w, x) * w - x);
    return s;
  };
  double best = -std::numeric_limits<double>::infinity();
  Vec3 best_w{0, 0, 1};
  for (int i = 0; i < n_dirs; ++i) {
    const Vec3 w = rot * fibonacci_direction(i, n_dirs);
    const double s = value(w);
    if (s > best) {
      best = s;
      best_w = w;
    }
  }
  // Local refinement: sunflower samples in a shrinking cap around the best direction.
  double radius = 4.0 / std::sqrt(static_cast<double>(n_dirs));
  constexpr int kCap = 64;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int round = 0; round < 48; ++round) {
    const Vec3 helper = std::abs(best_w[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    const Vec3 t1 = (1.0 / norm(cross(best_w, helper))) * cross(best_w, helper);
    const Vec3 t2 = cross(best_w, t1);
    const Vec3 center = best_w;
    for (int i = 1; i <= kCap; ++i) {
      const double r = radius * std::sqrt(static_cast<double>(i) / kCap);
      Vec3 w = center + r * std::cos(golden * i) * t1 + r * std::sin(golden * i) * t2;
      w = (1.0 / norm(w)) * w;
      const double s = value(w);
      if (s > best) {
        best = s;
        best_w = w;
      }
    }
    radius *= 0.5;
  }
  return best;
}

double load_bound_quotient(const LoadSpec& spec, const HexMesh& mesh, const NodalField& v) {
  const double e = strain_l2(mesh, v);
  const double scale = field_l2(mesh, v) + gradient_l2(mesh, v);
  if (!(e > 1e-12 * scale) || e == 0.0) throw std::invalid_argument("load_bound_quotient: rigid input (E(v) = 0)");
  const NodalField r = project_rigid(mesh, v).remainder;
  return std::abs(eval_L(spec, mesh, r)) / e;
}

}  // namespace traclin
