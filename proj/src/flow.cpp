#include "traclin/flow.hpp"

#include <cmath>
#include <sstream>

#include "traclin/parallel.hpp"

namespace traclin {

namespace {

Vec3 box_lo(const Box& b) { return b.center - b.half_extents; }

bool inside(const Box& b, const Vec3& x) {
  for (int i = 0; i < 3; ++i) {
    const double slack = 1e-12 * (1.0 + b.half_extents[i]);
    if (std::abs(x[i] - b.center[i]) > b.half_extents[i] + slack) return false;
  }
  return true;
}

// Element containing x (clamped to the grid) and local coordinates in [0, 1]³.
std::size_t locate(const HexMesh& m, const Vec3& x, Vec3& xi) {
  const Vec3 lo = box_lo(m.box());
  int ijk[3];
  for (int a = 0; a < 3; ++a) {
    const double s = (x[a] - lo[a]) / m.spacing()[a];
    int i = static_cast<int>(std::floor(s));
    i = std::clamp(i, 0, m.n() - 1);
    ijk[a] = i;
    xi[a] = std::clamp(s - i, 0.0, 1.0);
  }
  const auto n = static_cast<std::size_t>(m.n());
  return static_cast<std::size_t>(ijk[0]) + n * (static_cast<std::size_t>(ijk[1]) + n * static_cast<std::size_t>(ijk[2]));
}

void trilinear(const Sampled& s, const Vec3& x, Vec3& v, Mat3& g) {
  Vec3 xi;
  const std::size_t e = locate(s.mesh, x, xi);
  const auto& el = s.mesh.elements()[e];
  v = Vec3{};
  g = Mat3::zero();
  for (int a = 0; a < 8; ++a) {
    const int b[3] = {a & 1, (a >> 1) & 1, (a >> 2) & 1};
    double l[3], d[3];
    for (int k = 0; k < 3; ++k) {
      l[k] = b[k] ? xi[k] : 1.0 - xi[k];
      d[k] = (b[k] ? 1.0 : -1.0) / s.mesh.spacing()[k];
    }
    const Vec3 grad{d[0] * l[1] * l[2], l[0] * d[1] * l[2], l[0] * l[1] * d[2]};
    const Vec3& u = s.values[el[static_cast<std::size_t>(a)]];
    v += (l[0] * l[1] * l[2]) * u;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) g(i, j) += u[i] * grad[j];
  }
}

double hess_norm(const std::array<Mat3, 3>& h) {
  return std::sqrt(ddot(h[0], h[0]) + ddot(h[1], h[1]) + ddot(h[2], h[2]));
}

bool element_interior(const HexMesh& m, std::size_t e, int layers) {
  const auto n = static_cast<std::size_t>(m.n());
  const std::size_t idx[3] = {e % n, (e / n) % n, e / (n * n)};
  for (std::size_t i : idx)
    if (static_cast<int>(i) < layers || static_cast<int>(i) >= m.n() - layers) return false;
  return true;
}

}  // namespace

Sampled make_sampled(HexMesh mesh, NodalField values, int margin_layers) {
  check_compatible(mesh, values);
  if (margin_layers < 0 || 2 * margin_layers >= mesh.n())
    throw std::invalid_argument("make_sampled: margin_layers leaves no interior elements");
  Sampled s{std::move(mesh), std::move(values), margin_layers, 0.0};
  for (std::size_t e = 0; e < s.mesh.element_count(); ++e)
    if (element_interior(s.mesh, e, margin_layers))
      s.div_residual = std::max(s.div_residual, std::abs(element_divergence(s.mesh, s.values, e)));
  return s;
}

DivFreeField::DivFreeField(Variant v) : v_(std::move(v)) {
  if (const auto* c = std::get_if<CurlOf>(&v_)) curl_ = CompiledPolyVec(c->potential.curl());
}

void DivFreeField::value_and_gradient(const Vec3& x, Vec3& v, Mat3& g) const {
  if (std::holds_alternative<CurlOf>(v_)) {
    curl_.value_and_jacobian(x, v, g);
  } else if (const auto* s = std::get_if<LinearSkew>(&v_)) {
    g = s->scale * skew_of(s->w);
    v = g * x;
  } else {
    trilinear(std::get<Sampled>(v_), x, v, g);
  }
}

Vec3 DivFreeField::value(const Vec3& x) const {
  Vec3 v;
  Mat3 g;
  value_and_gradient(x, v, g);
  return v;
}

std::array<Mat3, 3> DivFreeField::hessian(const Vec3& x) const {
  if (std::holds_alternative<CurlOf>(v_)) return curl_.hessian(x);
  return {Mat3::zero(), Mat3::zero(), Mat3::zero()};
}

bool DivFreeField::evaluable(const Vec3& x) const {
  if (const auto* s = std::get_if<Sampled>(&v_)) return inside(s->mesh.box(), x);
  return true;
}

double DivFreeField::div_residual() const {
  if (const auto* s = std::get_if<Sampled>(&v_)) return s->div_residual;
  return 0.0;
}

DivFreeField builtin_field(const std::string& name) {
  auto a3 = [](Poly p) {
    PolyVec a;
    a.c[2] = std::move(p);
    return DivFreeField(CurlOf{a});
  };
  if (name == "zero") return DivFreeField::zero();
  if (name == "stretch") return a3(Poly({Monomial{1.0, {1, 1, 0}}}));
  if (name == "rotation") return DivFreeField(LinearSkew{AxialVector{{1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0}}, 1.0});
  if (name == "shear") return a3(Poly({Monomial{1.0 / 3.0, {0, 3, 0}}}));
  if (name == "vortex") return a3(Poly({Monomial{0.5, {2, 2, 0}}}));
  throw std::invalid_argument("builtin_field: unknown field '" + name + "'");
}

const std::vector<std::string>& builtin_field_names() {
  static const std::vector<std::string> names{"zero", "stretch", "rotation", "shear", "vortex"};
  return names;
}

Box inflate(const Box& b, double fraction) { return Box{b.center, (1.0 + fraction) * b.half_extents}; }

FlowExit::FlowExit(const Vec3& s, const Vec3& p, double t)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "integrate_flow: trajectory from (" << s[0] << ", " << s[1] << ", " << s[2] << ") left the region at ("
           << p[0] << ", " << p[1] << ", " << p[2] << "), t = " << t;
        return os.str();
      }()),
      start(s),
      exit_point(p),
      time(t) {}

FlowResult integrate_flow(const DivFreeField& v, double h, int substeps, const std::vector<Vec3>& points,
                          const Box& omega_prime, int workers) {
  if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("integrate_flow: h must lie in (0, 1)");
  if (substeps < 4) throw std::invalid_argument("integrate_flow: substeps must be at least 4");
  FlowResult r;
  r.y.resize(points.size());
  r.F.resize(points.size());
  r.steps = substeps;
  const double dt = h / substeps;
  parallel_for(points.size(), workers, [&](std::size_t p) {
    const Vec3 x0 = points[p];
    Vec3 y = x0;
    Mat3 f = Mat3::identity();
    auto rhs = [&](const Vec3& yy, const Mat3& ff, double t, Vec3& dy, Mat3& df) {
      if (!inside(omega_prime, yy) || !v.evaluable(yy)) throw FlowExit(x0, yy, t);
      Mat3 g;
      v.value_and_gradient(yy, dy, g);
      df = g * ff;
    };
    for (int s = 0; s < substeps; ++s) {
      const double t = s * dt;
      Vec3 k1, k2, k3, k4;
      Mat3 m1, m2, m3, m4;
      rhs(y, f, t, k1, m1);
      rhs(y + (0.5 * dt) * k1, f + (0.5 * dt) * m1, t + 0.5 * dt, k2, m2);
      rhs(y + (0.5 * dt) * k2, f + (0.5 * dt) * m2, t + 0.5 * dt, k3, m3);
      rhs(y + dt * k3, f + dt * m3, t + dt, k4, m4);
      y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      f += (dt / 6.0) * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
    }
    if (!inside(omega_prime, y) || !v.evaluable(y)) throw FlowExit(x0, y, h);
    r.y[p] = y;
    r.F[p] = f;
  });
  for (const Mat3& f : r.F) r.det_residual = std::max(r.det_residual, std::abs(det(f) - 1.0));
  return r;
}

double q_bound(double z) {
  if (!(z >= 0.0)) throw std::invalid_argument("q_bound: z must be nonnegative");
  return z * std::exp(z);
}

FieldNorms field_norms(const DivFreeField& v, const Box& region, int samples) {
  if (samples < 2) throw std::invalid_argument("field_norms: need at least 2 samples per axis");
  FieldNorms out;
  if (const auto* s = std::get_if<Sampled>(&v.variant())) {
    // Trilinear data: nodal values, element-center gradients, and gradient jumps between neighbours.
    for (const Vec3& u : s->values.values()) out.sup_v = std::max(out.sup_v, norm(u));
    const auto n = static_cast<std::size_t>(s->mesh.n());
    std::vector<Mat3> cg(s->mesh.element_count());
    for (std::size_t e = 0; e < cg.size(); ++e) {
      cg[e] = center_gradient(s->mesh, s->values, e);
      out.sup_grad = std::max(out.sup_grad, norm(cg[e]));
    }
    for (std::size_t e = 0; e < cg.size(); ++e) {
      std::array<Mat3, 3> d{};
      const std::size_t idx[3] = {e % n, (e / n) % n, e / (n * n)};
      const std::size_t stride[3] = {1, n, n * n};
      for (int a = 0; a < 3; ++a) {
        if (idx[a] + 1 < n) d[static_cast<std::size_t>(a)] = (1.0 / s->mesh.spacing()[a]) * (cg[e + stride[a]] - cg[e]);
      }
      out.sup_hess = std::max(out.sup_hess, hess_norm(d));
    }
    return out;
  }
  const Vec3 lo = box_lo(region);
  for (int k = 0; k < samples; ++k)
    for (int j = 0; j < samples; ++j)
      for (int i = 0; i < samples; ++i) {
        const Vec3 x = lo + Vec3{2.0 * region.half_extents[0] * i / (samples - 1),
                                 2.0 * region.half_extents[1] * j / (samples - 1),
                                 2.0 * region.half_extents[2] * k / (samples - 1)};
        Vec3 u;
        Mat3 g;
        v.value_and_gradient(x, u, g);
        out.sup_v = std::max(out.sup_v, norm(u));
        out.sup_grad = std::max(out.sup_grad, norm(g));
        out.sup_hess = std::max(out.sup_hess, hess_norm(v.hessian(x)));
      }
  return out;
}

Recovery recovery_field(const DivFreeField& v, double h, int substeps, const HexMesh& mesh, int workers, bool bounds) {
  const Sampled* s = std::get_if<Sampled>(&v.variant());
  const Box region = s ? s->mesh.box() : inflate(mesh.box(), 0.25);

  std::vector<Vec3> pts = mesh.nodes();
  for (std::size_t e = 0; e < mesh.element_count(); ++e)
    for (int q = 0; q < HexMesh::kQp; ++q) pts.push_back(mesh.qp_position(e, q));
  const FlowResult flow = integrate_flow(v, h, substeps, pts, region, workers);

  Recovery out;
  out.field = NodalField(mesh.node_count());
  RecoveryReport& rep = out.report;
  rep.h = h;
  rep.substeps = substeps;
  rep.det_residual = flow.det_residual;
  for (std::size_t p = 0; p < pts.size(); ++p) {
    const Vec3 vh = (1.0 / h) * (flow.y[p] - pts[p]);
    if (p < mesh.node_count()) out.field[p] = vh;
    else out.qp_gradients.push_back((1.0 / h) * (flow.F[p] - Mat3::identity()));
    if (!bounds) continue;
    Vec3 u;
    Mat3 g;
    v.value_and_gradient(pts[p], u, g);
    const Mat3 hg = flow.F[p] - Mat3::identity();
    rep.sup_err_v = std::max(rep.sup_err_v, norm(vh - u));
    rep.sup_err_grad = std::max(rep.sup_err_grad, norm((1.0 / h) * hg - g));
    rep.sup_h_grad = std::max(rep.sup_h_grad, norm(hg));
  }
  if (!bounds) return out;
  rep.norms = field_norms(v, region);
  const double q = q_bound(h * rep.norms.w1());
  rep.bound_flux2 = rep.norms.sup_v * q;
  rep.bound_flux3 = q;
  rep.bound_flux4 = (1.0 + std::exp(h * rep.norms.w1())) * rep.norms.w2() * q;
  return out;
}

Mollifier::Mollifier(double epsilon) : eps_(epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("Mollifier: epsilon must be positive");
}

double Mollifier::operator()(double t) const {
  const double s = t / eps_;
  if (std::abs(s) >= 1.0) return 0.0;
  const double b = 1.0 - s * s;
  return 35.0 / (32.0 * eps_) * b * b * b;
}

std::vector<double> Mollifier::discrete(double spacing) const {
  if (!(spacing > 0.0)) throw std::invalid_argument("Mollifier::discrete: spacing must be positive");
  std::vector<double> w;
  for (int j = 0;; ++j) {
    const double k = (*this)(j * spacing);
    if (k <= 0.0) break;
    w.push_back(k);
  }
  double total = w[0];
  for (std::size_t j = 1; j < w.size(); ++j) total += 2.0 * w[j];
  for (double& x : w) x /= total;
  return w;
}

Sampled mollify(const Sampled& field, const Mollifier& m) {
  const HexMesh& mesh = field.mesh;
  int reach = 0;
  std::array<std::vector<double>, 3> kernels;
  for (int a = 0; a < 3; ++a) {
    if (m.epsilon() < 2.0 * mesh.spacing()[a] * (1.0 - 1e-12)) {
      std::ostringstream os;
      os << "mollify: epsilon " << m.epsilon() << " is below two grid spacings (" << 2.0 * mesh.spacing()[a] << ")";
      throw std::invalid_argument(os.str());
    }
    kernels[static_cast<std::size_t>(a)] = m.discrete(mesh.spacing()[a]);
    reach = std::max(reach, static_cast<int>(kernels[static_cast<std::size_t>(a)].size()) - 1);
  }
  const int np = mesh.n() + 1;
  std::vector<Vec3> cur = field.values.values(), next(cur.size());
  for (int a = 0; a < 3; ++a) {
    const auto& w = kernels[static_cast<std::size_t>(a)];
    const int r = static_cast<int>(w.size()) - 1;
    for (int k = 0; k < np; ++k)
      for (int j = 0; j < np; ++j)
        for (int i = 0; i < np; ++i) {
          int ijk[3] = {i, j, k};
          const int c = ijk[a];
          Vec3 acc;
          double mass = 0.0;
          for (int d = -r; d <= r; ++d) {
            const int t = c + d;
            if (t < 0 || t >= np) continue;
            ijk[a] = t;
            const double wt = w[static_cast<std::size_t>(std::abs(d))];
            acc += wt * cur[mesh.node_index(ijk[0], ijk[1], ijk[2])];
            mass += wt;
          }
          next[mesh.node_index(i, j, k)] = (1.0 / mass) * acc;
        }
    std::swap(cur, next);
  }
  const int layers = std::max(field.margin_layers, reach);
  if (2 * layers >= mesh.n()) throw std::invalid_argument("mollify: epsilon leaves no interior elements on this grid");
  return make_sampled(mesh, NodalField(std::move(cur)), layers);
}

double sampled_w1_norm(const Sampled& field, int layers) {
  const HexMesh& m = field.mesh;
  double out = 0.0;
  for (std::size_t e = 0; e < m.element_count(); ++e) {
    if (!element_interior(m, e, layers)) continue;
    out = std::max(out, norm(center_gradient(m, field.values, e)));
    for (std::size_t node : m.elements()[e]) out = std::max(out, norm(field.values[node]));
  }
  return out;
}

}  // namespace traclin
