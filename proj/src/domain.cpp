#include "traclin/domain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

namespace traclin {

namespace {

constexpr double kPi = std::numbers::pi;

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

}  // namespace

void validate(const DomainDesc& d) {
  std::visit(Overloaded{[](const Box& b) {
                          for (int i = 0; i < 3; ++i)
                            if (!(b.half_extents[i] > 0.0)) throw std::invalid_argument("box: half extents must be positive");
                        },
                        [](const Ball& b) {
                          if (!(b.radius > 0.0)) throw std::invalid_argument("ball: radius must be positive");
                        },
                        [](const Cylinder& c) {
                          if (!(c.radius > 0.0 && c.height > 0.0))
                            throw std::invalid_argument("cylinder: radius and height must be positive");
                        }},
             d);
}

double volume(const DomainDesc& d) {
  return std::visit(Overloaded{[](const Box& b) { return 8.0 * b.half_extents[0] * b.half_extents[1] * b.half_extents[2]; },
                               [](const Ball& b) { return 4.0 / 3.0 * kPi * b.radius * b.radius * b.radius; },
                               [](const Cylinder& c) { return kPi * c.radius * c.radius * c.height; }},
                    d);
}

double boundary_area(const DomainDesc& d) {
  return std::visit(Overloaded{[](const Box& b) {
                                 const auto& e = b.half_extents;
                                 return 8.0 * (e[0] * e[1] + e[1] * e[2] + e[0] * e[2]);
                               },
                               [](const Ball& b) { return 4.0 * kPi * b.radius * b.radius; },
                               [](const Cylinder& c) { return 2.0 * kPi * c.radius * (c.radius + c.height); }},
                    d);
}

Vec3 centroid(const DomainDesc& d) {
  return std::visit(Overloaded{[](const Box& b) { return b.center; }, [](const Ball&) { return Vec3{}; },
                               [](const Cylinder& c) { return Vec3{0.0, 0.0, 0.5 * c.height}; }},
                    d);
}

GaussRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  GaussRule r;
  r.x.resize(static_cast<std::size_t>(n));
  r.w.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.x[static_cast<std::size_t>(i)] = x;
    r.w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

namespace {

// Maps a Gauss rule from [−1, 1] to [a, b].
struct MappedRule {
  std::vector<double> x, w;
};
MappedRule map_rule(const GaussRule& g, double a, double b) {
  MappedRule m;
  for (std::size_t i = 0; i < g.x.size(); ++i) {
    m.x.push_back(0.5 * (a + b) + 0.5 * (b - a) * g.x[i]);
    m.w.push_back(0.5 * (b - a) * g.w[i]);
  }
  return m;
}

}  // namespace

QuadratureSet box_quadrature(const Box& b, int points, const std::array<std::vector<double>, 3>& breaks) {
  validate(DomainDesc{b});
  const GaussRule g = gauss_legendre(points);
  std::array<MappedRule, 3> ax;
  for (std::size_t i = 0; i < 3; ++i) {
    const double lo = b.center[i] - b.half_extents[i], hi = b.center[i] + b.half_extents[i];
    std::vector<double> cuts{lo, hi};
    for (double c : breaks[i])
      if (c > lo && c < hi) cuts.push_back(c);
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      if (cuts[k + 1] - cuts[k] <= 0.0) continue;
      const MappedRule m = map_rule(g, cuts[k], cuts[k + 1]);
      ax[i].x.insert(ax[i].x.end(), m.x.begin(), m.x.end());
      ax[i].w.insert(ax[i].w.end(), m.w.begin(), m.w.end());
    }
  }
  QuadratureSet q;
  for (std::size_t i = 0; i < ax[0].x.size(); ++i)
    for (std::size_t j = 0; j < ax[1].x.size(); ++j)
      for (std::size_t k = 0; k < ax[2].x.size(); ++k)
        q.volume.push_back({{ax[0].x[i], ax[1].x[j], ax[2].x[k]}, ax[0].w[i] * ax[1].w[j] * ax[2].w[k]});
  for (int axis = 0; axis < 3; ++axis) {
    const auto t1 = static_cast<std::size_t>((axis + 1) % 3), t2 = static_cast<std::size_t>((axis + 2) % 3);
    for (int side : {-1, 1}) {
      Vec3 n;
      n[static_cast<std::size_t>(axis)] = side;
      for (std::size_t i = 0; i < ax[t1].x.size(); ++i)
        for (std::size_t j = 0; j < ax[t2].x.size(); ++j) {
          Vec3 x;
          x[static_cast<std::size_t>(axis)] = b.center[static_cast<std::size_t>(axis)] + side * b.half_extents[static_cast<std::size_t>(axis)];
          x[t1] = ax[t1].x[i];
          x[t2] = ax[t2].x[j];
          q.surface.push_back({x, n, ax[t1].w[i] * ax[t2].w[j]});
        }
    }
  }
  return q;
}

QuadratureSet analytic_quadrature(const DomainDesc& d, int points) {
  validate(d);
  const GaussRule g = gauss_legendre(points);
  QuadratureSet q;
  std::visit(
      Overloaded{
          [&](const Box& b) { q = box_quadrature(b, points); },
          [&](const Ball& b) {
            const MappedRule r = map_rule(g, 0.0, b.radius);
            const MappedRule mu = map_rule(g, -1.0, 1.0);
            const MappedRule phi = map_rule(g, 0.0, 2.0 * kPi);
            for (std::size_t i = 0; i < mu.x.size(); ++i)
              for (std::size_t j = 0; j < phi.x.size(); ++j) {
                const double s = std::sqrt(1.0 - mu.x[i] * mu.x[i]);
                const Vec3 n{s * std::cos(phi.x[j]), s * std::sin(phi.x[j]), mu.x[i]};
                const double wa = mu.w[i] * phi.w[j];
                q.surface.push_back({b.radius * n, n, b.radius * b.radius * wa});
                for (std::size_t k = 0; k < r.x.size(); ++k)
                  q.volume.push_back({r.x[k] * n, r.x[k] * r.x[k] * r.w[k] * wa});
              }
          },
          [&](const Cylinder& c) {
            const MappedRule r = map_rule(g, 0.0, c.radius);
            const MappedRule phi = map_rule(g, 0.0, 2.0 * kPi);
            const MappedRule z = map_rule(g, 0.0, c.height);
            for (std::size_t j = 0; j < phi.x.size(); ++j) {
              const double cp = std::cos(phi.x[j]), sp = std::sin(phi.x[j]);
              for (std::size_t k = 0; k < z.x.size(); ++k) {
                q.surface.push_back({{c.radius * cp, c.radius * sp, z.x[k]}, {cp, sp, 0.0}, c.radius * phi.w[j] * z.w[k]});
                for (std::size_t i = 0; i < r.x.size(); ++i)
                  q.volume.push_back({{r.x[i] * cp, r.x[i] * sp, z.x[k]}, r.x[i] * r.w[i] * phi.w[j] * z.w[k]});
              }
              for (std::size_t i = 0; i < r.x.size(); ++i) {
                const double wa = r.x[i] * r.w[i] * phi.w[j];
                q.surface.push_back({{r.x[i] * cp, r.x[i] * sp, 0.0}, {0.0, 0.0, -1.0}, wa});
                q.surface.push_back({{r.x[i] * cp, r.x[i] * sp, c.height}, {0.0, 0.0, 1.0}, wa});
              }
            }
          }},
      d);
  return q;
}

// ---------------------------------------------------------------------------
// HexMesh

namespace {

// Local node a ↔ corner offsets (a & 1, (a >> 1) & 1, (a >> 2) & 1).
int bit(int a, int axis) { return (a >> axis) & 1; }

double lin(int b, double xi) { return b ? xi : 1.0 - xi; }
double dlin(int b) { return b ? 1.0 : -1.0; }

}  // namespace

HexMesh build_box_mesh(const Box& desc, int n) {
  validate(DomainDesc{desc});
  if (n < 2 || n > 64) {
    std::ostringstream os;
    os << "build_box_mesh: n_per_axis must lie in [2, 64], got " << n;
    throw std::invalid_argument(os.str());
  }
  HexMesh m;
  m.box_ = desc;
  m.n_ = n;
  Vec3 lo;
  for (int i = 0; i < 3; ++i) {
    m.spacing_[i] = 2.0 * desc.half_extents[i] / n;
    lo[i] = desc.center[i] - desc.half_extents[i];
  }
  const auto np = static_cast<std::size_t>(n + 1);
  m.nodes_.reserve(np * np * np);
  for (int k = 0; k <= n; ++k)
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i)
        m.nodes_.push_back({lo[0] + i * m.spacing_[0], lo[1] + j * m.spacing_[1], lo[2] + k * m.spacing_[2]});
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        std::array<std::size_t, 8> el{};
        for (int a = 0; a < 8; ++a) el[static_cast<std::size_t>(a)] = m.node_index(i + bit(a, 0), j + bit(a, 1), k + bit(a, 2));
        m.elements_.push_back(el);
      }

  const double g = 0.5 / std::sqrt(3.0);
  const std::array<double, 2> pts{0.5 - g, 0.5 + g};
  for (int q = 0; q < 8; ++q) {
    const double xi[3] = {pts[static_cast<std::size_t>(bit(q, 0))], pts[static_cast<std::size_t>(bit(q, 1))],
                          pts[static_cast<std::size_t>(bit(q, 2))]};
    for (int ax = 0; ax < 3; ++ax) m.qp_ref_[static_cast<std::size_t>(q)][ax] = xi[ax] * m.spacing_[ax];
    for (int a = 0; a < 8; ++a) {
      const int b0 = bit(a, 0), b1 = bit(a, 1), b2 = bit(a, 2);
      m.shape_[static_cast<std::size_t>(q)][static_cast<std::size_t>(a)] = lin(b0, xi[0]) * lin(b1, xi[1]) * lin(b2, xi[2]);
      m.grad_[static_cast<std::size_t>(q)][static_cast<std::size_t>(a)] = {
          dlin(b0) * lin(b1, xi[1]) * lin(b2, xi[2]) / m.spacing_[0],
          lin(b0, xi[0]) * dlin(b1) * lin(b2, xi[2]) / m.spacing_[1],
          lin(b0, xi[0]) * lin(b1, xi[1]) * dlin(b2) / m.spacing_[2]};
    }
  }
  for (int a = 0; a < 8; ++a) {
    const int b0 = bit(a, 0), b1 = bit(a, 1), b2 = bit(a, 2);
    m.center_grad_[static_cast<std::size_t>(a)] = {dlin(b0) * 0.25 / m.spacing_[0], dlin(b1) * 0.25 / m.spacing_[1],
                                                   dlin(b2) * 0.25 / m.spacing_[2]};
  }
  const double jac = m.spacing_[0] * m.spacing_[1] * m.spacing_[2];
  if (!(jac > 0.0)) throw std::logic_error("build_box_mesh: nonpositive Jacobian");
  m.qp_weight_ = jac / 8.0;

  for (int q = 0; q < 4; ++q) {
    const double s = pts[static_cast<std::size_t>(bit(q, 0))], t = pts[static_cast<std::size_t>(bit(q, 1))];
    for (int b = 0; b < 4; ++b)
      m.face_shape_[static_cast<std::size_t>(q)][static_cast<std::size_t>(b)] = lin(bit(b, 0), s) * lin(bit(b, 1), t);
  }
  // Boundary faces: for each axis and side, local face nodes ordered by the two tangential axes.
  for (int axis = 0; axis < 3; ++axis) {
    const int t1 = axis == 0 ? 1 : 0;
    const int t2 = axis == 2 ? 1 : 2;
    for (int side = 0; side < 2; ++side) {
      Vec3 normal;
      normal[axis] = side ? 1.0 : -1.0;
      for (int b = 0; b < n; ++b)
        for (int a = 0; a < n; ++a) {
          int ijk[3];
          ijk[axis] = side ? n - 1 : 0;
          ijk[t1] = a;
          ijk[t2] = b;
          const std::size_t e = static_cast<std::size_t>(ijk[0] + n * (ijk[1] + n * ijk[2]));
          HexMesh::Face f{};
          f.normal = normal;
          f.element = e;
          for (int c = 0; c < 4; ++c) {
            int nijk[3];
            nijk[axis] = ijk[axis] + side;
            nijk[t1] = ijk[t1] + bit(c, 0);
            nijk[t2] = ijk[t2] + bit(c, 1);
            f.nodes[static_cast<std::size_t>(c)] = m.node_index(nijk[0], nijk[1], nijk[2]);
          }
          m.faces_.push_back(f);
          m.face_weight_.push_back(m.spacing_[t1] * m.spacing_[t2] / 4.0);
        }
    }
  }
  return m;
}

std::size_t HexMesh::node_index(int i, int j, int k) const {
  const auto np = static_cast<std::size_t>(n_ + 1);
  return static_cast<std::size_t>(i) + np * (static_cast<std::size_t>(j) + np * static_cast<std::size_t>(k));
}

double HexMesh::h_mesh() const { return std::max({spacing_[0], spacing_[1], spacing_[2]}); }

Vec3 HexMesh::qp_position(std::size_t e, int qp) const {
  return nodes_[elements_[e][0]] + qp_ref_[static_cast<std::size_t>(qp)];
}

Vec3 HexMesh::element_center(std::size_t e) const { return nodes_[elements_[e][0]] + 0.5 * spacing_; }

Vec3 HexMesh::face_qp_position(std::size_t f, int q) const {
  Vec3 x;
  for (int b = 0; b < 4; ++b) x += face_shape(q, b) * nodes_[faces_[f].nodes[static_cast<std::size_t>(b)]];
  return x;
}

QuadratureSet HexMesh::quadrature() const {
  QuadratureSet q;
  q.volume.reserve(elements_.size() * kQp);
  for (std::size_t e = 0; e < elements_.size(); ++e)
    for (int p = 0; p < kQp; ++p) q.volume.push_back({qp_position(e, p), qp_weight_});
  for (std::size_t f = 0; f < faces_.size(); ++f)
    for (int p = 0; p < kFaceQp; ++p) q.surface.push_back({face_qp_position(f, p), faces_[f].normal, face_weight_[f]});
  return q;
}

// ---------------------------------------------------------------------------
// NodalField

NodalField NodalField::sample(const HexMesh& mesh, const std::function<Vec3(const Vec3&)>& fn) {
  NodalField v(mesh.node_count());
  for (std::size_t i = 0; i < mesh.node_count(); ++i) v[i] = fn(mesh.nodes()[i]);
  return v;
}

NodalField NodalField::from_flat(const std::vector<double>& flat) {
  if (flat.size() % 3 != 0) throw std::invalid_argument("NodalField: flat size not a multiple of 3");
  NodalField v(flat.size() / 3);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = {flat[3 * i], flat[3 * i + 1], flat[3 * i + 2]};
  return v;
}

std::vector<double> NodalField::flat() const {
  std::vector<double> out(3 * values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i)
    for (int c = 0; c < 3; ++c) out[3 * i + static_cast<std::size_t>(c)] = values_[i][c];
  return out;
}

bool NodalField::is_finite() const {
  for (const auto& x : values_)
    for (int c = 0; c < 3; ++c)
      if (!std::isfinite(x[c])) return false;
  return true;
}

NodalField& NodalField::operator+=(const NodalField& o) {
  if (o.size() != size()) throw std::invalid_argument("NodalField: size mismatch");
  for (std::size_t i = 0; i < size(); ++i) values_[i] += o.values_[i];
  return *this;
}

NodalField& NodalField::operator*=(double s) {
  for (auto& x : values_) x *= s;
  return *this;
}

void check_compatible(const HexMesh& mesh, const NodalField& v) {
  if (v.size() != mesh.node_count()) {
    std::ostringstream os;
    os << "nodal field has " << v.size() << " entries, mesh has " << mesh.node_count() << " nodes";
    throw std::invalid_argument(os.str());
  }
}

Mat3 gradient(const HexMesh& mesh, const NodalField& v, std::size_t e, int qp) {
  Mat3 g;
  const auto& el = mesh.elements()[e];
  for (int a = 0; a < 8; ++a) {
    const Vec3& va = v[el[static_cast<std::size_t>(a)]];
    const Vec3& da = mesh.shape_grad(qp, a);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) g(i, j) += va[i] * da[j];
  }
  return g;
}

Mat3 center_gradient(const HexMesh& mesh, const NodalField& v, std::size_t e) {
  Mat3 g;
  const auto& el = mesh.elements()[e];
  for (int a = 0; a < 8; ++a) {
    const Vec3& va = v[el[static_cast<std::size_t>(a)]];
    const Vec3& da = mesh.center_grad(a);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) g(i, j) += va[i] * da[j];
  }
  return g;
}

Mat3 strain(const HexMesh& mesh, const NodalField& v, std::size_t e, int qp) { return sym(gradient(mesh, v, e, qp)); }

double element_divergence(const HexMesh& mesh, const NodalField& v, std::size_t e) {
  return trace(center_gradient(mesh, v, e));
}

double strain_l2(const HexMesh& mesh, const NodalField& v) {
  check_compatible(mesh, v);
  double s = 0.0;
  for (std::size_t e = 0; e < mesh.element_count(); ++e)
    for (int q = 0; q < HexMesh::kQp; ++q) {
      const Mat3 E = strain(mesh, v, e, q);
      s += mesh.qp_weight() * ddot(E, E);
    }
  return std::sqrt(s);
}

double gradient_l2(const HexMesh& mesh, const NodalField& v) {
  check_compatible(mesh, v);
  double s = 0.0;
  for (std::size_t e = 0; e < mesh.element_count(); ++e)
    for (int q = 0; q < HexMesh::kQp; ++q) {
      const Mat3 G = gradient(mesh, v, e, q);
      s += mesh.qp_weight() * ddot(G, G);
    }
  return std::sqrt(s);
}

double field_l2(const HexMesh& mesh, const NodalField& v) {
  check_compatible(mesh, v);
  double s = 0.0;
  for (std::size_t e = 0; e < mesh.element_count(); ++e)
    for (int q = 0; q < HexMesh::kQp; ++q) {
      Vec3 u;
      for (int a = 0; a < 8; ++a) u += mesh.shape(q, a) * v[mesh.elements()[e][static_cast<std::size_t>(a)]];
      s += mesh.qp_weight() * dot(u, u);
    }
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// TensorField

TensorField::TensorField(const HexMesh& mesh, const MaterialModel& model) {
  std::map<const MaterialModel*, std::size_t> cache;
  index_.resize(mesh.element_count() * HexMesh::kQp);
  for (std::size_t e = 0; e < mesh.element_count(); ++e)
    for (int q = 0; q < HexMesh::kQp; ++q) {
      const Vec3 x = mesh.qp_position(e, q);
      const MaterialModel* local = &model.at(x);
      auto it = cache.find(local);
      if (it == cache.end()) {
        tensors_.push_back(hessian_identity(*local, x).tensor);
        it = cache.emplace(local, tensors_.size() - 1).first;
      }
      index_[e * HexMesh::kQp + static_cast<std::size_t>(q)] = it->second;
    }
}

TensorField::TensorField(const HexMesh& mesh, const ElasticityTensor& c)
    : tensors_{c}, index_(mesh.element_count() * HexMesh::kQp, 0) {}

double TensorField::max_bound() const {
  double b = 0.0;
  for (const auto& t : tensors_) b = std::max(b, t.frobenius());
  return b;
}

// ---------------------------------------------------------------------------
// Energy integration

EnergyIntegral integrate_energy(const HexMesh& mesh, const QuadraticMode& mode, const NodalField& v) {
  check_compatible(mesh, v);
  if (mode.tensors == nullptr) throw std::invalid_argument("integrate_energy: quadratic mode needs a tensor field");
  EnergyIntegral r;
  double sum = 0.0;
  bool infinite = false;
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const double div_e = element_divergence(mesh, v, e);
    for (int q = 0; q < HexMesh::kQp; ++q) {
      // Volumetric strain replaced by its element mean (B-bar): the trace constraint is per element.
      const Mat3 E = strain(mesh, v, e, q);
      const Mat3 Ebar = E + ((div_e - trace(E)) / 3.0) * Mat3::identity() - mode.shift;
      const double tr = std::abs(trace(Ebar));
      const double allowed = 1e-8 * (1.0 + norm(Ebar));
      if (tr > r.worst_violation) {
        r.worst_violation = tr;
        r.worst_element = e;
        r.worst_qp = q;
      }
      if (tr > allowed) {
        infinite = true;
        continue;
      }
      sum += mesh.qp_weight() * 0.5 * mode.tensors->at(e, q).quad(Ebar);
    }
  }
  r.value = infinite ? ExtendedScalar::infinity() : ExtendedScalar::finite(sum);
  return r;
}

namespace {

template <class GradAt>
EnergyIntegral nonlinear_energy(const HexMesh& mesh, const NonlinearMode& mode, GradAt&& grad_at) {
  if (mode.model == nullptr) throw std::invalid_argument("integrate_energy: nonlinear mode needs a model");
  if (!(mode.h > 0.0)) throw std::invalid_argument("integrate_energy: h must be positive");
  EnergyIntegral r;
  double sum = 0.0;
  bool infinite = false;
  for (std::size_t e = 0; e < mesh.element_count(); ++e)
    for (int q = 0; q < HexMesh::kQp; ++q) {
      const Mat3 F = Mat3::identity() + mode.h * grad_at(e, q);
      const double viol = std::abs(det(F) - 1.0);
      if (viol > r.worst_violation) {
        r.worst_violation = viol;
        r.worst_element = e;
        r.worst_qp = q;
      }
      const ExtendedScalar w = eval_WI(*mode.model, mesh.qp_position(e, q), F, mode.tol);
      if (w.is_infinite()) {
        infinite = true;
        continue;
      }
      sum += mesh.qp_weight() * w.value();
    }
  r.value = infinite ? ExtendedScalar::infinity() : ExtendedScalar::finite(sum / (mode.h * mode.h));
  return r;
}

}  // namespace

EnergyIntegral integrate_energy(const HexMesh& mesh, const NonlinearMode& mode, const NodalField& v) {
  check_compatible(mesh, v);
  return nonlinear_energy(mesh, mode, [&](std::size_t e, int q) { return gradient(mesh, v, e, q); });
}

EnergyIntegral integrate_energy(const HexMesh& mesh, const NonlinearMode& mode, const std::vector<Mat3>& qp_gradients) {
  if (qp_gradients.size() != mesh.element_count() * HexMesh::kQp)
    throw std::invalid_argument("integrate_energy: need one gradient per element quadrature point");
  return nonlinear_energy(mesh, mode, [&](std::size_t e, int q) {
    return qp_gradients[e * HexMesh::kQp + static_cast<std::size_t>(q)];
  });
}

double surface_quadrature(const QuadratureSet& q, const std::function<double(const Vec3&, const Vec3&)>& integrand) {
  double s = 0.0;
  for (const auto& p : q.surface) s += p.w * integrand(p.x, p.n);
  return s;
}

Vec3 surface_quadrature_vec(const QuadratureSet& q, const std::function<Vec3(const Vec3&, const Vec3&)>& integrand) {
  Vec3 s;
  for (const auto& p : q.surface) s += p.w * integrand(p.x, p.n);
  return s;
}

double volume_quadrature(const QuadratureSet& q, const std::function<double(const Vec3&)>& integrand) {
  double s = 0.0;
  for (const auto& p : q.volume) s += p.w * integrand(p.x);
  return s;
}

}  // namespace traclin
