#include "traclin/energy.hpp"

#include <cmath>
#include <sstream>

#include "traclin/rng.hpp"

namespace traclin {

double ExtendedScalar::value() const {
  if (infinite_) throw std::domain_error("ExtendedScalar: value() on +inf");
  return value_;
}

ExtendedScalar operator*(double s, const ExtendedScalar& a) {
  if (s < 0.0) throw std::invalid_argument("ExtendedScalar: negative scaling");
  if (a.infinite_) return ExtendedScalar::infinity();
  return ExtendedScalar::finite(s * a.value_);
}

std::string to_string(const ExtendedScalar& x) {
  if (x.is_infinite()) return "+inf";
  std::ostringstream os;
  os.precision(17);
  os << x.value();
  return os.str();
}

MaterialModel::MaterialModel(Variant v) : v_(std::move(v)) {
  if (const auto* og = std::get_if<Ogden>(&v_)) {
    if (og->terms.empty()) throw std::invalid_argument("Ogden model needs at least one term");
    for (const auto& t : og->terms) {
      if (!(t.mu * t.alpha > 0.0)) {
        std::ostringstream os;
        os << "Ogden term needs mu*alpha > 0, got mu=" << t.mu << " alpha=" << t.alpha;
        throw std::invalid_argument(os.str());
      }
    }
  }
  if (const auto* pc = std::get_if<PiecewiseConstant>(&v_)) {
    if (pc->regions.empty()) throw std::invalid_argument("piecewise model needs at least one region");
    for (const auto& r : pc->regions)
      if (!r.model) throw std::invalid_argument("piecewise model: null region model");
  }
}

const MaterialModel& MaterialModel::at(const Vec3& x) const {
  if (const auto* pc = std::get_if<PiecewiseConstant>(&v_)) {
    for (const auto& r : pc->regions)
      if (r.box.contains(x)) return r.model->at(x);
    std::ostringstream os;
    os << "piecewise model: no region contains (" << x[0] << ", " << x[1] << ", " << x[2] << ")";
    throw std::domain_error(os.str());
  }
  return *this;
}

double MaterialModel::psi(const Mat3& c) const {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, QuadGreen>) {
          const Mat3 d = c - Mat3::identity();
          return ddot(d, d);
        } else if constexpr (std::is_same_v<T, Ogden>) {
          const SymEig e = sym_eig(c);
          double s = 0.0;
          for (const auto& t : m.terms) {
            double tr = 0.0;
            for (int k = 0; k < 3; ++k) tr += std::pow(std::max(e.values[k], 0.0), 0.5 * t.alpha);
            s += t.mu / t.alpha * (tr - 3.0);
          }
          return s;
        } else {
          throw std::logic_error("psi: piecewise model must be resolved with at(x) first");
        }
      },
      v_);
}

Mat3 MaterialModel::dpsi(const Mat3& c) const {
  return std::visit(
      [&](const auto& m) -> Mat3 {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, QuadGreen>) {
          return 2.0 * (c - Mat3::identity());
        } else if constexpr (std::is_same_v<T, Ogden>) {
          const SymEig e = sym_eig(c);
          Mat3 r;
          for (const auto& t : m.terms)
            r += spectral_apply(e, [&](double lam) { return 0.5 * t.mu * std::pow(lam, 0.5 * t.alpha - 1.0); });
          return r;
        } else {
          throw std::logic_error("dpsi: piecewise model must be resolved with at(x) first");
        }
      },
      v_);
}

std::string MaterialModel::describe() const {
  return std::visit(
      [](const auto& m) -> std::string {
        using T = std::decay_t<decltype(m)>;
        std::ostringstream os;
        if constexpr (std::is_same_v<T, QuadGreen>) {
          os << "quad_green";
        } else if constexpr (std::is_same_v<T, Ogden>) {
          os << "ogden{";
          for (std::size_t k = 0; k < m.terms.size(); ++k)
            os << (k ? "," : "") << "(" << m.terms[k].mu << "," << m.terms[k].alpha << ")";
          os << "}";
        } else {
          os << "piecewise{" << m.regions.size() << " regions}";
        }
        return os.str();
      },
      v_);
}

IncompressibilityTolerance::IncompressibilityTolerance(double t) : tol_det(t) {
  if (!(t > 0.0)) throw std::invalid_argument("tol_det must be positive");
}

ExtendedScalar eval_WI(const MaterialModel& m, const Vec3& x, const Mat3& f, IncompressibilityTolerance tol) {
  if (!is_finite(f)) throw std::invalid_argument("eval_WI: non-finite gradient");
  const double d = det(f);
  if (!(std::abs(d - 1.0) <= tol.tol_det)) return ExtendedScalar::infinity();
  return ExtendedScalar::finite(eval_W(m, x, f));
}

double eval_W(const MaterialModel& m, const Vec3& x, const Mat3& f) {
  const Mat3 fi = isochoric(f);
  return m.at(x).psi(transpose(fi) * fi);
}

Mat3 eval_dW(const MaterialModel& m, const Vec3& x, const Mat3& f) {
  const double j = det(f);
  if (!(j > 0.0)) throw std::domain_error("eval_dW: det F must be positive");
  const double s = std::pow(j, -2.0 / 3.0);
  const Mat3 c = transpose(f) * f;
  const Mat3 p = m.at(x).dpsi(s * c);
  return s * (2.0 * (f * p) - (2.0 / 3.0) * ddot(p, c) * transpose(inverse(f)));
}

double eval_green(const MaterialModel& m, const Vec3& x, const Mat3& g) {
  const Mat3 c = Mat3::identity() + 2.0 * g;
  return eval_W(m, x, sqrt_spd(c));
}

ElasticityTensor::ElasticityTensor(const std::array<double, 81>& c) : c_(c) {}

ElasticityTensor ElasticityTensor::deviatoric(double two_mu) {
  std::array<double, 81> c{};
  auto delta = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
          c[index(i, j, k, l)] =
              two_mu * (0.5 * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k)) - delta(i, j) * delta(k, l) / 3.0);
  return ElasticityTensor(c);
}

Mat3 ElasticityTensor::apply(const Mat3& b) const {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) s += c_[index(i, j, k, l)] * b(k, l);
      r(i, j) = s;
    }
  return r;
}

double ElasticityTensor::frobenius() const {
  double s = 0.0;
  for (double x : c_) s += x * x;
  return std::sqrt(s);
}

ElasticityTensor ElasticityTensor::symmetrized() const {
  std::array<double, 81> out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          const double s = c_[index(i, j, k, l)] + c_[index(j, i, k, l)] + c_[index(i, j, l, k)] +
                           c_[index(j, i, l, k)] + c_[index(k, l, i, j)] + c_[index(l, k, i, j)] +
                           c_[index(k, l, j, i)] + c_[index(l, k, j, i)];
          out[index(i, j, k, l)] = s / 8.0;
        }
  return ElasticityTensor(out);
}

HessianReport hessian_identity(const MaterialModel& m, const Vec3& x, double step) {
  const MaterialModel& local = m.at(x);
  auto w_at = [&](const Mat3& f) { return eval_W(local, x, f); };
  auto second = [&](double d) {
    std::array<double, 81> c{};
    const double w0 = w_at(Mat3::identity());
    for (int a = 0; a < 9; ++a) {
      for (int b = a; b < 9; ++b) {
        Mat3 ea, eb;
        ea.a[static_cast<std::size_t>(a)] = d;
        eb.a[static_cast<std::size_t>(b)] = d;
        const Mat3 id = Mat3::identity();
        double v;
        if (a == b) {
          v = (w_at(id + ea) - 2.0 * w0 + w_at(id - ea)) / (d * d);
        } else {
          v = (w_at(id + ea + eb) - w_at(id + ea - eb) - w_at(id - ea + eb) + w_at(id - ea - eb)) / (4.0 * d * d);
        }
        c[static_cast<std::size_t>(9 * a + b)] = v;
        c[static_cast<std::size_t>(9 * b + a)] = v;
      }
    }
    return c;
  };
  const auto coarse = second(step);
  const auto fine = second(0.5 * step);
  std::array<double, 81> extrap{};
  double residual = 0.0;
  for (std::size_t k = 0; k < 81; ++k) {
    extrap[k] = (4.0 * fine[k] - coarse[k]) / 3.0;
    residual = std::max(residual, std::abs(fine[k] - coarse[k]) / 3.0);
  }
  if (residual > 1e-5) {
    std::ostringstream os;
    os << "hessian_identity: Richardson residual " << residual << " exceeds 1e-5 for " << local.describe();
    throw HessianNonconvergence(os.str(), residual);
  }
  HessianReport r;
  r.tensor = ElasticityTensor(extrap).symmetrized();
  r.bound = r.tensor.frobenius();
  r.richardson_residual = residual;
  return r;
}

ExtendedScalar q_form(const ElasticityTensor& c, const Mat3& b) {
  if (std::abs(trace(b)) > 1e-10 * (1.0 + norm(b))) return ExtendedScalar::infinity();
  return ExtendedScalar::finite(0.5 * c.quad(b));
}

CoercivityReport coercivity_probe(const MaterialModel& m, const GrowthFunction& gf, std::size_t n_samples,
                                  std::uint64_t seed) {
  if (n_samples < 100) throw std::invalid_argument("coercivity_probe: need at least 100 samples");
  if (!m.is_homogeneous()) throw std::invalid_argument("coercivity_probe: homogeneous model required");
  SplitMix64 rng(seed);
  CoercivityReport rep;
  rep.constant = std::numeric_limits<double>::infinity();
  const Vec3 origin{};
  for (std::size_t s = 0; s < n_samples; ++s) {
    // Log-stretch magnitudes spread over several decades so both g_p branches are sampled.
    const double scale = std::pow(10.0, rng.uniform(-3.0, 0.3));
    const Mat3 q = random_rotation(rng);
    const Vec3 ls = scale * rng.normal3();
    const Mat3 u = q * Mat3::diag(std::exp(ls[0]), std::exp(ls[1]), std::exp(ls[2])) * transpose(q);
    const Mat3 f = random_rotation(rng) * isochoric(u);
    const double d = dist_SO3(f).value;
    if (d < 1e-12) {
      ++rep.samples_skipped;
      continue;
    }
    const double ratio = eval_W(m, origin, f) / gf(d);
    ++rep.samples_used;
    if (!(ratio > 0.0)) rep.violations.push_back(f);
    rep.constant = std::min(rep.constant, ratio);
  }
  if (rep.samples_used == 0) rep.constant = 0.0;
  return rep;
}

}  // namespace traclin
