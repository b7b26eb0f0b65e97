#include "traclin/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace traclin {

namespace {

struct Trial {
  double alpha;
  double f;
  double slope;
};

// Minimizer of the cubic through (a, fa, da), (b, fb, db), safeguarded into the middle of [a, b].
double cubic_step(const Trial& a, const Trial& b) {
  const double lo = std::min(a.alpha, b.alpha), hi = std::max(a.alpha, b.alpha);
  if (std::isfinite(a.f) && std::isfinite(b.f) && std::isfinite(a.slope) && std::isfinite(b.slope)) {
    const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    const double disc = d1 * d1 - a.slope * b.slope;
    if (disc >= 0.0) {
      const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
      const double t = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
      const double margin = 0.1 * (hi - lo);
      if (std::isfinite(t) && t > lo + margin && t < hi - margin) return t;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& f, const Eigen::VectorXd& x0, const LbfgsOptions& opt,
                           const LinearMap& apply_h0, const LinearMap& project_gradient) {
  auto proj = [&](const Eigen::VectorXd& g) { return project_gradient ? project_gradient(g) : g; };
  auto h0 = [&](const Eigen::VectorXd& q) { return apply_h0 ? apply_h0(q) : q; };

  LbfgsResult r;
  r.x = x0;
  Eigen::VectorXd g(x0.size());
  r.f = f(r.x, g);
  r.evaluations = 1;
  if (!std::isfinite(r.f)) {
    r.message = "objective not finite at the initial point";
    return r;
  }
  g = proj(g);
  r.grad_norm = g.norm();

  std::deque<Eigen::VectorXd> ss, ys;
  std::deque<double> rhos;
  for (r.iterations = 0;; ++r.iterations) {
    if (r.grad_norm <= opt.tol_grad * (1.0 + std::abs(r.f))) {
      r.converged = true;
      r.message = "gradient tolerance reached";
      return r;
    }
    if (r.iterations >= opt.max_iterations) {
      r.message = "iteration cap reached";
      return r;
    }

    // Two-loop recursion.
    Eigen::VectorXd q = g;
    std::vector<double> al(ss.size());
    for (std::size_t i = ss.size(); i-- > 0;) {
      al[i] = rhos[i] * ss[i].dot(q);
      q -= al[i] * ys[i];
    }
    Eigen::VectorXd d = h0(q);
    for (std::size_t i = 0; i < ss.size(); ++i) {
      const double b = rhos[i] * ys[i].dot(d);
      d += (al[i] - b) * ss[i];
    }
    d = -d;
    double slope0 = g.dot(d);
    if (!(slope0 < 0.0)) {
      // Not a descent direction: restart from the preconditioned gradient.
      ss.clear();
      ys.clear();
      rhos.clear();
      d = -h0(g);
      slope0 = g.dot(d);
      if (!(slope0 < 0.0)) {
        r.message = "no descent direction";
        return r;
      }
    }

    r.predicted_decrease = -slope0;

    // Strong-Wolfe line search (bracketing then zoom).
    Eigen::VectorXd xt, gt(x0.size());
    auto eval = [&](double alpha) {
      xt = r.x + alpha * d;
      Trial t{alpha, f(xt, gt), std::numeric_limits<double>::quiet_NaN()};
      ++r.evaluations;
      if (std::isfinite(t.f)) {
        gt = proj(gt);
        t.slope = gt.dot(d);
      } else {
        t.f = std::numeric_limits<double>::infinity();
      }
      return t;
    };
    // Armijo, or the approximate Wolfe condition of Hager and Zhang once value differences reach rounding level.
    const double noise = 1e-12 * std::abs(r.f);
    auto sufficient = [&](const Trial& t) {
      if (!std::isfinite(t.f)) return false;
      if (t.f <= r.f + opt.c1 * t.alpha * slope0) return true;
      return t.f <= r.f + noise && t.slope <= (2.0 * opt.c1 - 1.0) * slope0;
    };
    auto curvature = [&](const Trial& t) { return std::abs(t.slope) <= -opt.c2 * slope0; };

    Trial prev{0.0, r.f, slope0};
    Trial accepted{-1.0, 0.0, 0.0};
    Eigen::VectorXd x_acc, g_acc;
    double alpha = 1.0;
    int evals = 0;
    auto accept = [&](const Trial& t) {
      accepted = t;
      x_acc = xt;
      g_acc = gt;
    };
    auto zoom = [&](Trial lo, Trial hi) {
      while (evals < opt.max_line_search) {
        const Trial t = eval(cubic_step(lo, hi));
        ++evals;
        if (!sufficient(t) || t.f > lo.f + noise) {
          hi = t;
        } else {
          if (curvature(t)) {
            accept(t);
            return;
          }
          if (t.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
          lo = t;
        }
        if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, lo.alpha)) break;
      }
      // Fall back to the best point with sufficient decrease.
      if (lo.alpha > 0.0) {
        eval(lo.alpha);
        accept(lo);
      }
    };
    while (evals < opt.max_line_search) {
      const Trial t = eval(alpha);
      ++evals;
      if (!sufficient(t) || (evals > 1 && t.f > prev.f + noise)) {
        zoom(prev, t);
        break;
      }
      if (curvature(t)) {
        accept(t);
        break;
      }
      if (t.slope >= 0.0) {
        zoom(t, prev);
        break;
      }
      prev = t;
      alpha *= 2.0;
    }
    if (accepted.alpha <= 0.0) {
      r.message = "line search failed";
      return r;
    }

    const Eigen::VectorXd s = x_acc - r.x;
    const Eigen::VectorXd y = g_acc - g;
    const double sy = s.dot(y);
    r.x = x_acc;
    r.f = accepted.f;
    g = g_acc;
    r.grad_norm = g.norm();
    if (sy > 1e-14 * s.norm() * y.norm()) {
      ss.push_back(s);
      ys.push_back(y);
      rhos.push_back(1.0 / sy);
      if (static_cast<int>(ss.size()) > opt.memory) {
        ss.pop_front();
        ys.pop_front();
        rhos.pop_front();
      }
    }
  }
}

}  // namespace traclin
