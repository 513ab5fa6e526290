#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "multidecon/types.hpp"

namespace mdc {

// Limited-memory BFGS with a strong-Wolfe line search (bracket + zoom with
// cubic interpolation).  The objective callable fills the gradient and
// returns the value.
using ObjectiveFn = std::function<double(const VecX& x, VecX& grad)>;

struct LbfgsOptions {
  int max_iters = 2000;
  int memory = 10;
  double grad_tol = 1e-9;   // stop when |g| <= grad_tol * max(1, |x|)
  double step_tol = 1e-14;  // stop when |step|_inf <= step_tol * max(1, |x|_inf)
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  int max_line_search = 40;
};

enum class LbfgsStop { gradient, step_size, line_search, max_iters };

struct LbfgsResult {
  VecX x;
  double value = std::numeric_limits<double>::quiet_NaN();
  double grad_norm = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;  // gradient tolerance met
  LbfgsStop reason = LbfgsStop::max_iters;
};

namespace detail {

// Minimizer of the cubic interpolant through (a, fa, ga) and (b, fb, gb),
// clamped to the interior of [lo, hi]; falls back to bisection.
inline double cubic_step(double a, double fa, double ga, double b, double fb, double gb,
                         double lo, double hi) {
  const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - ga * gb;
  double t = 0.5 * (lo + hi);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double num = gb + d2 - d1;
    const double den = gb - ga + 2.0 * d2;
    if (den != 0.0) t = b - (b - a) * (num / den);
  }
  const double width = hi - lo;
  if (!(t > lo + 0.1 * width && t < hi - 0.1 * width)) t = 0.5 * (lo + hi);
  return t;
}

}  // namespace detail

inline LbfgsResult lbfgs_minimize(const ObjectiveFn& objective, VecX x0,
                                  const LbfgsOptions& opts = {}) {
  LbfgsResult res;
  VecX x = std::move(x0);
  VecX g(x.size());
  double f = objective(x, g);
  res.evaluations = 1;

  std::deque<std::pair<VecX, VecX>> history;  // (s, y)
  VecX d(x.size()), g_new(x.size()), x_new(x.size());

  const auto grad_ok = [&](double gn, const VecX& xx) {
    return gn <= opts.grad_tol * std::max(1.0, xx.norm());
  };

  double gnorm = g.norm();
  if (grad_ok(gnorm, x)) {
    res.converged = true;
    res.reason = LbfgsStop::gradient;
  } else {
    for (int it = 0; it < opts.max_iters; ++it) {
      // Two-loop recursion for d = -H g.
      d = -g;
      std::vector<double> alpha(history.size());
      for (std::size_t i = history.size(); i-- > 0;) {
        const auto& [s, y] = history[i];
        const double rho = 1.0 / y.dot(s);
        alpha[i] = rho * s.dot(d);
        d -= alpha[i] * y;
      }
      if (!history.empty()) {
        const auto& [s, y] = history.back();
        d *= s.dot(y) / y.squaredNorm();
      }
      for (std::size_t i = 0; i < history.size(); ++i) {
        const auto& [s, y] = history[i];
        const double rho = 1.0 / y.dot(s);
        const double beta = rho * y.dot(d);
        d += (alpha[i] - beta) * s;
      }

      double dg = d.dot(g);
      if (!(dg < 0.0)) {  // not a descent direction; restart from steepest descent
        history.clear();
        d = -g;
        dg = -g.squaredNorm();
      }

      // Strong-Wolfe line search on phi(a) = f(x + a d).
      const double phi0 = f;
      const double dphi0 = dg;
      double step = (it == 0) ? std::min(1.0, 1.0 / std::max(1e-12, gnorm)) : 1.0;
      double step_prev = 0.0, f_prev = phi0, dphi_prev = dphi0;
      double f_trial = phi0, dphi_trial = dphi0;
      bool found = false, fail = false;

      const auto eval_at = [&](double a) {
        x_new = x + a * d;
        const double v = objective(x_new, g_new);
        ++res.evaluations;
        return v;
      };

      // Bracketing phase.
      double lo = 0.0, hi = 0.0, f_lo = phi0, dphi_lo = dphi0, f_hi = 0.0, dphi_hi = 0.0;
      bool have_bracket = false;
      for (int ls = 0; ls < opts.max_line_search; ++ls) {
        f_trial = eval_at(step);
        dphi_trial = std::isfinite(f_trial) ? g_new.dot(d)
                                            : std::numeric_limits<double>::infinity();
        if (!std::isfinite(f_trial) || f_trial > phi0 + opts.wolfe_c1 * step * dphi0 ||
            (ls > 0 && f_trial >= f_prev)) {
          lo = step_prev; f_lo = f_prev; dphi_lo = dphi_prev;
          hi = step; f_hi = f_trial; dphi_hi = dphi_trial;
          have_bracket = true;
          break;
        }
        if (std::abs(dphi_trial) <= -opts.wolfe_c2 * dphi0) {
          found = true;
          break;
        }
        if (dphi_trial >= 0.0) {
          lo = step; f_lo = f_trial; dphi_lo = dphi_trial;
          hi = step_prev; f_hi = f_prev; dphi_hi = dphi_prev;
          have_bracket = true;
          break;
        }
        step_prev = step; f_prev = f_trial; dphi_prev = dphi_trial;
        step *= 2.0;
        if (step > 1e12) { fail = true; break; }
      }

      // Zoom phase.
      if (!found && !fail && have_bracket) {
        for (int z = 0; z < opts.max_line_search; ++z) {
          const double a = detail::cubic_step(lo, f_lo, dphi_lo, hi, f_hi, dphi_hi,
                                              std::min(lo, hi), std::max(lo, hi));
          f_trial = eval_at(a);
          dphi_trial = std::isfinite(f_trial) ? g_new.dot(d)
                                              : std::numeric_limits<double>::infinity();
          if (!std::isfinite(f_trial) || f_trial > phi0 + opts.wolfe_c1 * a * dphi0 ||
              f_trial >= f_lo) {
            hi = a; f_hi = f_trial; dphi_hi = dphi_trial;
          } else {
            if (std::abs(dphi_trial) <= -opts.wolfe_c2 * dphi0) {
              step = a;
              found = true;
              break;
            }
            if (dphi_trial * (hi - lo) >= 0.0) { hi = lo; f_hi = f_lo; dphi_hi = dphi_lo; }
            lo = a; f_lo = f_trial; dphi_lo = dphi_trial;
          }
          if (std::abs(hi - lo) <= 1e-16 * std::max(1.0, std::abs(lo))) break;
          step = a;
        }
        // Accept a plain sufficient-decrease point if curvature never held.
        if (!found && std::isfinite(f_trial) && f_trial < phi0) found = true;
        if (!found && std::isfinite(f_lo) && lo > 0.0 && f_lo < phi0) {
          f_trial = eval_at(lo);
          dphi_trial = g_new.dot(d);
          found = std::isfinite(f_trial) && f_trial < phi0;
        }
      } else if (!found && !fail && !have_bracket) {
        fail = true;  // ran out of bracketing attempts
      }

      if (!found) {
        res.reason = LbfgsStop::line_search;
        break;
      }

      // x_new, g_new, f_trial hold the accepted point.
      const VecX s = x_new - x;
      const VecX y = g_new - g;
      x.swap(x_new);
      g.swap(g_new);
      f = f_trial;
      gnorm = g.norm();
      ++res.iterations;

      if (grad_ok(gnorm, x)) {
        res.converged = true;
        res.reason = LbfgsStop::gradient;
        break;
      }
      if (s.lpNorm<Eigen::Infinity>() <=
          opts.step_tol * std::max(1.0, x.lpNorm<Eigen::Infinity>())) {
        res.reason = LbfgsStop::step_size;
        break;
      }
      if (s.dot(y) > 1e-10 * s.norm() * y.norm()) {
        history.emplace_back(s, y);
        if (static_cast<int>(history.size()) > opts.memory) history.pop_front();
      }
      if (it + 1 == opts.max_iters) res.reason = LbfgsStop::max_iters;
    }
  }

  res.x = std::move(x);
  res.value = f;
  res.grad_norm = gnorm;
  return res;
}

}  // namespace mdc
