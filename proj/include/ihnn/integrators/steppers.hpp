#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "ihnn/core/canonical.hpp"
#include "ihnn/core/error.hpp"
#include "ihnn/integrators/fixed_point.hpp"
#include "ihnn/integrators/tableau.hpp"

namespace ihnn {

// Steppers are generic in the state type V (a CanonicalVector over double or
// over taped variables) and in the vector field, any callable V -> V.

template <class V>
struct StepResult {
  V state;
  StepReport report;
};

namespace detail {

inline void check_step_size(double h) {
  if (h == 0.0 || !std::isfinite(h)) throw ConfigError("step size must be finite and non-zero");
}

template <class V>
void check_finite(const V& v, const char* what) {
  if (!v.all_finite()) throw NumericalError(std::string(what) + " produced a non-finite value");
}

/// Infinity norm of a - b on the values only (never recorded on a tape).
template <class V>
double max_abs_diff(const V& a, const V& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(value_of(a[i]) - value_of(b[i])));
  return m;
}

}  // namespace detail

/// Explicit midpoint estimate y + h f(y + h/2 f(y)).
template <class Field, class V>
V rk2_predictor(Field&& f, const V& y, double h) {
  detail::check_step_size(h);
  const V k1 = f(y);
  detail::check_finite(k1, "vector field");
  const V k2 = f(y + (0.5 * h) * k1);
  detail::check_finite(k2, "vector field");
  return y + h * k2;
}

/// One implicit midpoint step y' = y + h f((y + y') / 2), solved by fixed-point
/// iteration from the guess selected in `cfg`.
///
/// An unconverged solve returns the last iterate with report.converged = false.
/// A non-finite iterate throws: the iteration diverged, usually because
/// h times the Lipschitz constant of f is too large.
template <class Field, class V>
StepResult<V> implicit_midpoint_step(Field&& f, const V& y, double h, const FpiConfig& cfg, const V* hint = nullptr) {
  cfg.validate();
  detail::check_step_size(h);
  V current;
  switch (cfg.guess) {
    case GuessSource::predictor:
      current = rk2_predictor(f, y, h);
      break;
    case GuessSource::observation:
      if (hint == nullptr) throw ConfigError("guess source 'observation' needs a hint state");
      require_dims(hint->size(), y.size(), "fixed-point hint");
      current = *hint;
      break;
    case GuessSource::previous_state:
      current = y;
      break;
  }

  StepReport report;
  for (int k = 1; k <= cfg.max_iters; ++k) {
    V next = y + h * f(0.5 * (y + current));
    if (!next.all_finite()) {
      throw NumericalError("implicit midpoint: fixed-point iterate is not finite (divergent iteration, reduce h)");
    }
    const double r = detail::max_abs_diff(next, current);
    current = std::move(next);
    report.iterations_used = k;
    report.final_residual = r;
    if (cfg.record_history) report.residual_history.push_back(r);
    if (cfg.early_exit && r <= cfg.tol) {
      report.converged = true;
      break;
    }
  }
  if (!cfg.early_exit) report.converged = report.final_residual <= cfg.tol;
  return {std::move(current), std::move(report)};
}

/// Staggered symplectic Euler: q' = q + h dH/dp(q, p), then p' = p - h dH/dq(q', p).
/// Explicit; symplectic when H is separable.
template <class Field, class V>
V symplectic_euler_step(Field&& f, const V& y, double h) {
  detail::check_step_size(h);
  const V f0 = f(y);
  detail::check_finite(f0, "vector field");
  V next = y;
  for (std::size_t i = 0; i < y.dim(); ++i) next.q()[i] = y.q()[i] + h * f0.q()[i];
  V mixed = y;
  for (std::size_t i = 0; i < y.dim(); ++i) mixed.q()[i] = next.q()[i];
  const V f1 = f(mixed);
  detail::check_finite(f1, "vector field");
  for (std::size_t i = 0; i < y.dim(); ++i) next.p()[i] = y.p()[i] + h * f1.p()[i];
  return next;
}

/// General partitioned Runge-Kutta step. Stage slopes start at f(y) and are
/// refined by Jacobi fixed-point sweeps; the residual is h times the largest
/// slope change. Explicit tableaus converge after stages() + 1 sweeps.
template <class Field, class V>
StepResult<V> prk_step(Field&& f, const PrkTableau& t, const V& y, double h, const FpiConfig& cfg) {
  cfg.validate();
  detail::check_step_size(h);
  const std::size_t s = t.stages();
  const std::size_t d = y.dim();
  const V f0 = f(y);
  detail::check_finite(f0, "vector field");
  std::vector<V> slopes(s, f0);

  auto stage_point = [&](std::size_t i) {
    V Y = y;
    for (std::size_t j = 0; j < s; ++j) {
      for (std::size_t k = 0; k < d; ++k) {
        Y.q()[k] += h * t.a[i][j] * slopes[j].q()[k];
        Y.p()[k] += h * t.A[i][j] * slopes[j].p()[k];
      }
    }
    return Y;
  };

  StepReport report;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    std::vector<V> next;
    next.reserve(s);
    double r = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
      next.push_back(f(stage_point(i)));
      if (!next.back().all_finite()) throw NumericalError("PRK stage slope is not finite (divergent iteration)");
      r = std::max(r, std::abs(h) * detail::max_abs_diff(next.back(), slopes[i]));
    }
    slopes = std::move(next);
    report.iterations_used = it;
    report.final_residual = r;
    if (cfg.record_history) report.residual_history.push_back(r);
    if (cfg.early_exit && r <= cfg.tol) {
      report.converged = true;
      break;
    }
  }
  if (!cfg.early_exit) report.converged = report.final_residual <= cfg.tol;

  V out = y;
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      out.q()[k] += h * t.b[i] * slopes[i].q()[k];
      out.p()[k] += h * t.B[i] * slopes[i].p()[k];
    }
  }
  return {std::move(out), std::move(report)};
}

}  // namespace ihnn
