#pragma once

#include <iomanip>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ihnn/core/canonical.hpp"
#include "ihnn/integrators/steppers.hpp"

namespace ihnn {

/// Points y_0..y_n at times t_i = i h.
struct Trajectory {
  double h = 0.0;
  std::vector<PhasePoint> points;

  std::size_t steps() const { return points.empty() ? 0 : points.size() - 1; }
  double time(std::size_t i) const { return static_cast<double>(i) * h; }
};

struct IntegrationResult {
  Trajectory trajectory;
  std::vector<StepReport> reports;
};

/// Integration scheme selector. Tableau-backed methods run through prk_step.
struct StepMethod {
  enum class Kind { implicit_midpoint, semi_implicit_euler, explicit_rk2, prk };
  Kind kind = Kind::implicit_midpoint;
  PrkTableau tableau;

  static StepMethod implicit_midpoint() { return {}; }
  static StepMethod semi_implicit_euler() { return {Kind::semi_implicit_euler, {}}; }
  static StepMethod explicit_rk2() { return {Kind::explicit_rk2, {}}; }
  static StepMethod prk(PrkTableau t) { return {Kind::prk, std::move(t)}; }

  /// "implicit_midpoint" (predictor-corrector stepper), "semi_implicit_euler",
  /// "rk2", or any registered tableau name.
  static StepMethod by_name(std::string_view name) {
    if (name == "implicit_midpoint") return implicit_midpoint();
    if (name == "semi_implicit_euler") return semi_implicit_euler();
    if (name == "rk2") return explicit_rk2();
    return prk(tableau_by_name(name));
  }
};

/// Integrates n steps of size h from y0. Step i starts from the result of step
/// i - 1. With GuessSource::observation, `observations[i + 1]` seeds step i.
template <class Field>
IntegrationResult integrate(Field&& f, const PhasePoint& y0, double h, std::size_t n, const StepMethod& method,
                            const FpiConfig& cfg = {}, std::span<const PhasePoint> observations = {}) {
  if (n < 1) throw ConfigError("integrate: step count must be >= 1");
  const bool use_hints = method.kind == StepMethod::Kind::implicit_midpoint && cfg.guess == GuessSource::observation;
  if (use_hints && observations.size() < n + 1) {
    throw ConfigError("integrate: observation guesses need n + 1 observed points");
  }
  IntegrationResult out;
  out.trajectory.h = h;
  out.trajectory.points.reserve(n + 1);
  out.trajectory.points.push_back(y0);
  out.reports.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const PhasePoint& y = out.trajectory.points.back();
    try {
      switch (method.kind) {
        case StepMethod::Kind::implicit_midpoint: {
          auto r = implicit_midpoint_step(f, y, h, cfg, use_hints ? &observations[i + 1] : nullptr);
          out.trajectory.points.push_back(std::move(r.state));
          out.reports.push_back(std::move(r.report));
          break;
        }
        case StepMethod::Kind::semi_implicit_euler:
          out.trajectory.points.push_back(symplectic_euler_step(f, y, h));
          out.reports.push_back({0, 0.0, true, {}});
          break;
        case StepMethod::Kind::explicit_rk2:
          out.trajectory.points.push_back(rk2_predictor(f, y, h));
          out.reports.push_back({0, 0.0, true, {}});
          break;
        case StepMethod::Kind::prk: {
          auto r = prk_step(f, method.tableau, y, h, cfg);
          out.trajectory.points.push_back(std::move(r.state));
          out.reports.push_back(std::move(r.report));
          break;
        }
      }
    } catch (const NumericalError& e) {
      throw NumericalError(std::string("integration failed: ") + e.what(), i);
    }
  }
  return out;
}

/// Fixed-point settings of the high-order reference solver.
inline FpiConfig reference_fpi() {
  FpiConfig cfg;
  cfg.tol = 1e-13;
  cfg.max_iters = 100;
  return cfg;
}

/// Two-stage Gauss-Legendre (order 4, symplectic) trajectory used to generate data.
template <class Field>
Trajectory reference_integrate(Field&& f, const PhasePoint& y0, double h, std::size_t n) {
  return integrate(f, y0, h, n, StepMethod::prk(tableaus::gauss2()), reference_fpi()).trajectory;
}

/// CSV with columns t, q1..qd, p1..pd.
inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const std::size_t d = traj.points.empty() ? 0 : traj.points.front().dim();
  out << "t";
  for (std::size_t i = 1; i <= d; ++i) out << ",q" << i;
  for (std::size_t i = 1; i <= d; ++i) out << ",p" << i;
  out << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t k = 0; k < traj.points.size(); ++k) {
    out << traj.time(k);
    for (double x : traj.points[k].flat()) out << ',' << x;
    out << '\n';
  }
}

}  // namespace ihnn
