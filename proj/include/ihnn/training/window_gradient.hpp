#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ihnn/adjoint/adjoint.hpp"
#include "ihnn/adjoint/backprop.hpp"
#include "ihnn/integrators/integrate.hpp"
#include "ihnn/training/loss.hpp"

namespace ihnn {

enum class GradMode { adjoint, backprop };

inline GradMode parse_grad_mode(std::string_view s) {
  if (s == "adjoint") return GradMode::adjoint;
  if (s == "backprop") return GradMode::backprop;
  throw ConfigError("unknown grad mode '" + std::string(s) + "' (expected adjoint or backprop)");
}

inline std::string to_string(GradMode m) { return m == GradMode::adjoint ? "adjoint" : "backprop"; }

struct WindowGradient {
  double loss = 0.0;
  std::vector<double> grad;
  std::size_t solves = 0;       // forward implicit solves
  std::size_t unconverged = 0;  // of which did not reach the tolerance
};

/// Implicit-midpoint rollout of the learned field from obs[0], guided by the
/// observations when the guess source asks for them.
inline IntegrationResult rollout(const ParamVector& theta, std::span<const PhasePoint> obs, double h,
                                 const FpiConfig& cfg) {
  auto field = [&theta](const PhasePoint& y) { return dynamics(theta, y); };
  return integrate(field, obs[0], h, obs.size() - 1, StepMethod::implicit_midpoint(), cfg, obs);
}

inline std::size_t count_unconverged(const std::vector<StepReport>& reports) {
  std::size_t n = 0;
  for (const auto& r : reports) n += r.converged ? 0 : 1;
  return n;
}

/// Loss and dL/dtheta of one window (obs[0] is the initial condition).
inline WindowGradient window_gradient(const ParamVector& theta, std::span<const PhasePoint> obs, double h,
                                      const FpiConfig& cfg, GradMode mode) {
  WindowGradient out;
  out.solves = obs.size() - 1;
  if (mode == GradMode::adjoint) {
    const auto fwd = rollout(theta, obs, h, cfg);
    const auto& pred = fwd.trajectory.points;
    auto loss = window_loss(pred, obs);
    auto adj = solve_adjoint_accumulate(theta, pred, loss.partials, h, cfg);
    out.loss = loss.value;
    out.grad = std::move(adj.gradient);
    out.unconverged = count_unconverged(fwd.reports);
  } else {
    auto bp = backprop_through_solver(theta, obs, h, cfg);
    out.loss = bp.loss;
    out.grad = std::move(bp.gradient);
    out.unconverged = count_unconverged(bp.reports);
  }
  return out;
}

/// Loss only.
inline double window_loss_value(const ParamVector& theta, std::span<const PhasePoint> obs, double h,
                                const FpiConfig& cfg) {
  const auto fwd = rollout(theta, obs, h, cfg);
  return window_loss(fwd.trajectory.points, obs).value;
}

}  // namespace ihnn
