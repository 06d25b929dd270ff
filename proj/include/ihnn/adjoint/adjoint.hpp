#pragma once

#include <span>
#include <vector>

#include "ihnn/core/canonical.hpp"
#include "ihnn/core/error.hpp"
#include "ihnn/integrators/steppers.hpp"
#include "ihnn/model/hamiltonian.hpp"

namespace ihnn {

/// Costate velocity -(df/dy)^T lambda for f = (dH/dp, -dH/dq):
///   dlambda_q/dt = -Hqp lambda_q + Hqq lambda_p
///   dlambda_p/dt = -Hpp lambda_q + Hpq lambda_p
inline AdjointState adjoint_rhs(const HessianBlocks& hess, const AdjointState& lambda) {
  const std::size_t d = lambda.dim();
  require_dims(hess.hqq.size(), d, "Hessian blocks vs costate");
  AdjointState out(d);
  for (std::size_t i = 0; i < d; ++i) {
    double dq = 0.0, dp = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      dq += -hess.hqp(i, j) * lambda.q()[j] + hess.hqq(i, j) * lambda.p()[j];
      dp += -hess.hpp(i, j) * lambda.q()[j] + hess.hpq(i, j) * lambda.p()[j];
    }
    out.q()[i] = dq;
    out.p()[i] = dp;
  }
  return out;
}

inline AdjointState adjoint_rhs(const ParamVector& theta, const PhasePoint& y, const AdjointState& lambda) {
  require_dims(lambda.size(), y.size(), "costate vs state");
  return adjoint_rhs(hess_state(theta, y), lambda);
}

/// lambda(T) = scale * 2 (pred - obs), the gradient of scale * ||pred - obs||^2.
inline AdjointState terminal_conditions(const PhasePoint& pred, const PhasePoint& obs, double scale = 1.0) {
  require_dims(pred.size(), obs.size(), "prediction vs observation");
  AdjointState lambda(pred.dim());
  for (std::size_t i = 0; i < pred.size(); ++i) lambda[i] = scale * 2.0 * (pred[i] - obs[i]);
  return lambda;
}

/// dL/dy at observed steps 1..tau; per_step[i] belongs to step i + 1.
struct LossPartials {
  std::vector<AdjointState> per_step;

  std::size_t steps() const { return per_step.size(); }
};

/// Running parameter gradient, updated in place so no costate history is kept.
class GradAccumulator {
 public:
  explicit GradAccumulator(std::size_t n) : grad_(n, 0.0) {}

  void add(double weight, std::span<const double> integrand) {
    require_dims(integrand.size(), grad_.size(), "gradient integrand");
    for (std::size_t k = 0; k < grad_.size(); ++k) grad_[k] += weight * integrand[k];
  }

  std::size_t size() const { return grad_.size(); }
  const std::vector<double>& grad() const { return grad_; }
  std::vector<double> take() { return std::move(grad_); }

 private:
  std::vector<double> grad_;
};

struct AdjointResult {
  std::vector<double> gradient;
  AdjointState lambda0;  // dL/dy_0
  std::vector<StepReport> reports;
};

namespace detail {

/// Shared backward sweep. `jumps` supplies the costate increment at step n
/// (1 <= n < tau), or nothing when it returns nullptr.
template <class JumpFn>
AdjointResult backward_sweep(const ParamVector& theta, std::span<const PhasePoint> states, AdjointState lambda,
                             double h, FpiConfig cfg, JumpFn&& jump_at) {
  check_step_size(h);
  const std::size_t tau = states.size() - 1;
  GradAccumulator acc(theta.size());
  AdjointResult out;
  out.reports.reserve(tau);
  cfg.guess = GuessSource::predictor;
  for (std::size_t n = tau; n-- > 0;) {
    PhasePoint mid = 0.5 * (states[n] + states[n + 1]);
    const HessianBlocks hess = hess_state(theta, mid);
    auto field = [&hess](const AdjointState& l) {
      AdjointState r = adjoint_rhs(hess, l);
      for (auto& x : r.flat()) x = -x;  // adjoint_rhs is -A^T lambda; the step below runs with -h
      return r;
    };
    // Backward implicit midpoint for dlambda/dt = -A^T lambda, step -h:
    //   lambda_n = lambda_{n+1} + h A^T (lambda_n + lambda_{n+1}) / 2.
    // Written as a forward step of +h on the field lambda -> A^T lambda.
    auto step = implicit_midpoint_step(field, lambda, h, cfg);
    const AdjointState avg = 0.5 * (lambda + step.state);
    const auto integrand = vjp_params(theta, mid, avg);
    acc.add(h, integrand);
    lambda = std::move(step.state);
    out.reports.push_back(std::move(step.report));
    if (n > 0) {
      if (const AdjointState* j = jump_at(n)) lambda += *j;
    }
    if (!lambda.all_finite()) throw NumericalError("adjoint: costate became non-finite", n);
  }
  out.gradient = acc.take();
  out.lambda0 = std::move(lambda);
  return out;
}

inline void check_checkpoints(const ParamVector& theta, std::span<const PhasePoint> states) {
  if (states.size() < 2) throw ConfigError("adjoint: need forward checkpoints y_0..y_tau with tau >= 1");
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i].size() != theta.arch.input_dim()) {
      throw ConfigError("adjoint: missing or malformed forward checkpoint at step " + std::to_string(i));
    }
  }
}

}  // namespace detail

/// dL/dtheta for a window integrated by implicit midpoint.
///
/// `states` are the stored forward steps y_0..y_tau. The costate starts from the
/// last partial, is stepped back with the same midpoint rule (Hessian frozen at
/// the forward midpoint), and picks up the loss partial at each earlier observed
/// step. The parameter integral is accumulated in place. Using the costate
/// average at the forward midpoint makes this the exact transpose of the forward
/// linearisation, so it matches reverse-mode through the solver up to the
/// fixed-point tolerance.
inline AdjointResult solve_adjoint_accumulate(const ParamVector& theta, std::span<const PhasePoint> states,
                                              const LossPartials& partials, double h, const FpiConfig& cfg) {
  detail::check_checkpoints(theta, states);
  const std::size_t tau = states.size() - 1;
  if (partials.steps() != tau) {
    throw ConfigError("adjoint: " + std::to_string(partials.steps()) + " loss partials for " + std::to_string(tau) +
                      " steps");
  }
  for (const auto& p : partials.per_step) require_dims(p.size(), states[0].size(), "loss partial");
  return detail::backward_sweep(theta, states, partials.per_step.back(), h, cfg,
                                [&](std::size_t n) { return &partials.per_step[n - 1]; });
}

/// Same sweep with a terminal condition only (no intermediate observations).
inline AdjointResult solve_adjoint_terminal(const ParamVector& theta, std::span<const PhasePoint> states,
                                            const AdjointState& lambda_T, double h, const FpiConfig& cfg) {
  detail::check_checkpoints(theta, states);
  require_dims(lambda_T.size(), states[0].size(), "terminal costate");
  return detail::backward_sweep(theta, states, lambda_T, h, cfg,
                                [](std::size_t) -> const AdjointState* { return nullptr; });
}

}  // namespace ihnn
