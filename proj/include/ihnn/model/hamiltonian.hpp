#pragma once

#include <span>
#include <vector>

#include "ihnn/autodiff/dual.hpp"
#include "ihnn/core/canonical.hpp"
#include "ihnn/model/mlp.hpp"
#include "ihnn/model/param_vector.hpp"

namespace ihnn {

namespace detail {
inline void check_input(const ParamVector& theta, std::size_t state_size) {
  require_dims(state_size, theta.arch.input_dim(), "state vs network input");
}
}  // namespace detail

/// H(theta; q, p).
inline double eval_h(const ParamVector& theta, const PhasePoint& y) {
  detail::check_input(theta, y.size());
  return mlp::value<double, double>(theta.arch, theta.values, y.flat());
}

inline StateGradient grad_state(const ParamVector& theta, const PhasePoint& y) {
  detail::check_input(theta, y.size());
  std::vector<double> g(y.size());
  mlp::value_and_gradient<double, double>(theta.arch, theta.values, y.flat(), std::span<double>(g));
  const auto d = y.dim();
  return {std::vector<double>(g.begin(), g.begin() + d), std::vector<double>(g.begin() + d, g.end())};
}

/// Hamiltonian vector field (dH/dp, -dH/dq) for any scalar type supported by the sweep.
template <class S, class P>
CanonicalVector<PhaseTag, S> dynamics_of(const Architecture& arch, std::span<const P> params,
                                         const CanonicalVector<PhaseTag, S>& y) {
  require_dims(y.size(), arch.input_dim(), "state vs network input");
  std::vector<S> g(y.size());
  mlp::value_and_gradient<S, P>(arch, params, y.flat(), std::span<S>(g));
  const auto d = y.dim();
  auto f = CanonicalVector<PhaseTag, S>::from_flat(std::vector<S>(y.size()));
  for (std::size_t i = 0; i < d; ++i) {
    f.q()[i] = g[d + i];
    f.p()[i] = -g[i];
  }
  return f;
}

inline PhasePoint dynamics(const ParamVector& theta, const PhasePoint& y) {
  return dynamics_of<double, double>(theta.arch, std::span<const double>(theta.values), y);
}

/// Directional derivative of the reverse-mode sweep along `direction`:
/// returns (Hessian * direction, d2H/dtheta dx * direction).
struct SecondOrderSweep {
  std::vector<double> state;   // (d2H/dx2) v, size 2d
  std::vector<double> params;  // (d2H/dtheta dx) v, size |theta|
};

inline SecondOrderSweep forward_over_reverse(const ParamVector& theta, const PhasePoint& y,
                                             std::span<const double> direction, bool want_params) {
  detail::check_input(theta, y.size());
  require_dims(direction.size(), y.size(), "sweep direction");
  std::vector<ad::Dual> x(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = ad::Dual(y[i], direction[i]);
  std::vector<ad::Dual> gx(y.size());
  std::vector<ad::Dual> gp(want_params ? theta.size() : 0);
  mlp::value_and_gradient<ad::Dual, double>(theta.arch, theta.values, x, gx, gp);
  SecondOrderSweep out;
  out.state.resize(gx.size());
  for (std::size_t i = 0; i < gx.size(); ++i) out.state[i] = gx[i].tangent;
  out.params.resize(gp.size());
  for (std::size_t k = 0; k < gp.size(); ++k) out.params[k] = gp[k].tangent;
  return out;
}

/// Exact second derivatives: one forward-over-reverse sweep per coordinate direction.
inline HessianBlocks hess_state(const ParamVector& theta, const PhasePoint& y) {
  detail::check_input(theta, y.size());
  const std::size_t d = y.dim();
  HessianBlocks h{SquareMatrix(d), SquareMatrix(d), SquareMatrix(d), SquareMatrix(d)};
  std::vector<double> e(2 * d, 0.0);
  for (std::size_t k = 0; k < 2 * d; ++k) {
    e.assign(2 * d, 0.0);
    e[k] = 1.0;
    // column k of the full Hessian
    const auto col = forward_over_reverse(theta, y, e, false).state;
    for (std::size_t i = 0; i < d; ++i) {
      if (k < d) {
        h.hqq(i, k) = col[i];
        h.hpq(i, k) = col[d + i];
      } else {
        h.hqp(i, k - d) = col[i];
        h.hpp(i, k - d) = col[d + i];
      }
    }
  }
  return h;
}

/// lambda^T d f / d theta at y, with f = (dH/dp, -dH/dq).
///
/// lambda^T f = v^T grad H with v = (-lambda_p, lambda_q), so the pullback is the
/// directional derivative of dH/dtheta along v.
inline std::vector<double> vjp_params(const ParamVector& theta, const PhasePoint& y, const AdjointState& lambda) {
  detail::check_input(theta, y.size());
  require_dims(lambda.size(), y.size(), "costate");
  const std::size_t d = y.dim();
  std::vector<double> v(2 * d);
  for (std::size_t i = 0; i < d; ++i) {
    v[i] = -lambda.p()[i];
    v[d + i] = lambda.q()[i];
  }
  return forward_over_reverse(theta, y, v, true).params;
}

/// A learned Hamiltonian bundled with its parameters; the model interface used by
/// evaluation and integration helpers.
class NeuralHamiltonian {
 public:
  explicit NeuralHamiltonian(ParamVector theta) : theta_(std::move(theta)) {}

  const ParamVector& params() const { return theta_; }
  std::size_t dim() const { return theta_.arch.state_dim(); }

  double value(const PhasePoint& y) const { return eval_h(theta_, y); }
  PhasePoint dynamics(const PhasePoint& y) const { return ihnn::dynamics(theta_, y); }

 private:
  ParamVector theta_;
};

}  // namespace ihnn
