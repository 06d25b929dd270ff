#pragma once

#include <span>
#include <vector>

#include "ihnn/autodiff/tape.hpp"
#include "ihnn/core/canonical.hpp"
#include "ihnn/integrators/steppers.hpp"
#include "ihnn/model/hamiltonian.hpp"

namespace ihnn {

struct BackpropResult {
  double loss = 0.0;
  std::vector<double> gradient;
  std::vector<StepReport> reports;
  std::size_t tape_bytes = 0;  // recorded graph size at the end of the forward pass
};

/// Gradient of the window loss by reverse-mode through the whole solver.
///
/// The predictor, every fixed-point iterate and the loss are recorded on one
/// tape, so memory grows linearly with the window length. obs[0] is the initial
/// condition; obs[1..] are the targets.
inline BackpropResult backprop_through_solver(const ParamVector& theta, std::span<const PhasePoint> obs, double h,
                                              const FpiConfig& cfg) {
  using ad::Var;
  using VarPoint = CanonicalVector<PhaseTag, Var>;
  if (obs.size() < 2) throw ConfigError("backprop: window needs at least two observations");
  for (const auto& o : obs) require_dims(o.size(), theta.arch.input_dim(), "observation vs network input");

  ad::Tape tape;
  ad::TapeScope scope(tape);
  std::vector<Var> params;
  params.reserve(theta.size());
  for (double v : theta.values) params.push_back(Var::leaf(v));  // leaves 0..n-1
  const std::span<const Var> pspan(params);
  auto field = [&](const VarPoint& y) { return dynamics_of<Var, Var>(theta.arch, pspan, y); };

  BackpropResult out;
  out.reports.reserve(obs.size() - 1);
  VarPoint y = lift<Var>(obs[0]);
  Var loss(0.0);
  for (std::size_t i = 1; i < obs.size(); ++i) {
    VarPoint hint;
    if (cfg.guess == GuessSource::observation) hint = lift<Var>(obs[i]);
    try {
      auto step = implicit_midpoint_step(field, y, h, cfg, cfg.guess == GuessSource::observation ? &hint : nullptr);
      y = std::move(step.state);
      out.reports.push_back(std::move(step.report));
    } catch (const NumericalError& e) {
      throw NumericalError(std::string("backprop forward pass: ") + e.what(), i - 1);
    }
    for (std::size_t k = 0; k < y.size(); ++k) {
      const Var r = y[k] - obs[i][k];
      loss += r * r;
    }
  }
  out.loss = loss.value();
  out.tape_bytes = tape.footprint_bytes();
  out.gradient.assign(theta.size(), 0.0);
  if (!loss.is_constant()) {
    const auto adj = tape.adjoints(loss.index());
    for (std::size_t k = 0; k < theta.size(); ++k) out.gradient[k] = adj[params[k].index()];
  }
  return out;
}

}  // namespace ihnn
