#pragma once

#include <span>

#include "ihnn/adjoint/adjoint.hpp"
#include "ihnn/core/canonical.hpp"

namespace ihnn {

struct LossValue {
  double value = 0.0;
  LossPartials partials;
};

/// Sum over steps 1..tau of ||pred_i - obs_i||^2. Both windows hold tau + 1 points;
/// index 0 is the initial condition and does not enter the sum.
inline LossValue window_loss(std::span<const PhasePoint> pred, std::span<const PhasePoint> obs) {
  require_dims(pred.size(), obs.size(), "predicted vs observed window length");
  if (pred.size() < 2) throw DimensionError("loss: windows need at least two points");
  LossValue out;
  out.partials.per_step.reserve(pred.size() - 1);
  for (std::size_t i = 1; i < pred.size(); ++i) {
    require_dims(pred[i].size(), obs[i].size(), "predicted vs observed state");
    AdjointState g(pred[i].dim());
    for (std::size_t k = 0; k < pred[i].size(); ++k) {
      const double r = pred[i][k] - obs[i][k];
      out.value += r * r;
      g[k] = 2.0 * r;
    }
    out.partials.per_step.push_back(std::move(g));
  }
  return out;
}

}  // namespace ihnn
