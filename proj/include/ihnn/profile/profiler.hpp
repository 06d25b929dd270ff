#pragma once

#include <chrono>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "ihnn/data/dataset.hpp"
#include "ihnn/profile/memory.hpp"
#include "ihnn/training/train.hpp"

namespace ihnn::profile {

struct ProfileRecord {
  GradMode grad_mode = GradMode::adjoint;
  std::size_t n_steps = 0;
  std::size_t peak_bytes = 0;
  double wall_seconds = 0.0;
  std::size_t batch_size = 0;
};

struct ProfileConfig {
  std::vector<std::size_t> steps{4, 8, 16, 32};
  std::vector<GradMode> modes{GradMode::adjoint, GradMode::backprop};
  std::size_t batch_size = 512;
  std::size_t stride = 1;
  FpiConfig fpi;
  std::uint64_t seed = 0;
};

/// One training iteration (gradient over one batch plus an Adam update) per
/// (mode, n_steps), single-threaded. peak_bytes is the heap high-water mark above
/// the level just before the gradient call, so the batch itself is excluded.
/// Every mode sees the same windows for a given n_steps.
inline std::vector<ProfileRecord> run_profile(const Dataset& ds, const ParamVector& theta, const ProfileConfig& pc) {
  if (!MemoryProbe::available()) {
    throw Error("profile: allocation instrumentation is not installed in this executable");
  }
  std::vector<ProfileRecord> out;
  for (std::size_t n : pc.steps) {
    Rng rng(mix_seed(pc.seed) ^ n);
    const auto batch = sample_batch(ds, pc.batch_size, n, rng, pc.stride);
    for (GradMode mode : pc.modes) {
      TrainConfig cfg;
      cfg.tau = n;
      cfg.stride = pc.stride;
      cfg.grad_mode = mode;
      cfg.fpi = pc.fpi;
      cfg.threads = 1;
      const double h = cfg.step_size(ds.manifest);
      ParamVector params = theta;
      MemoryProbe probe;
      probe.reset();
      const auto t0 = std::chrono::steady_clock::now();
      {
        const auto g = batch_gradient(params, batch.windows, h, cfg);
        Adam adam(params.size(), cfg.adam);
        adam.step(params.values, g.grad, cfg.lr0);
      }
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      out.push_back({mode, n, probe.peak_additional(), secs, pc.batch_size});
    }
  }
  return out;
}

inline void write_profile_csv(std::ostream& os, const std::vector<ProfileRecord>& rows) {
  os << "grad_mode,n_steps,peak_bytes,wall_seconds,batch_size\n"
     << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : rows) {
    os << to_string(r.grad_mode) << ',' << r.n_steps << ',' << r.peak_bytes << ',' << r.wall_seconds << ','
       << r.batch_size << '\n';
  }
}

}  // namespace ihnn::profile
