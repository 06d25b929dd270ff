#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "ihnn/core/parallel.hpp"
#include "ihnn/core/random.hpp"
#include "ihnn/data/dataset.hpp"
#include "ihnn/model/param_vector.hpp"
#include "ihnn/training/optim.hpp"
#include "ihnn/training/window_gradient.hpp"

namespace ihnn {

enum class Shooting { single, multiple };

inline Shooting parse_shooting(std::string_view s) {
  if (s == "single") return Shooting::single;
  if (s == "multiple") return Shooting::multiple;
  throw ConfigError("unknown shooting mode '" + std::string(s) + "' (expected single or multiple)");
}

inline std::string to_string(Shooting s) { return s == Shooting::single ? "single" : "multiple"; }

struct TrainConfig {
  std::size_t tau = 6;
  std::size_t stride = 1;  // observations used every `stride` stored steps
  double h = 0.0;          // 0: dataset dt * stride
  std::size_t batch_size = 512;
  std::size_t epochs = 25;
  std::size_t steps_per_epoch = 0;  // 0: n_train / batch_size, at least 1
  double lr0 = 0.01;
  PlateauConfig scheduler;
  AdamConfig adam;
  Shooting shooting = Shooting::single;
  std::size_t segment_len = 2;  // steps per segment under multiple shooting
  GradMode grad_mode = GradMode::adjoint;
  FpiConfig fpi;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t monitor_windows = 256;  // fixed windows for the per-epoch train/val loss
  double max_unconverged_fraction = 0.5;

  void validate() const {
    if (tau < 1) throw ConfigError("train: tau must be >= 1");
    if (stride < 1) throw ConfigError("train: stride must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (!(lr0 >= 0.0) || !std::isfinite(lr0)) throw ConfigError("train: lr0 must be >= 0");
    if (!(h >= 0.0) || !std::isfinite(h)) throw ConfigError("train: h must be >= 0 (0 derives it from the data)");
    if (shooting == Shooting::multiple && segment_len < 2) {
      throw ConfigError("train: segment length must be >= 2 under multiple shooting");
    }
    if (monitor_windows < 1) throw ConfigError("train: monitor_windows must be >= 1");
    fpi.validate();
  }

  double step_size(const DatasetManifest& m) const { return h > 0.0 ? h : m.dt * static_cast<double>(stride); }
};

/// Loss and gradient of one observed window under the configured shooting mode.
/// Multiple shooting restarts every segment from the observation at its start,
/// so each observed step enters the loss exactly once.
inline WindowGradient shooting_gradient(const ParamVector& theta, std::span<const PhasePoint> obs, double h,
                                        const TrainConfig& cfg, bool want_grad = true) {
  const std::size_t tau = obs.size() - 1;
  const std::size_t seg = cfg.shooting == Shooting::single ? tau : std::min(cfg.segment_len, tau);
  WindowGradient out;
  if (want_grad) out.grad.assign(theta.size(), 0.0);
  for (std::size_t s = 0; s < tau; s += seg) {
    const std::size_t len = std::min(seg, tau - s);
    const auto part = obs.subspan(s, len + 1);
    if (want_grad) {
      auto g = window_gradient(theta, part, h, cfg.fpi, cfg.grad_mode);
      out.loss += g.loss;
      for (std::size_t k = 0; k < out.grad.size(); ++k) out.grad[k] += g.grad[k];
      out.solves += g.solves;
      out.unconverged += g.unconverged;
    } else {
      const auto fwd = rollout(theta, part, h, cfg.fpi);
      out.loss += window_loss(fwd.trajectory.points, part).value;
      out.solves += len;
      out.unconverged += count_unconverged(fwd.reports);
    }
  }
  return out;
}

struct BatchGradient {
  double loss = 0.0;  // mean over the batch
  std::vector<double> grad;
  std::size_t solves = 0;
  std::size_t unconverged = 0;
};

inline constexpr std::size_t kReductionBlock = 16;

/// Mean loss and gradient over a batch. Elements are reduced in fixed blocks of
/// kReductionBlock in index order, so the result does not depend on `threads`.
inline BatchGradient batch_gradient(const ParamVector& theta, const std::vector<std::vector<PhasePoint>>& windows,
                                    double h, const TrainConfig& cfg, bool want_grad = true) {
  const std::size_t n = windows.size();
  if (n == 0) throw ConfigError("batch_gradient: empty batch");
  const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<BatchGradient> partial(blocks);
  parallel_for(blocks, cfg.threads, [&](std::size_t b) {
    auto& acc = partial[b];
    if (want_grad) acc.grad.assign(theta.size(), 0.0);
    for (std::size_t i = b * kReductionBlock; i < std::min(n, (b + 1) * kReductionBlock); ++i) {
      const auto g = shooting_gradient(theta, windows[i], h, cfg, want_grad);
      acc.loss += g.loss;
      for (std::size_t k = 0; k < acc.grad.size(); ++k) acc.grad[k] += g.grad[k];
      acc.solves += g.solves;
      acc.unconverged += g.unconverged;
    }
  });
  BatchGradient out;
  if (want_grad) out.grad.assign(theta.size(), 0.0);
  for (const auto& p : partial) {
    out.loss += p.loss;
    for (std::size_t k = 0; k < out.grad.size(); ++k) out.grad[k] += p.grad[k];
    out.solves += p.solves;
    out.unconverged += p.unconverged;
  }
  const double inv = 1.0 / static_cast<double>(n);
  out.loss *= inv;
  for (auto& g : out.grad) g *= inv;
  return out;
}

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
  double wall_time_s = 0.0;  // cumulative since the start of training
};

struct TrainResult {
  ParamVector params;
  std::vector<EpochMetrics> metrics;
};

inline void write_metrics_csv(std::ostream& out, const std::vector<EpochMetrics>& rows) {
  out << "epoch,train_loss,val_loss,lr,wall_time_s\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : rows) {
    out << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.lr << ',' << r.wall_time_s << '\n';
  }
}

/// Called after every epoch (epoch 0 is the untrained model).
using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Mini-batch training: roll out tau implicit-midpoint steps from each sampled
/// window start, differentiate the squared trajectory error, update with Adam.
///
/// Train and validation losses are measured on fixed windows drawn once per run,
/// so the per-epoch numbers are comparable. The scheduler watches the
/// validation loss.
inline TrainResult train(const Dataset& ds, ParamVector theta, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {}) {
  cfg.validate();
  require_dims(theta.arch.input_dim(), 2 * ds.manifest.d, "network input vs dataset state");
  const double h = cfg.step_size(ds.manifest);
  Rng batch_rng(mix_seed(cfg.seed) ^ 0x7472616E);
  Rng monitor_rng(mix_seed(cfg.seed) ^ 0x6D6F6E69);
  const auto train_monitor = sample_batch(ds, cfg.monitor_windows, cfg.tau, monitor_rng, cfg.stride, Split::train);
  std::optional<TrajectoryBatch> val_monitor;
  if (ds.manifest.n_val > 0) {
    val_monitor = sample_batch(ds, cfg.monitor_windows, cfg.tau, monitor_rng, cfg.stride, Split::val);
  }

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  TrainResult result;
  Adam adam(theta.size(), cfg.adam);
  PlateauScheduler scheduler(cfg.lr0, cfg.scheduler);

  auto measure = [&](std::size_t epoch) {
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = batch_gradient(theta, train_monitor.windows, h, cfg, false).loss;
    m.val_loss = val_monitor ? batch_gradient(theta, val_monitor->windows, h, cfg, false).loss : m.train_loss;
    if (!std::isfinite(m.train_loss) || !std::isfinite(m.val_loss)) {
      throw NumericalError("train: non-finite monitored loss after epoch " + std::to_string(epoch));
    }
    m.lr = scheduler.lr();
    m.wall_time_s = elapsed();
    result.metrics.push_back(m);
    if (on_epoch) on_epoch(m);
    return m;
  };

  measure(0);
  const std::size_t steps =
      cfg.steps_per_epoch > 0 ? cfg.steps_per_epoch : std::max<std::size_t>(1, ds.manifest.n_train / cfg.batch_size);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t b = 0; b < steps; ++b) {
      const auto batch = sample_batch(ds, cfg.batch_size, cfg.tau, batch_rng, cfg.stride, Split::train);
      const auto g = batch_gradient(theta, batch.windows, h, cfg);
      const std::string where = "epoch " + std::to_string(epoch) + ", batch " + std::to_string(b);
      if (!std::isfinite(g.loss)) throw NumericalError("train: non-finite loss at " + where);
      if (static_cast<double>(g.unconverged) > cfg.max_unconverged_fraction * static_cast<double>(g.solves)) {
        throw NumericalError("train: " + std::to_string(g.unconverged) + " of " + std::to_string(g.solves) +
                             " implicit solves did not converge at " + where +
                             " (increase fpi max_iters or reduce h)");
      }
      adam.step(theta.values, g.grad, scheduler.lr());
    }
    const auto m = measure(epoch);  // lr column: the rate used during this epoch
    scheduler.observe(m.val_loss);
  }
  result.params = std::move(theta);
  return result;
}

/// First epoch after which the validation loss improved by less than 1% for three
/// consecutive epochs; the last epoch when that never happens.
inline std::size_t saturation_epoch(const std::vector<EpochMetrics>& rows, double rel = 0.01, std::size_t run = 3) {
  if (rows.empty()) return 0;
  std::size_t streak = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double prev = rows[i - 1].val_loss, cur = rows[i].val_loss;
    const bool small = prev - cur < rel * std::abs(prev);
    streak = small ? streak + 1 : 0;
    if (streak == run) return rows[i - run].epoch;
  }
  return rows.back().epoch;
}

}  // namespace ihnn
