#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "ihnn/core/error.hpp"

namespace ihnn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias-corrected moments. The learning rate is passed per step so a
/// scheduler can own it.
class Adam {
 public:
  Adam(std::size_t n, AdamConfig cfg = {}) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad, double lr) {
    require_dims(params.size(), m_.size(), "optimizer parameters");
    require_dims(grad.size(), m_.size(), "optimizer gradient");
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * grad[k];
      v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * grad[k] * grad[k];
      const double mhat = m_[k] / c1;
      const double vhat = v_[k] / c2;
      params[k] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }

  std::size_t steps_taken() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

struct PlateauConfig {
  double factor = 0.5;
  int patience = 3;
  double threshold = 1e-4;  // relative improvement that counts as progress
  double min_lr = 0.0;
};

/// Reduce-on-plateau: after more than `patience` epochs without a relative
/// improvement of `threshold` in the monitored loss, multiply the rate by `factor`.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr0, PlateauConfig cfg = {}) : cfg_(cfg), lr_(lr0) {
    if (!(lr0 >= 0.0)) throw ConfigError("learning rate must be >= 0");
    if (!(cfg.factor > 0.0 && cfg.factor < 1.0)) throw ConfigError("plateau factor must be in (0, 1)");
    if (cfg.patience < 0) throw ConfigError("plateau patience must be >= 0");
  }

  double lr() const { return lr_; }

  /// Feeds one epoch's monitored loss; returns the rate for the next epoch.
  double observe(double loss) {
    if (loss < best_ * (1.0 - cfg_.threshold)) {
      best_ = loss;
      bad_epochs_ = 0;
    } else if (++bad_epochs_ > cfg_.patience) {
      lr_ = std::max(cfg_.min_lr, lr_ * cfg_.factor);
      bad_epochs_ = 0;
    }
    return lr_;
  }

 private:
  PlateauConfig cfg_;
  double lr_;
  double best_ = INFINITY;
  int bad_epochs_ = 0;
};

}  // namespace ihnn
