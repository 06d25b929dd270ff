#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ihnn/core/error.hpp"
#include "ihnn/core/random.hpp"

namespace ihnn {

/// Offsets of one dense layer inside the flat parameter array.
/// Weights are row-major [out x in], followed by the bias [out].
struct LayerLayout {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

/// Layer widths of a scalar-output feed-forward network, input first.
class Architecture {
 public:
  Architecture() = default;

  explicit Architecture(std::vector<std::size_t> widths) : widths_(std::move(widths)) {
    if (widths_.size() < 2) throw ConfigError("architecture needs at least an input and an output width");
    for (auto w : widths_) {
      if (w == 0) throw ConfigError("architecture widths must be positive");
    }
    if (widths_.front() % 2 != 0) throw ConfigError("architecture input width must be 2d (even)");
    if (widths_.back() != 1) throw ConfigError("architecture output width must be 1");
    std::size_t offset = 0;
    for (std::size_t l = 1; l < widths_.size(); ++l) {
      LayerLayout layer{widths_[l - 1], widths_[l], offset, offset + widths_[l - 1] * widths_[l]};
      offset = layer.bias_offset + layer.out;
      layers_.push_back(layer);
    }
    param_count_ = offset;
  }

  const std::vector<std::size_t>& widths() const { return widths_; }
  const std::vector<LayerLayout>& layers() const { return layers_; }
  std::size_t param_count() const { return param_count_; }
  std::size_t input_dim() const { return widths_.front(); }
  std::size_t state_dim() const { return widths_.front() / 2; }

  std::string to_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < widths_.size(); ++i) s += (i ? "," : "") + std::to_string(widths_[i]);
    return s + "]";
  }

  friend bool operator==(const Architecture& a, const Architecture& b) { return a.widths_ == b.widths_; }

 private:
  std::vector<std::size_t> widths_;
  std::vector<LayerLayout> layers_;
  std::size_t param_count_ = 0;
};

/// Network parameters theta with their architecture.
struct ParamVector {
  Architecture arch;
  std::vector<double> values;

  ParamVector() = default;
  ParamVector(Architecture a, std::vector<double> v) : arch(std::move(a)), values(std::move(v)) {
    require_dims(values.size(), arch.param_count(), "parameter vector");
  }

  std::size_t size() const { return values.size(); }
  const std::vector<LayerLayout>& layout() const { return arch.layers(); }
};

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
inline ParamVector init_params(const Architecture& arch, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> values(arch.param_count(), 0.0);
  for (const auto& layer : arch.layers()) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(layer.in));
    for (std::size_t k = 0; k < layer.in * layer.out; ++k) {
      values[layer.weight_offset + k] = rng.uniform(-scale, scale);
    }
  }
  return ParamVector(arch, std::move(values));
}

inline ParamVector init_params(std::vector<std::size_t> widths, std::uint64_t seed) {
  return init_params(Architecture(std::move(widths)), seed);
}

/// Widths 2d -> 16 -> 32 -> 16 -> 1 used for every benchmark system.
inline Architecture default_architecture(std::size_t d) { return Architecture({2 * d, 16, 32, 16, 1}); }

}  // namespace ihnn
