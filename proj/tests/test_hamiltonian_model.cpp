#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "ihnn/model/checkpoint.hpp"
#include "ihnn/model/hamiltonian.hpp"
#include "test_support.hpp"

namespace ihnn {
namespace {

using testing::max_rel_error;
using testing::random_point;

// Naive forward pass written against explicit per-layer matrices, independent of
// the flat-offset sweep in mlp.hpp.
double naive_forward(const std::vector<std::size_t>& widths, const std::vector<double>& theta,
                     const std::vector<double>& x) {
  std::vector<double> act = x;
  std::size_t pos = 0;
  for (std::size_t l = 1; l < widths.size(); ++l) {
    const std::size_t in = widths[l - 1], out = widths[l];
    std::vector<std::vector<double>> W(out, std::vector<double>(in));
    for (auto& row : W)
      for (auto& w : row) w = theta[pos++];
    std::vector<double> b(theta.begin() + pos, theta.begin() + pos + out);
    pos += out;
    std::vector<double> next(out);
    for (std::size_t i = 0; i < out; ++i) {
      double z = b[i];
      for (std::size_t j = 0; j < in; ++j) z += W[i][j] * act[j];
      next[i] = (l + 1 == widths.size()) ? z : std::tanh(z);
    }
    act = next;
  }
  return act[0];
}

ParamVector zero_params(const std::vector<std::size_t>& widths) {
  Architecture arch(widths);
  return ParamVector(arch, std::vector<double>(arch.param_count(), 0.0));
}

TEST(InitParams, DefaultArchitectureLength) {
  // 2*16+16 + 16*32+32 + 32*16+16 + 16*1+1
  const auto theta = init_params({2, 16, 32, 16, 1}, 0);
  EXPECT_EQ(theta.size(), 48u + 544u + 528u + 17u);
  EXPECT_EQ(theta.size(), 1137u);
  EXPECT_EQ(default_architecture(2).param_count(), 4u * 16 + 16 + 544 + 528 + 17);
}

TEST(InitParams, SingleLayerHasZeroBias) {
  const auto theta = init_params({2, 1}, 7);
  ASSERT_EQ(theta.size(), 3u);
  EXPECT_EQ(theta.values[2], 0.0);
  EXPECT_NE(theta.values[0], 0.0);
}

TEST(InitParams, DeterministicAndScaled) {
  const auto a = init_params({4, 8, 1}, 42);
  const auto b = init_params({4, 8, 1}, 42);
  EXPECT_EQ(a.values, b.values);
  const auto c = init_params({4, 8, 1}, 43);
  EXPECT_NE(a.values, c.values);
  for (const auto& layer : a.layout()) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(layer.in));
    for (std::size_t k = 0; k < layer.in * layer.out; ++k) {
      EXPECT_LE(std::abs(a.values[layer.weight_offset + k]), scale);
    }
    for (std::size_t i = 0; i < layer.out; ++i) EXPECT_EQ(a.values[layer.bias_offset + i], 0.0);
  }
}

TEST(InitParams, RejectsInvalidArchitectures) {
  EXPECT_THROW(Architecture(std::vector<std::size_t>{}), ConfigError);
  EXPECT_THROW(Architecture({2}), ConfigError);
  EXPECT_THROW(Architecture({2, 0, 1}), ConfigError);
  EXPECT_THROW(Architecture({2, 4, 2}), ConfigError);
  EXPECT_THROW(Architecture({3, 4, 1}), ConfigError);
}

TEST(EvalH, ZeroNetworkIsZero) {
  const auto theta = zero_params({2, 16, 1});
  EXPECT_EQ(eval_h(theta, PhasePoint({0.3}, {-0.7})), 0.0);
}

TEST(EvalH, MatchesNaiveForwardPass) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::vector<std::size_t> widths{4, 16, 32, 16, 1};
    auto theta = init_params(widths, seed);
    Rng rng(seed + 100);
    for (auto& v : theta.values) v += 0.1 * rng.uniform(-1.0, 1.0);  // nonzero biases too
    const auto y = random_point(2, seed);
    EXPECT_NEAR(eval_h(theta, y), naive_forward(widths, theta.values, y.values()), 1e-14);
  }
}

TEST(EvalH, PureAndDimensionChecked) {
  const auto theta = init_params({2, 8, 1}, 3);
  const PhasePoint y({0.1}, {0.2});
  EXPECT_EQ(eval_h(theta, y), eval_h(theta, y));
  EXPECT_THROW(eval_h(theta, PhasePoint({0.1, 0.2}, {0.3, 0.4})), DimensionError);
  EXPECT_THROW(grad_state(theta, PhasePoint({0.1, 0.2}, {0.3, 0.4})), DimensionError);
  EXPECT_THROW(hess_state(theta, PhasePoint({0.1, 0.2}, {0.3, 0.4})), DimensionError);
}

TEST(GradState, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t d = 1 + seed % 2;
    const auto theta = init_params(default_architecture(d), seed);
    const auto y = random_point(d, 1000 + seed);
    const auto g = grad_state(theta, y);
    std::vector<double> analytic = g.dq;
    analytic.insert(analytic.end(), g.dp.begin(), g.dp.end());
    const auto fd = testing::fd_gradient(
        [&](const std::vector<double>& x) { return eval_h(theta, PhasePoint::from_flat(x)); }, y.values(), 1e-5);
    EXPECT_LE(max_rel_error(analytic, fd), 1e-6) << "seed " << seed;
  }
}

TEST(GradState, ZeroAndLinearNetworks) {
  const auto zero = grad_state(zero_params({2, 8, 8, 1}), PhasePoint({0.5}, {0.5}));
  EXPECT_EQ(zero.dq[0], 0.0);
  EXPECT_EQ(zero.dp[0], 0.0);

  const ParamVector linear(Architecture({4, 1}), {0.25, -1.5, 3.0, 0.125, 9.0});
  const auto g = grad_state(linear, PhasePoint({0.3, -0.2}, {0.9, 4.0}));
  EXPECT_EQ(g.dq, (std::vector<double>{0.25, -1.5}));
  EXPECT_EQ(g.dp, (std::vector<double>{3.0, 0.125}));
}

// tanh(a + e x) + tanh(a - e x) - 2 tanh(a) = tanh''(a) e^2 x^2 + O(e^4), so two
// hidden units per coordinate give H ~ (q^2 + p^2)/2.
ParamVector near_quadratic_network(double eps) {
  const double a = 0.5;
  const double t = std::tanh(a);
  const double curvature = -2.0 * t * (1.0 - t * t);  // tanh''(a)
  const double c = 0.5 / (curvature * eps * eps);
  Architecture arch({2, 4, 1});
  std::vector<double> v(arch.param_count(), 0.0);
  const auto& hidden = arch.layers()[0];
  const auto& out = arch.layers()[1];
  for (std::size_t coord = 0; coord < 2; ++coord) {
    for (int sign = 0; sign < 2; ++sign) {
      const std::size_t unit = 2 * coord + sign;
      v[hidden.weight_offset + unit * 2 + coord] = sign == 0 ? eps : -eps;
      v[hidden.bias_offset + unit] = a;
      v[out.weight_offset + unit] = c;
    }
  }
  v[out.bias_offset] = -4.0 * c * t;
  return ParamVector(arch, v);
}

TEST(Dynamics, QuadraticHamiltonianGivesRotation) {
  const auto theta = near_quadratic_network(1e-3);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto y = random_point(1, seed);
    const auto f = dynamics(theta, y);
    EXPECT_NEAR(f[0], y[1], 1e-5);
    EXPECT_NEAR(f[1], -y[0], 1e-5);
    EXPECT_NEAR(eval_h(theta, y), 0.5 * (y[0] * y[0] + y[1] * y[1]), 1e-5);
  }
}

TEST(Dynamics, ZeroNetworkAndConsistencyWithGradient) {
  const auto f0 = dynamics(zero_params({4, 8, 1}), PhasePoint({0.1, 0.2}, {0.3, 0.4}));
  for (double x : f0.flat()) EXPECT_EQ(x, 0.0);

  const auto theta = init_params(default_architecture(2), 5);
  const auto y = random_point(2, 9);
  const auto f = dynamics(theta, y);
  const auto g = grad_state(theta, y);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(f.q()[i], g.dp[i]);
    EXPECT_EQ(f.p()[i], -g.dq[i]);
  }
}

std::vector<double> flat_gradient(const ParamVector& theta, const PhasePoint& y) {
  const auto g = grad_state(theta, y);
  std::vector<double> out = g.dq;
  out.insert(out.end(), g.dp.begin(), g.dp.end());
  return out;
}

TEST(HessState, MatchesFiniteDifferencesOfGradient) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t d = 1 + seed % 2;
    const auto theta = init_params(default_architecture(d), seed);
    const auto y = random_point(d, 50 + seed);
    const auto h = hess_state(theta, y);
    const double step = 1e-4;
    for (std::size_t k = 0; k < 2 * d; ++k) {
      auto up = y, down = y;
      up[k] += step;
      down[k] -= step;
      const auto gu = flat_gradient(theta, up), gd = flat_gradient(theta, down);
      std::vector<double> fd(2 * d), analytic(2 * d);
      for (std::size_t i = 0; i < 2 * d; ++i) fd[i] = (gu[i] - gd[i]) / (2 * step);
      for (std::size_t i = 0; i < d; ++i) {
        analytic[i] = k < d ? h.hqq(i, k) : h.hqp(i, k - d);
        analytic[d + i] = k < d ? h.hpq(i, k) : h.hpp(i, k - d);
      }
      EXPECT_LE(max_rel_error(analytic, fd), 1e-5) << "seed " << seed << " column " << k;
    }
  }
}

TEST(HessState, SymmetricBlocksAndZeroNetwork) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto theta = init_params(default_architecture(2), seed);
    const auto h = hess_state(theta, random_point(2, seed + 7));
    EXPECT_LE(h.hqq.max_abs_diff(h.hqq.transposed()), 1e-10);
    EXPECT_LE(h.hpp.max_abs_diff(h.hpp.transposed()), 1e-10);
    EXPECT_LE(h.hqp.max_abs_diff(h.hpq.transposed()), 1e-10);
  }
  const auto z = hess_state(zero_params({2, 4, 1}), PhasePoint({1.0}, {1.0}));
  EXPECT_EQ(z.hqq(0, 0), 0.0);
  EXPECT_EQ(z.hqp(0, 0), 0.0);
  EXPECT_EQ(z.hpp(0, 0), 0.0);
}

TEST(VjpParams, ZeroCostate) {
  const auto theta = init_params({2, 8, 1}, 1);
  const auto v = vjp_params(theta, PhasePoint({0.2}, {0.1}), AdjointState(1));
  ASSERT_EQ(v.size(), theta.size());
  for (double x : v) EXPECT_EQ(x, 0.0);
}

TEST(VjpParams, MatchesParameterFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const std::size_t d = 1 + seed % 2;
    const auto theta = init_params({2 * d, 8, 8, 1}, seed);
    const auto y = random_point(d, seed + 3);
    const auto lambda = AdjointState::from_flat(random_point(d, seed + 11).values());
    const auto analytic = vjp_params(theta, y, lambda);
    const auto fd = testing::fd_gradient(
        [&](const std::vector<double>& v) {
          const auto f = dynamics(ParamVector(theta.arch, v), y);
          double s = 0.0;
          for (std::size_t i = 0; i < f.size(); ++i) s += lambda[i] * f[i];
          return s;
        },
        theta.values, 1e-5);
    EXPECT_LE(max_rel_error(analytic, fd), 1e-5) << "seed " << seed;
  }
}

TEST(VjpParams, LinearInCostate) {
  const auto theta = init_params(default_architecture(2), 4);
  const auto y = random_point(2, 1);
  const auto l1 = AdjointState::from_flat(random_point(2, 2).values());
  const auto l2 = AdjointState::from_flat(random_point(2, 3).values());
  const double a = 0.7, b = -1.3;
  const auto combined = vjp_params(theta, y, a * l1 + b * l2);
  const auto v1 = vjp_params(theta, y, l1), v2 = vjp_params(theta, y, l2);
  for (std::size_t k = 0; k < combined.size(); ++k) EXPECT_NEAR(combined[k], a * v1[k] + b * v2[k], 1e-12);
}

TEST(Purity, RepeatedCallsAreBitIdentical) {
  const auto theta = init_params(default_architecture(2), 8);
  const auto y = random_point(2, 8);
  const auto lambda = AdjointState::from_flat(random_point(2, 9).values());
  EXPECT_EQ(flat_gradient(theta, y), flat_gradient(theta, y));
  EXPECT_EQ(vjp_params(theta, y, lambda), vjp_params(theta, y, lambda));
  const auto h1 = hess_state(theta, y), h2 = hess_state(theta, y);
  EXPECT_EQ(h1.hqp.max_abs_diff(h2.hqp), 0.0);
}

TEST(Checkpoint, RoundTripAndValidation) {
  const auto dir = std::filesystem::temp_directory_path() / "ihnn_ckpt_test";
  std::filesystem::create_directories(dir);
  const auto theta = init_params(default_architecture(1), 12);
  save_checkpoint(dir / "model.json", theta, 12, "double_well");
  const auto info = load_checkpoint(dir / "model.json");
  EXPECT_EQ(info.params.values, theta.values);
  EXPECT_EQ(info.params.arch, theta.arch);
  EXPECT_EQ(info.seed, 12u);
  EXPECT_EQ(info.system, "double_well");

  io::write_f64(dir / "model.f64", std::vector<double>(10, 1.0));
  EXPECT_THROW(load_checkpoint(dir / "model.json"), IoError);
  EXPECT_THROW(load_checkpoint(dir / "missing.json"), IoError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace ihnn
