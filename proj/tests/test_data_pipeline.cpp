#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "ihnn/data/dataset.hpp"

namespace ihnn {
namespace {

DatasetManifest small_manifest(std::size_t n_train = 16, std::size_t n_val = 4) {
  DatasetManifest m;
  m.n_train = n_train;
  m.n_val = n_val;
  m.seed = 11;
  return m;
}

TEST(InitialConditions, DegenerateBoxAndDeterminism) {
  const auto zero = sample_initial_conditions(10, {{0.0, 0.0}, {0.0, 0.0}}, 1);
  for (const auto& y : zero) EXPECT_EQ(y, PhasePoint({0.0}, {0.0}));
  const auto a = sample_initial_conditions(50, {{-1, 1}, {-2, 3}}, 5);
  const auto b = sample_initial_conditions(50, {{-1, 1}, {-2, 3}}, 5);
  EXPECT_EQ(a, b);
  for (const auto& y : a) {
    EXPECT_GE(y[1], -2.0);
    EXPECT_LT(y[1], 3.0);
  }
}

TEST(InitialConditions, SampleMeanNearCentre) {
  const auto pts = sample_initial_conditions(16384, {{-1, 1}, {-1, 1}}, 2);
  double mq = 0, mp = 0;
  for (const auto& y : pts) {
    mq += y[0];
    mp += y[1];
  }
  EXPECT_LE(std::abs(mq / 16384), 0.03);
  EXPECT_LE(std::abs(mp / 16384), 0.03);
}

TEST(InitialConditions, InvalidInputs) {
  EXPECT_THROW(sample_initial_conditions(0, {{-1, 1}, {-1, 1}}, 0), ConfigError);
  EXPECT_THROW(sample_initial_conditions(3, {{1, -1}, {-1, 1}}, 0), ConfigError);
  EXPECT_THROW(sample_initial_conditions(3, {{-1, 1}}, 0), ConfigError);
  EXPECT_THROW(sample_initial_conditions(3, {{-1, 1}, {-1, 1}}, 0, [](const PhasePoint&) { return false; }),
               ConfigError);
}

TEST(InitialConditions, HenonHeilesStaysAdmissible) {
  const auto s = henon_heiles();
  for (const auto& y : sample_initial_conditions(200, s.domain, 3, s.admissible)) {
    EXPECT_LT(s.value(y), 1.0 / 6.0);
    EXPECT_TRUE(s.admissible(y));
  }
}

TEST(GenerateDataset, ZeroNoiseIsBitwiseClean) {
  auto m = small_manifest();
  m.noise_coeff = 0.0;
  const auto ds = generate_dataset(double_well(), m);
  EXPECT_EQ(ds.clean, ds.noisy);
  EXPECT_EQ(ds.clean.size(), 20u * 65u * 2u);
}

TEST(GenerateDataset, NoiseStandardDeviation) {
  auto m = small_manifest(4000, 0);
  m.n_steps = 128;
  const auto ds = generate_dataset(coupled_ho(0.5), m);
  ASSERT_GE(ds.clean.size(), 1000000u);
  double s = 0, s2 = 0;
  for (std::size_t i = 0; i < ds.clean.size(); ++i) {
    const double e = ds.noisy[i] - ds.clean[i];
    s += e;
    s2 += e * e;
  }
  const double n = static_cast<double>(ds.clean.size());
  const double sd = std::sqrt(s2 / n - (s / n) * (s / n));
  EXPECT_NEAR(sd, 0.01, 0.0002);
}

TEST(GenerateDataset, CleanEnergyConserved) {
  const auto sys = double_well();
  const auto ds = generate_dataset(sys, small_manifest());
  for (std::size_t t = 0; t < ds.n_traj(); ++t) {
    const double e0 = sys.value(ds.point(t, 0, true));
    for (std::size_t s = 1; s <= ds.manifest.n_steps; ++s) EXPECT_LE(std::abs(sys.value(ds.point(t, s, true)) - e0), 1e-8);
  }
}

TEST(GenerateDataset, DeterministicAndThreadIndependent) {
  const auto a = generate_dataset(henon_heiles(), small_manifest(), 1);
  const auto b = generate_dataset(henon_heiles(), small_manifest(), 3);
  EXPECT_EQ(a.clean, b.clean);
  EXPECT_EQ(a.noisy, b.noisy);
  auto other = small_manifest();
  other.seed = 12;
  EXPECT_NE(generate_dataset(henon_heiles(), other).noisy, a.noisy);
}

TEST(GenerateDataset, RejectsInvalidManifest) {
  auto m = small_manifest();
  m.dt = 0.0;
  EXPECT_THROW(generate_dataset(double_well(), m), ConfigError);
  m = small_manifest();
  m.noise_coeff = -1.0;
  EXPECT_THROW(generate_dataset(double_well(), m), ConfigError);
  m = small_manifest();
  m.bounds = {{-1, 1}};
  EXPECT_THROW(generate_dataset(double_well(), m), ConfigError);
}

TEST(DatasetIo, RoundTripIsBitIdentical) {
  const auto dir = std::filesystem::temp_directory_path() / "ihnn_dataset_test";
  std::filesystem::remove_all(dir);
  const auto ds = generate_dataset(coupled_ho(0.3), small_manifest());
  save_dataset(dir, ds);
  const auto back = load_dataset(dir);
  EXPECT_EQ(back.manifest, ds.manifest);
  EXPECT_EQ(back.clean, ds.clean);
  EXPECT_EQ(back.noisy, ds.noisy);
  EXPECT_EQ(back.manifest.params.at("alpha"), 0.3);

  io::write_f64(dir / "noisy.f64", std::vector<double>(7, 0.0));
  EXPECT_THROW(load_dataset(dir), IoError);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_dataset(dir), IoError);
}

TEST(DatasetCsv, HeaderAndRowCount) {
  auto m = small_manifest(2, 1);
  m.n_steps = 3;
  const auto ds = generate_dataset(double_well(), m);
  std::ostringstream os;
  write_dataset_csv(os, ds, 2);
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "traj,split,t,clean_q1,clean_p1,noisy_q1,noisy_p1");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 2 * 4);
}

TEST(SampleBatch, SingleValidWindow) {
  auto m = small_manifest(1, 0);
  m.n_steps = 6;
  const auto ds = generate_dataset(double_well(), m);
  Rng rng(0);
  const auto b = sample_batch(ds, 1, 6, rng);
  EXPECT_EQ(b.start_indices[0], 0u);
  EXPECT_EQ(b.windows[0].size(), 7u);
  EXPECT_EQ(b.windows[0][3], ds.point(0, 3));
}

TEST(SampleBatch, BoundsStrideAndErrors) {
  const auto ds = generate_dataset(double_well(), small_manifest());
  Rng rng(1);
  const auto b = sample_batch(ds, 500, 6, rng, 4);
  for (std::size_t k = 0; k < b.size(); ++k) {
    EXPECT_LE(b.start_indices[k], 64u - 24u);
    EXPECT_LT(b.trajectory_ids[k], 16u);
    EXPECT_EQ(b.windows[k][2], ds.point(b.trajectory_ids[k], b.start_indices[k] + 8));
  }
  const auto v = sample_batch(ds, 100, 6, rng, 1, Split::val);
  for (auto id : v.trajectory_ids) {
    EXPECT_GE(id, 16u);
    EXPECT_LT(id, 20u);
  }
  EXPECT_THROW(sample_batch(ds, 1, 65, rng), ConfigError);
  EXPECT_THROW(sample_batch(ds, 1, 17, rng, 4), ConfigError);
}

TEST(SampleBatch, StartIndicesUniform) {
  auto m = small_manifest(4, 0);
  m.n_steps = 16;
  const auto ds = generate_dataset(double_well(), m);
  Rng rng(2);
  const std::size_t draws = 100000, tau = 6, n_starts = 16 - tau + 1;
  std::vector<std::size_t> counts(n_starts, 0);
  for (std::size_t k = 0; k < draws / 1000; ++k) {
    const auto b = sample_batch(ds, 1000, tau, rng);
    for (auto s : b.start_indices) ++counts[s];
  }
  const double expected = static_cast<double>(draws) / n_starts;
  for (auto c : counts) EXPECT_NEAR(static_cast<double>(c), expected, 0.2 * expected);
}

}  // namespace
}  // namespace ihnn
