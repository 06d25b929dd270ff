#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ihnn/core/canonical.hpp"
#include "ihnn/core/error.hpp"
#include "ihnn/core/io.hpp"
#include "ihnn/core/parallel.hpp"
#include "ihnn/core/random.hpp"
#include "ihnn/integrators/integrate.hpp"
#include "ihnn/systems/benchmarks.hpp"

namespace ihnn {

inline constexpr int kDatasetFormatVersion = 1;

struct DatasetManifest {
  std::string system = "double_well";
  std::map<std::string, double> params;
  std::size_t d = 1;
  std::size_t n_train = 16384;
  std::size_t n_val = 8192;
  std::size_t n_steps = 64;
  double dt = 0.001;
  double noise_coeff = 0.01;
  std::vector<Interval> bounds;  // 2d intervals; empty means the system's default domain
  std::uint64_t seed = 0;
  int format_version = kDatasetFormatVersion;

  std::size_t n_traj() const { return n_train + n_val; }
  std::size_t points_per_traj() const { return n_steps + 1; }

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dataset: dt must be positive");
    if (n_steps < 1) throw ConfigError("dataset: n_steps must be >= 1");
    if (!(noise_coeff >= 0.0) || !std::isfinite(noise_coeff)) throw ConfigError("dataset: noise_coeff must be >= 0");
    if (n_train < 1) throw ConfigError("dataset: n_train must be >= 1");
    if (d < 1) throw ConfigError("dataset: d must be >= 1");
    if (!bounds.empty() && bounds.size() != 2 * d) {
      throw ConfigError("dataset: expected " + std::to_string(2 * d) + " bound intervals, got " +
                        std::to_string(bounds.size()));
    }
  }

  friend bool operator==(const DatasetManifest& a, const DatasetManifest& b) {
    auto same_bounds = [&] {
      if (a.bounds.size() != b.bounds.size()) return false;
      for (std::size_t i = 0; i < a.bounds.size(); ++i)
        if (a.bounds[i].lo != b.bounds[i].lo || a.bounds[i].hi != b.bounds[i].hi) return false;
      return true;
    };
    return a.system == b.system && a.params == b.params && a.d == b.d && a.n_train == b.n_train &&
           a.n_val == b.n_val && a.n_steps == b.n_steps && a.dt == b.dt && a.noise_coeff == b.noise_coeff &&
           same_bounds() && a.seed == b.seed && a.format_version == b.format_version;
  }
};

inline nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json j;
  j["format_version"] = m.format_version;
  j["system"] = m.system;
  j["params"] = m.params;
  j["d"] = m.d;
  j["n_train"] = m.n_train;
  j["n_val"] = m.n_val;
  j["n_steps"] = m.n_steps;
  j["dt"] = m.dt;
  j["noise_coeff"] = m.noise_coeff;
  j["bounds"] = nlohmann::json::array();
  for (const auto& b : m.bounds) j["bounds"].push_back({b.lo, b.hi});
  j["seed"] = m.seed;
  j["layout"] = "row-major [n_traj, n_steps+1, 2d], little-endian f64, train trajectories first";
  return j;
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  try {
    DatasetManifest m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kDatasetFormatVersion) throw IoError("dataset: unsupported manifest format version");
    m.system = j.at("system").get<std::string>();
    m.params = j.at("params").get<std::map<std::string, double>>();
    m.d = j.at("d").get<std::size_t>();
    m.n_train = j.at("n_train").get<std::size_t>();
    m.n_val = j.at("n_val").get<std::size_t>();
    m.n_steps = j.at("n_steps").get<std::size_t>();
    m.dt = j.at("dt").get<double>();
    m.noise_coeff = j.at("noise_coeff").get<double>();
    for (const auto& b : j.at("bounds")) m.bounds.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
    m.seed = j.at("seed").get<std::uint64_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("dataset: malformed manifest: ") + e.what());
  }
}

/// Clean and noisy trajectories, both row-major [n_traj, n_steps + 1, 2d].
struct Dataset {
  DatasetManifest manifest;
  std::vector<double> clean;
  std::vector<double> noisy;

  std::size_t n_traj() const { return manifest.n_traj(); }
  std::size_t state_size() const { return 2 * manifest.d; }

  PhasePoint point(std::size_t traj, std::size_t step, bool use_clean = false) const {
    const auto& src = use_clean ? clean : noisy;
    const std::size_t off = (traj * manifest.points_per_traj() + step) * state_size();
    return PhasePoint::from_flat(std::span<const double>(src.data() + off, state_size()));
  }

  /// Points start, start + stride, ..., start + len * stride.
  std::vector<PhasePoint> window(std::size_t traj, std::size_t start, std::size_t len, std::size_t stride = 1,
                                 bool use_clean = false) const {
    if (traj >= n_traj() || start + len * stride > manifest.n_steps) {
      throw ConfigError("dataset: window out of range");
    }
    std::vector<PhasePoint> w;
    w.reserve(len + 1);
    for (std::size_t i = 0; i <= len; ++i) w.push_back(point(traj, start + i * stride, use_clean));
    return w;
  }
};

inline void check_bounds(const std::vector<Interval>& bounds) {
  if (bounds.empty() || bounds.size() % 2 != 0) throw ConfigError("bounds: need 2d intervals");
  for (const auto& b : bounds) {
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || b.lo > b.hi) {
      throw ConfigError("bounds: invalid interval [" + std::to_string(b.lo) + ", " + std::to_string(b.hi) + "]");
    }
  }
}

/// n i.i.d. uniform points in the box, redrawn until `admissible` accepts them.
inline std::vector<PhasePoint> sample_initial_conditions(
    std::size_t n, const std::vector<Interval>& bounds, std::uint64_t seed,
    const std::function<bool(const PhasePoint&)>& admissible = {}) {
  if (n < 1) throw ConfigError("sample_initial_conditions: n must be >= 1");
  check_bounds(bounds);
  Rng rng(seed);
  std::vector<PhasePoint> out;
  out.reserve(n);
  std::vector<double> flat(bounds.size());
  const std::size_t max_draws = 10000 * n;
  std::size_t draws = 0;
  while (out.size() < n) {
    if (++draws > max_draws) throw ConfigError("sample_initial_conditions: admissible region is (nearly) empty");
    for (std::size_t k = 0; k < flat.size(); ++k) flat[k] = rng.uniform(bounds[k].lo, bounds[k].hi);
    auto y = PhasePoint::from_flat(flat);
    if (!admissible || admissible(y)) out.push_back(std::move(y));
  }
  return out;
}

namespace detail {
inline constexpr std::uint64_t kNoiseSalt = 0x6E6F697365ULL;
}

/// Reference trajectories with additive Gaussian noise on every stored scalar
/// (initial point included). Noise for trajectory i is drawn from its own stream
/// seeded by seed ^ i, so the thread count does not change the output.
inline Dataset generate_dataset(const SystemSpec& spec, DatasetManifest m, std::size_t threads = 1) {
  m.system = spec.name;
  m.params = spec.params;
  m.d = spec.d;
  if (m.bounds.empty()) m.bounds = spec.domain;
  m.validate();
  check_bounds(m.bounds);
  const auto ics = sample_initial_conditions(m.n_traj(), m.bounds, m.seed, spec.admissible);

  Dataset ds;
  ds.manifest = m;
  const std::size_t stride = m.points_per_traj() * 2 * m.d;
  ds.clean.assign(m.n_traj() * stride, 0.0);
  ds.noisy.assign(m.n_traj() * stride, 0.0);
  auto field = [&spec](const PhasePoint& y) { return spec.dynamics(y); };
  parallel_for(m.n_traj(), threads, [&](std::size_t i) {
    const auto traj = reference_integrate(field, ics[i], m.dt, m.n_steps);
    Rng noise(mix_seed(m.seed + detail::kNoiseSalt) ^ static_cast<std::uint64_t>(i));
    std::size_t off = i * stride;
    for (const auto& y : traj.points) {
      for (double x : y.flat()) {
        ds.clean[off] = x;
        ds.noisy[off] = m.noise_coeff == 0.0 ? x : x + m.noise_coeff * noise.normal();
        ++off;
      }
    }
  });
  return ds;
}

inline void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir);
  io::write_text(dir / "manifest.json", to_json(ds.manifest).dump(2) + "\n");
  io::write_f64(dir / "clean.f64", ds.clean);
  io::write_f64(dir / "noisy.f64", ds.noisy);
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("dataset directory not found: " + dir.string());
  Dataset ds;
  ds.manifest = manifest_from_json(io::read_json(dir / "manifest.json"));
  ds.manifest.validate();
  ds.clean = io::read_f64(dir / "clean.f64");
  ds.noisy = io::read_f64(dir / "noisy.f64");
  const std::size_t expected = ds.manifest.n_traj() * ds.manifest.points_per_traj() * 2 * ds.manifest.d;
  if (ds.clean.size() != expected || ds.noisy.size() != expected) {
    throw IoError("dataset " + dir.string() + ": payload size does not match manifest (expected " +
                  std::to_string(expected) + " values)");
  }
  return ds;
}

/// One row per stored point: traj, split, t, clean q.., clean p.., noisy q.., noisy p...
inline void write_dataset_csv(std::ostream& out, const Dataset& ds, std::size_t max_traj) {
  const std::size_t d = ds.manifest.d;
  out << "traj,split,t";
  for (const char* kind : {"clean", "noisy"}) {
    for (std::size_t i = 1; i <= d; ++i) out << ',' << kind << "_q" << i;
    for (std::size_t i = 1; i <= d; ++i) out << ',' << kind << "_p" << i;
  }
  out << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t t = 0; t < std::min(max_traj, ds.n_traj()); ++t) {
    for (std::size_t s = 0; s < ds.manifest.points_per_traj(); ++s) {
      out << t << ',' << (t < ds.manifest.n_train ? "train" : "val") << ','
          << static_cast<double>(s) * ds.manifest.dt;
      for (double x : ds.point(t, s, true).flat()) out << ',' << x;
      for (double x : ds.point(t, s, false).flat()) out << ',' << x;
      out << '\n';
    }
  }
}

enum class Split { train, val };

/// Batch of observed windows; window b holds tau + 1 noisy points spaced by stride.
struct TrajectoryBatch {
  std::vector<std::vector<PhasePoint>> windows;
  std::vector<std::size_t> start_indices;
  std::vector<std::size_t> trajectory_ids;

  std::size_t size() const { return windows.size(); }
};

/// Uniform trajectory (within the split) and uniform start in [0, n_steps - tau * stride].
inline TrajectoryBatch sample_batch(const Dataset& ds, std::size_t batch_size, std::size_t tau, Rng& rng,
                                    std::size_t stride = 1, Split split = Split::train) {
  if (tau < 1 || stride < 1) throw ConfigError("sample_batch: tau and stride must be >= 1");
  if (tau * stride > ds.manifest.n_steps) {
    throw ConfigError("sample_batch: tau * stride = " + std::to_string(tau * stride) + " exceeds stored horizon " +
                      std::to_string(ds.manifest.n_steps));
  }
  const std::size_t first = split == Split::train ? 0 : ds.manifest.n_train;
  const std::size_t count = split == Split::train ? ds.manifest.n_train : ds.manifest.n_val;
  if (count == 0) throw ConfigError("sample_batch: split is empty");
  const std::size_t n_starts = ds.manifest.n_steps - tau * stride + 1;
  TrajectoryBatch b;
  b.windows.reserve(batch_size);
  for (std::size_t k = 0; k < batch_size; ++k) {
    const std::size_t traj = first + rng.below(count);
    const std::size_t start = rng.below(n_starts);
    b.trajectory_ids.push_back(traj);
    b.start_indices.push_back(start);
    b.windows.push_back(ds.window(traj, start, tau, stride));
  }
  return b;
}

}  // namespace ihnn
