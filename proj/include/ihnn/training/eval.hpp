#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ihnn/integrators/integrate.hpp"
#include "ihnn/model/hamiltonian.hpp"
#include "ihnn/systems/benchmarks.hpp"

namespace ihnn {

/// Anything with a scalar energy and a vector field: a trained network or an
/// injected closed form.
struct HamiltonianModel {
  std::function<double(const PhasePoint&)> value;
  std::function<PhasePoint(const PhasePoint&)> dynamics;

  static HamiltonianModel from_params(ParamVector theta) {
    auto shared = std::make_shared<const ParamVector>(std::move(theta));
    return {[shared](const PhasePoint& y) { return eval_h(*shared, y); },
            [shared](const PhasePoint& y) { return ihnn::dynamics(*shared, y); }};
  }

  static HamiltonianModel from_system(const SystemSpec& s, double offset = 0.0) {
    return {[s, offset](const PhasePoint& y) { return s.value(y) + offset; },
            [s](const PhasePoint& y) { return s.dynamics(y); }};
  }
};

/// Uniform n x n grid over one (q_i, p_i) plane; all other coordinates are held
/// at `slice` values.
struct GridSpec {
  std::size_t n = 33;
  std::size_t q_index = 0;  // which conjugate pair spans the plane
  Interval q_range{-1.0, 1.0};
  Interval p_range{-1.0, 1.0};
  std::vector<double> slice;  // full 2d state, entries of the plane coordinates ignored

  void validate(std::size_t d) const {
    if (n < 2) throw ConfigError("grid: need at least 2 points per axis");
    if (q_index >= d) throw ConfigError("grid: plane index out of range");
    if (!slice.empty() && slice.size() != 2 * d) throw ConfigError("grid: slice must have 2d entries");
    for (const auto& r : {q_range, p_range}) {
      if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || !(r.lo < r.hi)) throw ConfigError("grid: invalid range");
    }
  }

  PhasePoint point(std::size_t d, std::size_t i, std::size_t j) const {
    std::vector<double> flat = slice.empty() ? std::vector<double>(2 * d, 0.0) : slice;
    const double step = 1.0 / static_cast<double>(n - 1);
    flat[q_index] = q_range.lo + (q_range.hi - q_range.lo) * static_cast<double>(i) * step;
    flat[d + q_index] = p_range.lo + (p_range.hi - p_range.lo) * static_cast<double>(j) * step;
    return PhasePoint::from_flat(std::move(flat));
  }
};

/// Default grid: the (q_y, p_y) plane at q_x = p_x = 0 for two degrees of
/// freedom, the (q, p) plane otherwise; ranges from the system domain.
inline GridSpec default_grid(const SystemSpec& s, std::size_t n = 33) {
  GridSpec g;
  g.n = n;
  g.q_index = s.d == 2 ? 1 : 0;
  g.q_range = s.domain[g.q_index];
  g.p_range = s.domain[s.d + g.q_index];
  g.slice.assign(2 * s.d, 0.0);
  return g;
}

struct GridSample {
  PhasePoint y;
  double h_true = 0.0;
  double h_pred = 0.0;
  double dyn_err = 0.0;
};

struct EvalReport {
  std::string system;
  double h_l1_mean = 0.0;  // after subtracting alignment_offset
  double h_l1_max = 0.0;
  double h_l1_mean_raw = 0.0;
  double h_l1_max_raw = 0.0;
  double dyn_l2_mean = 0.0;
  double energy_drift = 0.0;
  double alignment_offset = 0.0;  // mean(H_pred - H_true)
  GridSpec grid;
  std::vector<GridSample> samples;  // not serialised to JSON
};

/// L1 energy error and L2 vector-field error over the grid. H is identified only
/// up to a constant, so the mean offset is removed and recorded; raw errors are
/// reported alongside.
inline EvalReport evaluate_ood(const HamiltonianModel& model, const SystemSpec& sys, const GridSpec& grid) {
  grid.validate(sys.d);
  EvalReport r;
  r.system = sys.name;
  r.grid = grid;
  r.samples.reserve(grid.n * grid.n);
  double offset = 0.0;
  for (std::size_t i = 0; i < grid.n; ++i) {
    for (std::size_t j = 0; j < grid.n; ++j) {
      GridSample s{grid.point(sys.d, i, j)};
      s.h_true = sys.value(s.y);
      s.h_pred = model.value(s.y);
      const auto ft = sys.dynamics(s.y), fp = model.dynamics(s.y);
      double e2 = 0.0;
      for (std::size_t k = 0; k < ft.size(); ++k) e2 += (ft[k] - fp[k]) * (ft[k] - fp[k]);
      s.dyn_err = std::sqrt(e2);
      offset += s.h_pred - s.h_true;
      r.samples.push_back(std::move(s));
    }
  }
  const double count = static_cast<double>(r.samples.size());
  r.alignment_offset = offset / count;
  for (const auto& s : r.samples) {
    const double raw = std::abs(s.h_pred - s.h_true);
    const double aligned = std::abs(s.h_pred - s.h_true - r.alignment_offset);
    r.h_l1_mean_raw += raw;
    r.h_l1_max_raw = std::max(r.h_l1_max_raw, raw);
    r.h_l1_mean += aligned;
    r.h_l1_max = std::max(r.h_l1_max, aligned);
    r.dyn_l2_mean += s.dyn_err;
  }
  r.h_l1_mean /= count;
  r.h_l1_mean_raw /= count;
  r.dyn_l2_mean /= count;
  return r;
}

/// max_t |H(y(t)) - H(y0)| along n steps of the model's own dynamics.
inline double energy_drift(const HamiltonianModel& model, const PhasePoint& y0, double h, std::size_t n,
                           const StepMethod& method = StepMethod::implicit_midpoint(), const FpiConfig& cfg = {}) {
  if (n == 0) return 0.0;
  const auto traj = integrate(model.dynamics, y0, h, n, method, cfg).trajectory;
  const double e0 = model.value(y0);
  double drift = 0.0;
  for (const auto& y : traj.points) drift = std::max(drift, std::abs(model.value(y) - e0));
  return drift;
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["system"] = r.system;
  j["h_l1_mean"] = r.h_l1_mean;
  j["h_l1_max"] = r.h_l1_max;
  j["h_l1_mean_raw"] = r.h_l1_mean_raw;
  j["h_l1_max_raw"] = r.h_l1_max_raw;
  j["dyn_l2_mean"] = r.dyn_l2_mean;
  j["energy_drift"] = r.energy_drift;
  j["alignment_offset"] = r.alignment_offset;
  j["grid"] = {{"n", r.grid.n},
               {"q_index", r.grid.q_index},
               {"q_range", {r.grid.q_range.lo, r.grid.q_range.hi}},
               {"p_range", {r.grid.p_range.lo, r.grid.p_range.hi}},
               {"slice", r.grid.slice}};
  return j;
}

inline EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.system = j.at("system").get<std::string>();
  r.h_l1_mean = j.at("h_l1_mean").get<double>();
  r.h_l1_max = j.at("h_l1_max").get<double>();
  r.h_l1_mean_raw = j.at("h_l1_mean_raw").get<double>();
  r.h_l1_max_raw = j.at("h_l1_max_raw").get<double>();
  r.dyn_l2_mean = j.at("dyn_l2_mean").get<double>();
  r.energy_drift = j.at("energy_drift").get<double>();
  r.alignment_offset = j.at("alignment_offset").get<double>();
  const auto& g = j.at("grid");
  r.grid.n = g.at("n").get<std::size_t>();
  r.grid.q_index = g.at("q_index").get<std::size_t>();
  r.grid.q_range = {g.at("q_range").at(0).get<double>(), g.at("q_range").at(1).get<double>()};
  r.grid.p_range = {g.at("p_range").at(0).get<double>(), g.at("p_range").at(1).get<double>()};
  r.grid.slice = g.at("slice").get<std::vector<double>>();
  return r;
}

/// Columns q, p (plane coordinates), h_true, h_pred, abs_err (aligned), dyn_err.
inline void write_grid_csv(std::ostream& out, const EvalReport& r) {
  out << "q,p,h_true,h_pred,abs_err,dyn_err\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& s : r.samples) {
    const std::size_t d = s.y.dim();
    out << s.y[r.grid.q_index] << ',' << s.y[d + r.grid.q_index] << ',' << s.h_true << ',' << s.h_pred << ','
        << std::abs(s.h_pred - s.h_true - r.alignment_offset) << ',' << s.dyn_err << '\n';
  }
}

// ---------------------------------------------------------------------------
// Comparison table: one row per system with its Hamiltonian error and the
// runtime until the validation loss saturated.

struct ReportRow {
  std::string system;
  double h_l1_mean = 0.0;
  double h_l1_mean_raw = 0.0;
  double runtime_s = 0.0;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

inline std::string report_markdown(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  os << std::setprecision(5) << std::fixed;
  os << "| System | Error (aligned) | Error (raw) | Runtime (s) |\n";
  os << "|---|---|---|---|\n";
  for (const auto& r : rows) {
    os << "| " << r.system << " | " << r.h_l1_mean << " | " << r.h_l1_mean_raw << " | " << std::setprecision(2)
       << r.runtime_s << std::setprecision(5) << " |\n";
  }
  return os.str();
}

inline std::string report_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  os << "system,h_l1_mean,h_l1_mean_raw,runtime_s\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : rows) os << r.system << ',' << r.h_l1_mean << ',' << r.h_l1_mean_raw << ',' << r.runtime_s << '\n';
  return os.str();
}

inline std::vector<ReportRow> parse_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "system,h_l1_mean,h_l1_mean_raw,runtime_s") {
    throw IoError("report csv: unexpected header");
  }
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    ReportRow r;
    std::string cell;
    std::getline(ls, r.system, ',');
    try {
      std::getline(ls, cell, ',');
      r.h_l1_mean = std::stod(cell);
      std::getline(ls, cell, ',');
      r.h_l1_mean_raw = std::stod(cell);
      std::getline(ls, cell, ',');
      r.runtime_s = std::stod(cell);
    } catch (const std::exception&) {
      throw IoError("report csv: malformed row '" + line + "'");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace ihnn
