#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ihnn/core/canonical.hpp"
#include "ihnn/core/error.hpp"

namespace ihnn {

struct Interval {
  double lo = -1.0;
  double hi = 1.0;
};

/// Ground-truth Hamiltonian system with its sampling domain.
struct SystemSpec {
  std::string name;
  std::size_t d = 1;
  std::function<double(const PhasePoint&)> true_h;
  std::function<PhasePoint(const PhasePoint&)> true_dynamics;
  std::vector<Interval> domain;  // 2d intervals, q coordinates first
  std::map<std::string, double> params;
  // Initial conditions failing this test are resampled (bounded-orbit regime).
  std::function<bool(const PhasePoint&)> admissible = [](const PhasePoint&) { return true; };
  bool degenerate = false;

  double value(const PhasePoint& y) const { return true_h(y); }
  PhasePoint dynamics(const PhasePoint& y) const { return true_dynamics(y); }
  std::size_t dim() const { return d; }
};

namespace detail {
inline std::vector<Interval> unit_box(std::size_t d) { return std::vector<Interval>(2 * d, Interval{-1.0, 1.0}); }
}  // namespace detail

/// H = p^2/2 + q^4/4 - q^2/2.
inline SystemSpec double_well() {
  SystemSpec s;
  s.name = "double_well";
  s.d = 1;
  s.true_h = [](const PhasePoint& y) {
    const double q = y[0], p = y[1];
    return 0.5 * p * p + 0.25 * q * q * q * q - 0.5 * q * q;
  };
  s.true_dynamics = [](const PhasePoint& y) {
    const double q = y[0], p = y[1];
    return PhasePoint({p}, {q - q * q * q});
  };
  s.domain = detail::unit_box(1);
  return s;
}

/// H = p^2/2 + q^2/2 + alpha p q. Orbits are bounded for |alpha| < 1.
inline SystemSpec coupled_ho(double alpha = 0.5) {
  SystemSpec s;
  s.name = "coupled_ho";
  s.d = 1;
  s.params["alpha"] = alpha;
  s.degenerate = std::abs(alpha) >= 1.0;
  s.true_h = [alpha](const PhasePoint& y) {
    const double q = y[0], p = y[1];
    return 0.5 * p * p + 0.5 * q * q + alpha * p * q;
  };
  s.true_dynamics = [alpha](const PhasePoint& y) {
    const double q = y[0], p = y[1];
    return PhasePoint({p + alpha * q}, {-(q + alpha * p)});
  };
  s.domain = detail::unit_box(1);
  return s;
}

/// H = (px^2 + py^2)/2 + (qx^2 + qy^2)/2 + qx^2 qy - qy^3/3, coordinates (qx, qy, px, py).
///
/// Initial conditions are restricted to energies below `energy_cap` inside the
/// triangle bounded by the escape-energy equipotential (vertices (0, 1) and
/// (+-sqrt(3)/2, -1/2)), where orbits stay bounded.
inline SystemSpec henon_heiles(double energy_cap = 1.0 / 6.0) {
  SystemSpec s;
  s.name = "henon_heiles";
  s.d = 2;
  s.params["energy_cap"] = energy_cap;
  s.true_h = [](const PhasePoint& y) {
    const double qx = y[0], qy = y[1], px = y[2], py = y[3];
    return 0.5 * (px * px + py * py) + 0.5 * (qx * qx + qy * qy) + qx * qx * qy - qy * qy * qy / 3.0;
  };
  s.true_dynamics = [](const PhasePoint& y) {
    const double qx = y[0], qy = y[1], px = y[2], py = y[3];
    return PhasePoint({px, py}, {-qx - 2.0 * qx * qy, -qy - qx * qx + qy * qy});
  };
  s.domain = detail::unit_box(2);
  const auto h = s.true_h;
  s.admissible = [h, energy_cap](const PhasePoint& y) {
    const double qx = y[0], qy = y[1];
    const double r3 = std::sqrt(3.0);
    const bool inside = qy > -0.5 && qy < 1.0 - r3 * qx && qy < 1.0 + r3 * qx;
    return inside && h(y) < energy_cap;
  };
  return s;
}

inline std::vector<std::string> system_names() { return {"double_well", "coupled_ho", "henon_heiles"}; }

/// Registry lookup. Recognised params: "alpha" (coupled_ho), "energy_cap" (henon_heiles).
inline SystemSpec system_by_name(std::string_view name, const std::map<std::string, double>& params = {}) {
  auto get = [&](const char* key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  for (const auto& [key, value] : params) {
    (void)value;
    const bool known = (name == "coupled_ho" && key == "alpha") || (name == "henon_heiles" && key == "energy_cap");
    if (!known) throw ConfigError("system '" + std::string(name) + "' has no parameter '" + key + "'");
  }
  if (name == "double_well") return double_well();
  if (name == "coupled_ho") return coupled_ho(get("alpha", 0.5));
  if (name == "henon_heiles") return henon_heiles(get("energy_cap", 1.0 / 6.0));
  throw ConfigError("unknown system '" + std::string(name) + "'");
}

}  // namespace ihnn
