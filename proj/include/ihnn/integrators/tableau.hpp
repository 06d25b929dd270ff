#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "ihnn/core/error.hpp"

namespace ihnn {

struct SymplecticCheck {
  bool symplectic = false;
  double weights_violation = 0.0;  // max |b_i - B_i|
  double nodes_violation = 0.0;    // max |c_i - C_i|
  double cross_violation = 0.0;    // max |b_i A_ij + B_j a_ji - b_i B_j|
  double max_violation = 0.0;  // over the weight and cross conditions
};

inline constexpr double kSymplecticTolerance = 1e-12;

/// Coefficients of an s-stage partitioned Runge-Kutta scheme.
/// (a, b, c) act on the q partition, (A, B, C) on the p partition.
struct PrkTableau {
  std::string name;
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  std::vector<double> c;
  std::vector<std::vector<double>> A;
  std::vector<double> B;
  std::vector<double> C;

  std::size_t stages() const { return b.size(); }

  /// True when every stage uses only earlier stages on both partitions.
  bool explicit_scheme() const {
    for (std::size_t i = 0; i < stages(); ++i)
      for (std::size_t j = i; j < stages(); ++j)
        if (a[i][j] != 0.0 || A[i][j] != 0.0) return false;
    return true;
  }
};

namespace detail {
inline void check_shape(const PrkTableau& t) {
  const std::size_t s = t.b.size();
  if (s == 0) throw DimensionError("tableau '" + t.name + "': no stages");
  auto square = [s](const std::vector<std::vector<double>>& m) {
    return m.size() == s && std::all_of(m.begin(), m.end(), [s](const auto& row) { return row.size() == s; });
  };
  if (!square(t.a) || !square(t.A) || t.c.size() != s || t.B.size() != s || t.C.size() != s) {
    throw DimensionError("tableau '" + t.name + "': coefficient arrays disagree on the stage count");
  }
}
}  // namespace detail

/// Symplecticity conditions of a PRK scheme:
///   b_i = B_i,  c_i = C_i,  b_i A_ij + B_j a_ji - b_i B_j = 0.
///
/// The node condition only matters when H depends on time. It is reported but
/// does not decide the verdict, since every Hamiltonian here is autonomous (the
/// symplectic Euler pair has c = 0, C = 1 and is symplectic for autonomous H).
inline SymplecticCheck check_symplectic_tableau(const PrkTableau& t) {
  detail::check_shape(t);
  const std::size_t s = t.stages();
  SymplecticCheck r;
  for (std::size_t i = 0; i < s; ++i) {
    r.weights_violation = std::max(r.weights_violation, std::abs(t.b[i] - t.B[i]));
    r.nodes_violation = std::max(r.nodes_violation, std::abs(t.c[i] - t.C[i]));
    for (std::size_t j = 0; j < s; ++j) {
      const double v = t.b[i] * t.A[i][j] + t.B[j] * t.a[j][i] - t.b[i] * t.B[j];
      r.cross_violation = std::max(r.cross_violation, std::abs(v));
    }
  }
  r.max_violation = std::max(r.weights_violation, r.cross_violation);
  r.symplectic = r.max_violation <= kSymplecticTolerance;
  return r;
}

/// Builds a tableau with nodes derived from row sums (c_i = sum_j a_ij).
inline PrkTableau make_tableau(std::string name, std::vector<std::vector<double>> a, std::vector<double> b,
                               std::vector<std::vector<double>> A, std::vector<double> B) {
  PrkTableau t{std::move(name), std::move(a), std::move(b), {}, std::move(A), std::move(B), {}};
  for (const auto& row : t.a) {
    double sum = 0.0;
    for (double x : row) sum += x;
    t.c.push_back(sum);
  }
  for (const auto& row : t.A) {
    double sum = 0.0;
    for (double x : row) sum += x;
    t.C.push_back(sum);
  }
  detail::check_shape(t);
  return t;
}

/// Rejects tableaus whose nodes are not the row sums of their stage matrices.
inline void check_consistent(const PrkTableau& t) {
  detail::check_shape(t);
  for (std::size_t i = 0; i < t.stages(); ++i) {
    double sa = 0.0, sA = 0.0;
    for (std::size_t j = 0; j < t.stages(); ++j) {
      sa += t.a[i][j];
      sA += t.A[i][j];
    }
    if (std::abs(sa - t.c[i]) > 1e-12 || std::abs(sA - t.C[i]) > 1e-12) {
      throw ConfigError("tableau '" + t.name + "': nodes are not the row sums of the stage matrices");
    }
  }
}

namespace tableaus {

inline PrkTableau implicit_midpoint() { return make_tableau("implicit_midpoint", {{0.5}}, {1.0}, {{0.5}}, {1.0}); }

/// q explicit, p implicit: Q = q, P = p + h l.
inline PrkTableau symplectic_euler() { return make_tableau("symplectic_euler", {{0.0}}, {1.0}, {{1.0}}, {1.0}); }

inline PrkTableau explicit_euler() { return make_tableau("explicit_euler", {{0.0}}, {1.0}, {{0.0}}, {1.0}); }

/// Two-stage Gauss-Legendre collocation, order 4, applied to both partitions.
inline PrkTableau gauss2() {
  const double r = std::sqrt(3.0) / 6.0;
  std::vector<std::vector<double>> a{{0.25, 0.25 - r}, {0.25 + r, 0.25}};
  return make_tableau("gauss2", a, {0.5, 0.5}, a, {0.5, 0.5});
}

}  // namespace tableaus

inline std::vector<std::string> tableau_names() { return {"implicit_midpoint", "symplectic_euler", "gauss2", "explicit_euler"}; }

inline PrkTableau tableau_by_name(std::string_view name) {
  if (name == "implicit_midpoint") return tableaus::implicit_midpoint();
  if (name == "symplectic_euler") return tableaus::symplectic_euler();
  if (name == "gauss2") return tableaus::gauss2();
  if (name == "explicit_euler") return tableaus::explicit_euler();
  throw ConfigError("unknown tableau '" + std::string(name) + "'");
}

}  // namespace ihnn
