#pragma once

#include <cmath>

namespace ihnn::ad {

/// First-order forward-mode number: value plus one directional derivative.
///
/// Running the reverse sweep of a network on Dual inputs yields the directional
/// derivative of the reverse-mode gradient, i.e. Hessian-vector products
/// (forward-over-reverse).
struct Dual {
  double value = 0.0;
  double tangent = 0.0;

  constexpr Dual() = default;
  constexpr Dual(double v, double t = 0.0) : value(v), tangent(t) {}  // NOLINT(google-explicit-constructor)

  Dual& operator+=(const Dual& o) {
    value += o.value;
    tangent += o.tangent;
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    value -= o.value;
    tangent -= o.tangent;
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    tangent = tangent * o.value + value * o.tangent;
    value *= o.value;
    return *this;
  }
};

inline Dual operator-(const Dual& a) { return {-a.value, -a.tangent}; }
inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator+(const Dual& a, double b) { return {a.value + b, a.tangent}; }
inline Dual operator+(double a, const Dual& b) { return {a + b.value, b.tangent}; }
inline Dual operator-(const Dual& a, double b) { return {a.value - b, a.tangent}; }
inline Dual operator-(double a, const Dual& b) { return {a - b.value, -b.tangent}; }
inline Dual operator*(const Dual& a, double b) { return {a.value * b, a.tangent * b}; }
inline Dual operator*(double a, const Dual& b) { return {a * b.value, a * b.tangent}; }

inline Dual tanh(const Dual& a) {
  const double t = std::tanh(a.value);
  return {t, (1.0 - t * t) * a.tangent};
}

inline double value_of(const Dual& a) { return a.value; }

}  // namespace ihnn::ad
