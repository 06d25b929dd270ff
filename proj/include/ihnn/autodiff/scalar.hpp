#pragma once

#include <cmath>

#include "ihnn/autodiff/dual.hpp"
#include "ihnn/autodiff/tape.hpp"

namespace ihnn {

inline double value_of(double x) { return x; }
using ad::value_of;

template <class T>
bool is_finite_scalar(const T& x) {
  return std::isfinite(value_of(x));
}

}  // namespace ihnn
