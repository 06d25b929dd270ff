#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "ihnn/autodiff/scalar.hpp"
#include "ihnn/core/error.hpp"

namespace ihnn {

struct PhaseTag {};
struct CostateTag {};

/// Vector on canonical coordinates stored flat as (q_1..q_d, p_1..p_d).
///
/// The tag keeps phase-space points and costates apart at compile time; the
/// scalar type lets the same steppers run on plain doubles or on taped
/// variables.
template <class Tag, class T = double>
class CanonicalVector {
 public:
  using value_type = T;

  CanonicalVector() = default;

  /// Zero vector of half-dimension d.
  explicit CanonicalVector(std::size_t d) : data_(2 * d, T(0.0)) {}

  CanonicalVector(std::vector<T> q, const std::vector<T>& p) : data_(std::move(q)) {
    if (data_.size() != p.size()) {
      throw DimensionError("canonical vector: q has " + std::to_string(data_.size()) + " entries, p has " +
                           std::to_string(p.size()));
    }
    if (data_.empty()) throw DimensionError("canonical vector: dimension must be at least 1");
    data_.insert(data_.end(), p.begin(), p.end());
  }

  static CanonicalVector from_flat(std::vector<T> flat) {
    if (flat.empty() || flat.size() % 2 != 0) {
      throw DimensionError("canonical vector: flat length must be even and positive, got " +
                           std::to_string(flat.size()));
    }
    CanonicalVector v;
    v.data_ = std::move(flat);
    return v;
  }

  static CanonicalVector from_flat(std::span<const T> flat) {
    return from_flat(std::vector<T>(flat.begin(), flat.end()));
  }

  /// Half-dimension d.
  std::size_t dim() const { return data_.size() / 2; }
  std::size_t size() const { return data_.size(); }

  std::span<T> q() { return {data_.data(), dim()}; }
  std::span<const T> q() const { return {data_.data(), dim()}; }
  std::span<T> p() { return {data_.data() + dim(), dim()}; }
  std::span<const T> p() const { return {data_.data() + dim(), dim()}; }

  std::span<T> flat() { return data_; }
  std::span<const T> flat() const { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](const T& x) { return is_finite_scalar(x); });
  }

  CanonicalVector& operator+=(const CanonicalVector& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  CanonicalVector& operator-=(const CanonicalVector& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }

  friend CanonicalVector operator+(CanonicalVector a, const CanonicalVector& b) { return a += b; }
  friend CanonicalVector operator-(CanonicalVector a, const CanonicalVector& b) { return a -= b; }
  friend CanonicalVector operator*(double s, CanonicalVector a) {
    for (auto& x : a.data_) x = s * x;
    return a;
  }
  friend CanonicalVector operator*(CanonicalVector a, double s) { return s * std::move(a); }

  friend bool operator==(const CanonicalVector& a, const CanonicalVector& b)
    requires std::is_same_v<T, double>
  {
    return a.data_ == b.data_;
  }

 private:
  void check_same(const CanonicalVector& o) const { require_dims(o.data_.size(), data_.size(), "canonical vector"); }

  std::vector<T> data_;
};

using PhasePoint = CanonicalVector<PhaseTag>;
using AdjointState = CanonicalVector<CostateTag>;

/// Infinity norm on the scalar values.
template <class Tag, class T>
double max_abs(const CanonicalVector<Tag, T>& v) {
  double m = 0.0;
  for (const auto& x : v.flat()) m = std::max(m, std::abs(value_of(x)));
  return m;
}

/// Strips the scalar type down to its values.
template <class Tag, class T>
CanonicalVector<Tag> values_of(const CanonicalVector<Tag, T>& v) {
  std::vector<double> flat(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) flat[i] = value_of(v[i]);
  return CanonicalVector<Tag>::from_flat(std::move(flat));
}

/// Lifts a double vector into another scalar type as constants.
template <class T, class Tag>
CanonicalVector<Tag, T> lift(const CanonicalVector<Tag>& v) {
  std::vector<T> flat(v.flat().begin(), v.flat().end());
  return CanonicalVector<Tag, T>::from_flat(std::move(flat));
}

struct StateGradient {
  std::vector<double> dq;  // dH/dq
  std::vector<double> dp;  // dH/dp
};

/// Dense row-major n x n matrix.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

  SquareMatrix transposed() const {
    SquareMatrix t(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double max_abs_diff(const SquareMatrix& o) const {
    require_dims(o.n_, n_, "matrix");
    double m = 0.0;
    for (std::size_t i = 0; i < a_.size(); ++i) m = std::max(m, std::abs(a_[i] - o.a_[i]));
    return m;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

/// Second derivatives of H split by partition. hqp(i, j) = d2H / dq_i dp_j.
struct HessianBlocks {
  SquareMatrix hqq;
  SquareMatrix hqp;
  SquareMatrix hpq;
  SquareMatrix hpp;
};

}  // namespace ihnn
