#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace ihnn::ad {

/// Wengert list for scalar reverse mode.
///
/// Node i owns the half-open entry range [offsets[i], offsets[i+1]); every entry
/// is a (parent, local partial) pair. Entries are stored structure-of-arrays so
/// the tape footprint is 12 bytes per edge.
class Tape {
 public:
  using Index = std::uint32_t;

  Tape() { offsets_.push_back(0); }

  Index push_leaf() { return close_node(); }

  Index push_unary(Index a, double da) {
    add_edge(a, da);
    return close_node();
  }

  Index push_binary(Index a, double da, Index b, double db) {
    add_edge(a, da);
    add_edge(b, db);
    return close_node();
  }

  void add_edge(Index parent, double partial) {
    parents_.push_back(parent);
    partials_.push_back(partial);
  }

  Index close_node() {
    if (offsets_.size() > std::numeric_limits<Index>::max()) {
      throw std::length_error("tape: node index overflow");
    }
    offsets_.push_back(parents_.size());
    return static_cast<Index>(offsets_.size() - 2);
  }

  std::size_t node_count() const { return offsets_.size() - 1; }
  std::size_t edge_count() const { return parents_.size(); }

  /// Bytes held by the recorded graph (capacity, not size).
  std::size_t footprint_bytes() const {
    return offsets_.capacity() * sizeof(std::size_t) + parents_.capacity() * sizeof(Index) +
           partials_.capacity() * sizeof(double);
  }

  /// Reverse sweep seeded with d(output)/d(output) = 1. Returns the adjoint of every node.
  std::vector<double> adjoints(Index output) const {
    std::vector<double> adj(node_count(), 0.0);
    adj.at(output) = 1.0;
    for (std::size_t node = output + 1; node-- > 0;) {
      const double a = adj[node];
      if (a == 0.0) continue;
      for (std::size_t e = offsets_[node]; e < offsets_[node + 1]; ++e) {
        adj[parents_[e]] += partials_[e] * a;
      }
    }
    return adj;
  }

  void clear() {
    offsets_.assign(1, 0);
    parents_.clear();
    partials_.clear();
  }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<Index> parents_;
  std::vector<double> partials_;
};

namespace detail {
inline Tape*& active_tape() {
  thread_local Tape* tape = nullptr;
  return tape;
}
}  // namespace detail

/// Makes `tape` the recording target of the calling thread for the scope's lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape) : previous_(detail::active_tape()) { detail::active_tape() = &tape; }
  ~TapeScope() { detail::active_tape() = previous_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Scalar recorded on the active tape. Constants carry no node and cost nothing.
class Var {
 public:
  static constexpr Tape::Index kConstant = std::numeric_limits<Tape::Index>::max();

  Var() = default;
  Var(double v) : value_(v) {}  // NOLINT(google-explicit-constructor)

  /// New independent variable on the active tape.
  static Var leaf(double v) { return Var(v, tape().push_leaf()); }

  double value() const { return value_; }
  Tape::Index index() const { return index_; }
  bool is_constant() const { return index_ == kConstant; }

  static Tape& tape() {
    Tape* t = detail::active_tape();
    if (t == nullptr) throw std::logic_error("ad::Var used without an active TapeScope");
    return *t;
  }

  static Var unary(double v, const Var& a, double da) {
    if (a.is_constant()) return Var(v);
    return Var(v, tape().push_unary(a.index_, da));
  }

  static Var binary(double v, const Var& a, double da, const Var& b, double db) {
    if (a.is_constant()) return unary(v, b, db);
    if (b.is_constant()) return unary(v, a, da);
    return Var(v, tape().push_binary(a.index_, da, b.index_, db));
  }

 private:
  Var(double v, Tape::Index i) : value_(v), index_(i) {}

  friend Var dot(std::span<const Var> a, std::span<const Var> b, const Var& bias);

  double value_ = 0.0;
  Tape::Index index_ = kConstant;
};

inline Var operator+(const Var& a, const Var& b) { return Var::binary(a.value() + b.value(), a, 1.0, b, 1.0); }
inline Var operator-(const Var& a, const Var& b) { return Var::binary(a.value() - b.value(), a, 1.0, b, -1.0); }
inline Var operator*(const Var& a, const Var& b) {
  return Var::binary(a.value() * b.value(), a, b.value(), b, a.value());
}
inline Var operator-(const Var& a) { return Var::unary(-a.value(), a, -1.0); }
inline Var operator+(const Var& a, double b) { return Var::unary(a.value() + b, a, 1.0); }
inline Var operator+(double a, const Var& b) { return Var::unary(a + b.value(), b, 1.0); }
inline Var operator-(const Var& a, double b) { return Var::unary(a.value() - b, a, 1.0); }
inline Var operator-(double a, const Var& b) { return Var::unary(a - b.value(), b, -1.0); }
inline Var operator*(const Var& a, double b) { return Var::unary(a.value() * b, a, b); }
inline Var operator*(double a, const Var& b) { return Var::unary(a * b.value(), b, a); }
inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }

inline Var tanh(const Var& a) {
  const double t = std::tanh(a.value());
  return Var::unary(t, a, 1.0 - t * t);
}

/// bias + sum_i a_i b_i as a single n-ary node.
inline Var dot(std::span<const Var> a, std::span<const Var> b, const Var& bias) {
  double v = bias.value();
  for (std::size_t i = 0; i < a.size(); ++i) v += a[i].value() * b[i].value();
  Tape* t = detail::active_tape();
  bool any = !bias.is_constant();
  for (std::size_t i = 0; i < a.size() && !any; ++i) any = !a[i].is_constant() || !b[i].is_constant();
  if (!any) return Var(v);
  if (t == nullptr) throw std::logic_error("ad::Var used without an active TapeScope");
  if (!bias.is_constant()) t->add_edge(bias.index_, 1.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_constant()) t->add_edge(a[i].index_, b[i].value());
    if (!b[i].is_constant()) t->add_edge(b[i].index_, a[i].value());
  }
  return Var(v, t->close_node());
}

inline double value_of(const Var& a) { return a.value(); }

}  // namespace ihnn::ad
