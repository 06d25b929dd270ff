#pragma once

#include <span>
#include <type_traits>
#include <vector>

#include "ihnn/autodiff/scalar.hpp"
#include "ihnn/model/param_vector.hpp"

namespace ihnn::mlp {

// One forward and reverse sweep of the tanh network H(theta; x), generic in the
// scalar type of the input (S) and of the parameters (P):
//   S = P = double    plain value and gradient
//   S = Dual, P = double  forward-over-reverse (Hessian-vector products)
//   S = P = Var       every operation recorded on the active tape

namespace detail {

template <class S, class P>
S affine(std::span<const P> w, std::span<const S> x, const P& b) {
  if constexpr (std::is_same_v<S, ad::Var> && std::is_same_v<P, ad::Var>) {
    return ad::dot(w, x, b);
  } else {
    S acc(b);
    for (std::size_t j = 0; j < x.size(); ++j) acc += w[j] * x[j];
    return acc;
  }
}

/// sum_i W(i, col) g_i over the rows of a row-major [out x in] weight block.
template <class S, class P>
S column_dot(std::span<const P> weights, std::size_t in, std::size_t col, std::span<const S> g) {
  if constexpr (std::is_same_v<S, ad::Var> && std::is_same_v<P, ad::Var>) {
    std::vector<ad::Var> column(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) column[i] = weights[i * in + col];
    return ad::dot(std::span<const ad::Var>(column), g, ad::Var(0.0));
  } else {
    S acc(0.0);
    for (std::size_t i = 0; i < g.size(); ++i) acc += weights[i * in + col] * g[i];
    return acc;
  }
}

}  // namespace detail

/// Evaluates H and its reverse-mode gradient.
///
/// grad_x receives dH/dx (size 2d). grad_params, when non-empty, receives dH/dtheta
/// in the flat parameter layout.
template <class S, class P>
S value_and_gradient(const Architecture& arch, std::span<const P> params, std::span<const S> x,
                     std::span<S> grad_x, std::span<S> grad_params = {}) {
  using detail::affine;
  using std::tanh;
  const auto& layers = arch.layers();
  const std::size_t depth = layers.size();

  // acts[l] is the input to layer l; acts[0] = x.
  std::vector<std::vector<S>> acts(depth);
  acts[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l + 1 < depth; ++l) {
    const auto& L = layers[l];
    auto& next = acts[l + 1];
    next.resize(L.out);
    for (std::size_t i = 0; i < L.out; ++i) {
      next[i] = tanh(affine<S, P>(params.subspan(L.weight_offset + i * L.in, L.in), acts[l],
                                      params[L.bias_offset + i]));
    }
  }
  const auto& last = layers.back();
  const S value = affine<S, P>(params.subspan(last.weight_offset, last.in), acts.back(), params[last.bias_offset]);

  // Reverse sweep. g holds dH/d(input of layer l).
  const bool want_params = !grad_params.empty();
  std::vector<S> g(last.in);
  for (std::size_t j = 0; j < last.in; ++j) g[j] = S(params[last.weight_offset + j]);
  if (want_params) {
    for (std::size_t j = 0; j < last.in; ++j) grad_params[last.weight_offset + j] = acts.back()[j];
    grad_params[last.bias_offset] = S(1.0);
  }
  for (std::size_t l = depth - 1; l-- > 0;) {
    const auto& L = layers[l];
    const auto& a = acts[l + 1];
    std::vector<S> gz(L.out);
    for (std::size_t i = 0; i < L.out; ++i) gz[i] = g[i] * (1.0 - a[i] * a[i]);
    if (want_params) {
      for (std::size_t i = 0; i < L.out; ++i) {
        for (std::size_t j = 0; j < L.in; ++j) grad_params[L.weight_offset + i * L.in + j] = gz[i] * acts[l][j];
        grad_params[L.bias_offset + i] = gz[i];
      }
    }
    std::vector<S> prev(L.in);
    const auto weights = params.subspan(L.weight_offset, L.in * L.out);
    for (std::size_t j = 0; j < L.in; ++j) prev[j] = detail::column_dot<S, P>(weights, L.in, j, gz);
    g = std::move(prev);
  }
  for (std::size_t j = 0; j < g.size(); ++j) grad_x[j] = g[j];
  return value;
}

/// Forward pass only.
template <class S, class P>
S value(const Architecture& arch, std::span<const P> params, std::span<const S> x) {
  using detail::affine;
  using std::tanh;
  std::vector<S> act(x.begin(), x.end());
  const auto& layers = arch.layers();
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const auto& L = layers[l];
    std::vector<S> next(L.out);
    for (std::size_t i = 0; i < L.out; ++i) {
      next[i] = tanh(affine<S, P>(params.subspan(L.weight_offset + i * L.in, L.in), act,
                                      params[L.bias_offset + i]));
    }
    act = std::move(next);
  }
  const auto& last = layers.back();
  return affine<S, P>(params.subspan(last.weight_offset, last.in), act, params[last.bias_offset]);
}

}  // namespace ihnn::mlp
