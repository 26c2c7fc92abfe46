// SPDX-License-Identifier: Apache-2.0
//
// Learning schemes for the L1-regularised objective:
//   adam_pw  Adam on smooth gradient + beta * sign(theta)
//   adam_f   Adam on smooth gradient + beta * theta / |theta|_F (per array)
//   pg       theta <- S_{beta t}(theta - t grad)
//   apg      same prox step taken at the extrapolated point
//            v = theta_{k-1} + (k-2)/(k+1) (theta_{k-1} - theta_{k-2})
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gnl/config.hpp"
#include "gnl/errors.hpp"
#include "gnl/tensor.hpp"

namespace gnl {

/// Soft-thresholding S_kappa, the proximal map of kappa |.|_1.
inline double soft_threshold(double v, double kappa) {
  if (v > kappa) return v - kappa;
  if (v < -kappa) return v + kappa;
  return 0.0;
}

inline Tensor soft_threshold(const Tensor& v, double kappa) {
  if (!(kappa >= 0.0)) throw ArgumentError("soft_threshold: threshold must be non-negative");
  Tensor out = v;
  for (auto& x : out.values()) x = soft_threshold(x, kappa);
  return out;
}

/// Piecewise derivative of |.|_1 with the value at zero taken as zero.
inline Tensor l1_subgradient(const Tensor& theta) {
  Tensor out = theta;
  for (auto& x : out.values()) x = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
  return out;
}

/// Gradient of |theta|_F, with the norm floored at `guard`.
inline Tensor fnorm_gradient(const Tensor& theta, double guard) {
  if (!(guard > 0.0)) throw ArgumentError("fnorm_gradient: guard must be positive");
  double sq = 0.0;
  for (double x : theta.values()) sq += x * x;
  const double denom = std::max(std::sqrt(sq), guard);
  Tensor out = theta;
  for (auto& x : out.values()) x /= denom;
  return out;
}

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kAdamPw;
  double step_size = 1e-3;  // t
  double beta = 0.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double fro_guard = 1e-12;

  ParamSet first_moment;
  ParamSet second_moment;
  std::size_t adam_steps = 0;

  ParamSet previous;  // theta^(k-2) for apg
  std::size_t k = 1;  // index of the iterate the next step produces

  OptimizerState() = default;
  OptimizerState(OptimizerKind kind_, double step, double beta_)
      : kind(kind_), step_size(step), beta(beta_) {}
};

namespace detail {

inline void check_same_shapes(std::span<const Tensor> a, std::span<const Tensor> b,
                              const char* what) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(what) + ": " + std::to_string(a.size()) + " parameter arrays vs " +
                     std::to_string(b.size()) + " gradient arrays");
  }
  for (std::size_t p = 0; p < a.size(); ++p) {
    if (!a[p].same_shape(b[p])) {
      throw ShapeError(std::string(what) + ": array " + std::to_string(p) + " has shape " +
                       shape_string(a[p].shape()) + " but gradient " + shape_string(b[p].shape()));
    }
  }
}

}  // namespace detail

/// One Adam step on the smooth gradient plus the regulariser gradient
/// (piecewise L1 derivative for adam_pw, F-norm gradient for adam_f).
inline void adam_reg_step(OptimizerState& state, std::span<Tensor> theta,
                          std::span<const Tensor> smooth_grads) {
  if (state.kind != OptimizerKind::kAdamPw && state.kind != OptimizerKind::kAdamF) {
    throw ArgumentError("adam_reg_step: optimizer kind is " + to_string(state.kind));
  }
  detail::check_same_shapes(theta, smooth_grads, "adam_reg_step");
  if (state.first_moment.empty()) {
    state.first_moment = zeros_like(ParamSet(theta.begin(), theta.end()));
    state.second_moment = state.first_moment;
  }
  ++state.adam_steps;
  const double step = static_cast<double>(state.adam_steps);
  const double correction1 = 1.0 - std::pow(state.adam_beta1, step);
  const double correction2 = 1.0 - std::pow(state.adam_beta2, step);

  for (std::size_t p = 0; p < theta.size(); ++p) {
    Tensor total = smooth_grads[p];
    if (state.beta != 0.0) {
      const Tensor reg = state.kind == OptimizerKind::kAdamPw
                             ? l1_subgradient(theta[p])
                             : fnorm_gradient(theta[p], state.fro_guard);
      for (std::size_t k = 0; k < total.size(); ++k) total[k] += state.beta * reg[k];
    }
    auto& m = state.first_moment[p];
    auto& v = state.second_moment[p];
    for (std::size_t k = 0; k < total.size(); ++k) {
      const double g = total[k];
      m[k] = state.adam_beta1 * m[k] + (1.0 - state.adam_beta1) * g;
      v[k] = state.adam_beta2 * v[k] + (1.0 - state.adam_beta2) * g * g;
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      theta[p][k] -= state.step_size * m_hat / (std::sqrt(v_hat) + state.adam_eps);
    }
  }
}

/// Proximal gradient step: theta <- S_{beta t}(theta - t grad).
inline void pg_step(OptimizerState& state, std::span<Tensor> theta,
                    std::span<const Tensor> smooth_grads) {
  if (!(state.step_size > 0.0)) throw ArgumentError("pg_step: step size must be positive");
  detail::check_same_shapes(theta, smooth_grads, "pg_step");
  const double t = state.step_size;
  const double kappa = state.beta * t;
  for (std::size_t p = 0; p < theta.size(); ++p) {
    for (std::size_t k = 0; k < theta[p].size(); ++k) {
      theta[p][k] = soft_threshold(theta[p][k] - t * smooth_grads[p][k], kappa);
    }
  }
  ++state.k;
}

using GradientAt = std::function<ParamSet(const ParamSet& point)>;

/// Accelerated proximal gradient step. `theta` holds theta^(k-1) on entry and
/// theta^(k) on exit; the state keeps theta^(k-2), initialised to theta^(0)
/// on the first call.
inline void apg_step(OptimizerState& state, std::span<Tensor> theta, const GradientAt& grad_at) {
  if (!(state.step_size > 0.0)) throw ArgumentError("apg_step: step size must be positive");
  if (state.k < 1) throw ArgumentError("apg_step: iteration counter must be at least 1");
  if (state.previous.empty()) state.previous.assign(theta.begin(), theta.end());
  detail::check_same_shapes(theta, state.previous, "apg_step");

  const double kk = static_cast<double>(state.k);
  const double momentum = (kk - 2.0) / (kk + 1.0);
  ParamSet point(theta.begin(), theta.end());
  for (std::size_t p = 0; p < point.size(); ++p) {
    for (std::size_t k = 0; k < point[p].size(); ++k) {
      point[p][k] = theta[p][k] + momentum * (theta[p][k] - state.previous[p][k]);
    }
  }
  const ParamSet grads = grad_at(point);
  detail::check_same_shapes(point, grads, "apg_step");

  state.previous.assign(theta.begin(), theta.end());
  const double t = state.step_size;
  const double kappa = state.beta * t;
  for (std::size_t p = 0; p < point.size(); ++p) {
    for (std::size_t k = 0; k < point[p].size(); ++k) {
      theta[p][k] = soft_threshold(point[p][k] - t * grads[p][k], kappa);
    }
  }
  ++state.k;
}

}  // namespace gnl
