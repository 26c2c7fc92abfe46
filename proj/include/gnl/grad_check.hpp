// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gnl/errors.hpp"
#include "gnl/tape.hpp"

namespace gnl {

/// Builds a scalar objective on `tape` from parameter handles bound in the
/// same order as the parameter set passed to grad_check.
using TapeObjective = std::function<Var(GradientTape& tape, std::span<const Var> params)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

namespace detail {

inline double evaluate_objective(const TapeObjective& objective, const ParamSet& theta) {
  GradientTape tape;
  std::vector<Var> vars;
  vars.reserve(theta.size());
  for (const auto& p : theta) vars.push_back(tape.variable(p));
  const double value = objective(tape, vars).value().item();
  if (!std::isfinite(value)) throw EvaluationError("grad_check: objective is not finite");
  return value;
}

}  // namespace detail

/// Compares backward() against central differences with step `eps`.
/// The error per entry is |analytic - numeric| / max(1, |analytic|).
inline GradCheckReport grad_check(const TapeObjective& objective, const ParamSet& theta,
                                  double eps = 1e-6) {
  if (!(eps > 0.0)) throw ArgumentError("grad_check: step must be positive");

  std::vector<Tensor> analytic;
  {
    GradientTape tape;
    std::vector<Var> vars;
    for (const auto& p : theta) vars.push_back(tape.variable(p));
    Var loss = objective(tape, vars);
    if (!std::isfinite(loss.value().item())) {
      throw EvaluationError("grad_check: objective is not finite");
    }
    tape.backward(loss);
    for (const auto& v : vars) analytic.push_back(v.grad());
  }

  GradCheckReport report;
  ParamSet probe = theta;
  for (std::size_t p = 0; p < theta.size(); ++p) {
    for (std::size_t k = 0; k < theta[p].size(); ++k) {
      const double base = theta[p][k];
      probe[p][k] = base + eps;
      const double up = detail::evaluate_objective(objective, probe);
      probe[p][k] = base - eps;
      const double down = detail::evaluate_objective(objective, probe);
      probe[p][k] = base;

      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[p][k];
      const double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
      if (err > report.max_relative_error || (p == 0 && k == 0)) {
        report = {err, p, k, a, numeric};
      }
    }
  }
  return report;
}

}  // namespace gnl
