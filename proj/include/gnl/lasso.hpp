// SPDX-License-Identifier: Apache-2.0
//
// Convex lasso instances  min_theta 1/2 |A theta - b|^2 + beta |theta|_1
// used to check the proximal-gradient convergence bounds
//   pg : F(theta_k) - F* <= |theta_0 - theta*|^2 / (2 t k)
//   apg: F(theta_k) - F* <= 2 |theta_0 - theta*|^2 / (t (k + 1)^2)
// for t < 1/L, L = lambda_max(A^T A). The optimum comes from cyclic
// coordinate descent, which shares no code with the methods under test.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "gnl/errors.hpp"
#include "gnl/optim.hpp"
#include "gnl/tensor.hpp"

namespace gnl {

struct ConvexLassoInstance {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  double beta = 0.0;
  double lipschitz = 0.0;  // largest eigenvalue of A^T A
  Eigen::VectorXd optimum;
  double optimal_value = 0.0;

  std::size_t dim() const { return static_cast<std::size_t>(a.cols()); }

  double objective(const Eigen::VectorXd& theta) const {
    return 0.5 * (a * theta - b).squaredNorm() + beta * theta.lpNorm<1>();
  }

  Eigen::VectorXd smooth_gradient(const Eigen::VectorXd& theta) const {
    return a.transpose() * (a * theta - b);
  }
};

/// Largest violation of the lasso optimality conditions at `theta`.
inline double lasso_stationarity(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double beta,
                                 const Eigen::VectorXd& theta) {
  const Eigen::VectorXd grad = a.transpose() * (a * theta - b);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double r = theta[j] != 0.0 ? std::abs(grad[j] + beta * (theta[j] > 0 ? 1.0 : -1.0))
                                     : std::max(0.0, std::abs(grad[j]) - beta);
    worst = std::max(worst, r);
  }
  return worst;
}

struct CoordinateDescentResult {
  Eigen::VectorXd theta;
  std::size_t sweeps = 0;
  double stationarity = 0.0;
};

/// Cyclic coordinate descent with exact per-coordinate minimisation.
inline CoordinateDescentResult coordinate_descent_lasso(const Eigen::MatrixXd& a,
                                                        const Eigen::VectorXd& b, double beta,
                                                        double tol = 1e-13,
                                                        std::size_t max_sweeps = 1000000) {
  const Eigen::Index n = a.cols();
  const Eigen::MatrixXd gram = a.transpose() * a;
  const Eigen::VectorXd atb = a.transpose() * b;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
  // grad = gram * theta - atb, maintained incrementally
  Eigen::VectorXd grad = -atb;

  CoordinateDescentResult out;
  for (out.sweeps = 1; out.sweeps <= max_sweeps; ++out.sweeps) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double hjj = gram(j, j);
      const double rho = hjj * theta[j] - grad[j];
      double updated = 0.0;
      if (rho > beta) updated = (rho - beta) / hjj;
      else if (rho < -beta) updated = (rho + beta) / hjj;
      const double delta = updated - theta[j];
      if (delta != 0.0) {
        grad += delta * gram.col(j);
        theta[j] = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (max_change <= tol) break;
    // refresh to stop drift in the incremental gradient
    if (out.sweeps % 64 == 0) grad = gram * theta - atb;
  }
  out.theta = theta;
  out.stationarity = lasso_stationarity(a, b, beta, theta);

  // Refine on the support: with the signs fixed the optimum solves
  // gram_SS theta_S = atb_S - beta sign(theta_S). Kept only if the signs
  // survive and the optimality residual drops.
  for (int pass = 0; pass < 3; ++pass) {
    std::vector<Eigen::Index> support;
    for (Eigen::Index j = 0; j < n; ++j)
      if (out.theta[j] != 0.0) support.push_back(j);
    if (support.empty()) break;
    const auto m = static_cast<Eigen::Index>(support.size());
    Eigen::MatrixXd sub(m, m);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index c = 0; c < m; ++c) sub(r, c) = gram(support[r], support[c]);
      rhs[r] = atb[support[r]] - beta * (out.theta[support[r]] > 0 ? 1.0 : -1.0);
    }
    const Eigen::VectorXd solved = sub.ldlt().solve(rhs);
    Eigen::VectorXd candidate = out.theta;
    bool signs_kept = true;
    for (Eigen::Index r = 0; r < m; ++r) {
      signs_kept = signs_kept && (solved[r] > 0) == (out.theta[support[r]] > 0) && solved[r] != 0.0;
      candidate[support[r]] = solved[r];
    }
    if (!signs_kept) break;
    const double refined = lasso_stationarity(a, b, beta, candidate);
    if (!(refined < out.stationarity)) break;
    out.theta = candidate;
    out.stationarity = refined;
  }
  return out;
}

/// Fills in L, the optimum and the optimal value.
inline ConvexLassoInstance make_lasso_instance(Eigen::MatrixXd a, Eigen::VectorXd b, double beta) {
  if (a.rows() != b.size()) {
    throw ShapeError("lasso instance: A has " + std::to_string(a.rows()) + " rows, b has " +
                     std::to_string(b.size()) + " entries");
  }
  if (!(beta >= 0.0)) throw ArgumentError("lasso instance: beta must be non-negative");
  ConvexLassoInstance inst;
  inst.a = std::move(a);
  inst.b = std::move(b);
  inst.beta = beta;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(inst.a.transpose() * inst.a,
                                                     Eigen::EigenvaluesOnly);
  inst.lipschitz = eig.eigenvalues().maxCoeff();
  if (!(inst.lipschitz > 0.0)) throw ArgumentError("lasso instance: A must be nonzero");
  const auto cd = coordinate_descent_lasso(inst.a, inst.b, beta);
  inst.optimum = cd.theta;
  inst.optimal_value = inst.objective(cd.theta);
  return inst;
}

/// Random square instance with singular values log-spaced on [1, 10] between
/// random orthogonal factors, so cond(A^T A) = 100.
inline ConvexLassoInstance random_lasso_instance(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ArgumentError("random_lasso_instance: dimension must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal(rng);
    return m;
  };
  const auto dim = static_cast<Eigen::Index>(n);
  const Eigen::MatrixXd u = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian(dim, dim)).householderQ();
  const Eigen::MatrixXd v = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian(dim, dim)).householderQ();
  Eigen::VectorXd s(dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    s[k] = n == 1 ? 1.0 : std::pow(10.0, static_cast<double>(k) / static_cast<double>(dim - 1));
  }
  Eigen::MatrixXd a = u * s.asDiagonal() * v.transpose();
  Eigen::VectorXd b = gaussian(dim, 1).col(0) * 3.0;
  const double beta = 0.2 * (a.transpose() * b).lpNorm<Eigen::Infinity>();
  return make_lasso_instance(std::move(a), std::move(b), beta);
}

enum class ProxMethod { kPg, kApg };

inline std::string to_string(ProxMethod m) { return m == ProxMethod::kPg ? "pg" : "apg"; }

inline ProxMethod parse_prox_method(const std::string& s) {
  if (s == "pg") return ProxMethod::kPg;
  if (s == "apg") return ProxMethod::kApg;
  throw ArgumentError("unknown method '" + s + "' (expected pg or apg)");
}

struct BoundRow {
  std::size_t k = 0;
  double lhs = 0.0;  // F(theta_k) - F*
  double rhs = 0.0;  // theorem bound
  double margin = 0.0;  // rhs - lhs; negative means a violation
  double objective = 0.0;
};

struct BoundReport {
  ProxMethod method = ProxMethod::kPg;
  double step = 0.0;
  std::vector<BoundRow> rows;
  std::size_t violations = 0;
  double worst_margin = 0.0;

  /// Delimited text: header then one `k,lhs,rhs,margin` row per iteration.
  void write(std::ostream& out) const {
    out << "k,lhs,rhs,margin\n";
    char buf[128];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", r.k, r.lhs, r.rhs, r.margin);
      out << buf;
    }
  }
};

namespace detail {

inline Tensor to_tensor(const Eigen::VectorXd& v) {
  return Tensor::vector(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Eigen::VectorXd to_eigen(const Tensor& t) {
  return Eigen::Map<const Eigen::VectorXd>(t.values().data(), static_cast<Eigen::Index>(t.size()));
}

}  // namespace detail

/// Runs pg or apg from `start` (zero by default) and checks the matching
/// convergence bound at every k = 1..k_max against the oracle optimum.
inline BoundReport verify_theorem_bounds(const ConvexLassoInstance& inst, ProxMethod method,
                                         double step, std::size_t k_max,
                                         const Eigen::VectorXd* start = nullptr) {
  if (!(step > 0.0) || !(step < 1.0 / inst.lipschitz)) {
    throw PreconditionError("step size t = " + std::to_string(step) +
                            " violates 0 < t < 1/L = " + std::to_string(1.0 / inst.lipschitz));
  }
  const Eigen::VectorXd theta0 = start ? *start : Eigen::VectorXd::Zero(inst.a.cols());
  const double dist2 = (theta0 - inst.optimum).squaredNorm();

  OptimizerState state(method == ProxMethod::kPg ? OptimizerKind::kPg : OptimizerKind::kApg,
                       step, inst.beta);
  ParamSet theta{detail::to_tensor(theta0)};
  const GradientAt grad_at = [&](const ParamSet& point) {
    return ParamSet{detail::to_tensor(inst.smooth_gradient(detail::to_eigen(point[0])))};
  };

  BoundReport report;
  report.method = method;
  report.step = step;
  report.rows.reserve(k_max);
  for (std::size_t k = 1; k <= k_max; ++k) {
    if (method == ProxMethod::kPg) {
      const ParamSet g = grad_at(theta);
      pg_step(state, theta, g);
    } else {
      apg_step(state, theta, grad_at);
    }
    BoundRow row;
    row.k = k;
    row.objective = inst.objective(detail::to_eigen(theta[0]));
    row.lhs = row.objective - inst.optimal_value;
    const double kd = static_cast<double>(k);
    row.rhs = method == ProxMethod::kPg ? dist2 / (2.0 * step * kd)
                                        : 2.0 * dist2 / (step * (kd + 1.0) * (kd + 1.0));
    row.margin = row.rhs - row.lhs;
    if (row.margin < 0.0) ++report.violations;
    if (k == 1 || row.margin < report.worst_margin) report.worst_margin = row.margin;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace gnl
