// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gnl/config.hpp"
#include "gnl/data.hpp"
#include "gnl/errors.hpp"
#include "gnl/model.hpp"

namespace gnl {

struct Metrics {
  double mae = 0.0;
  double rmse = 0.0;
  std::optional<double> r2;  // empty when SS_tot = 0
  std::size_t count = 0;     // pooled scalar pairs
};

/// MAE, RMSE and R^2 pooled over every (prediction, truth) pair; SS_tot is
/// taken about the mean of `truth`.
inline Metrics compute_metrics(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size()) {
    throw ShapeError("compute_metrics: " + std::to_string(predicted.size()) + " predictions vs " +
                     std::to_string(truth.size()) + " targets");
  }
  if (truth.empty()) throw ArgumentError("compute_metrics: no samples");
  const double n = static_cast<double>(truth.size());
  double mean = 0.0;
  for (double y : truth) mean += y;
  mean /= n;
  double abs_sum = 0.0, ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const double e = predicted[k] - truth[k];
    abs_sum += std::abs(e);
    ss_res += e * e;
    ss_tot += (truth[k] - mean) * (truth[k] - mean);
  }
  Metrics m;
  m.count = truth.size();
  m.mae = abs_sum / n;
  m.rmse = std::sqrt(ss_res / n);
  if (ss_tot > 0.0) m.r2 = 1.0 - ss_res / ss_tot;
  return m;
}

/// Predicted and true snapshots for the last horizon step of each sample.
struct ForecastPairs {
  std::vector<double> predicted;
  std::vector<double> truth;
};

/// Recursive rollout over `horizon` steps per sample, optionally mapped back
/// to original units through `stats`.
inline ForecastPairs collect_forecasts(const GnlModel& model, std::span<const WindowSample> samples,
                                       std::size_t horizon, const NormalizationStats* stats) {
  if (samples.empty()) throw ArgumentError("evaluate: no samples");
  ForecastPairs out;
  for (const auto& s : samples) {
    if (s.targets.size() < horizon) {
      throw ShapeError("evaluate: sample at start " + std::to_string(s.start) + " has " +
                       std::to_string(s.targets.size()) + " targets, horizon is " +
                       std::to_string(horizon));
    }
    const auto steps = predict_horizon(model, s.inputs, horizon);
    Tensor pred = steps.back();
    Tensor truth = s.targets[horizon - 1];
    if (stats) {
      pred = stats->inverse(pred);
      truth = stats->inverse(truth);
    }
    out.predicted.insert(out.predicted.end(), pred.values().begin(), pred.values().end());
    out.truth.insert(out.truth.end(), truth.values().begin(), truth.values().end());
  }
  return out;
}

inline Metrics evaluate(const GnlModel& model, std::span<const WindowSample> samples,
                        const NormalizationStats& stats, std::size_t horizon) {
  const auto pairs = collect_forecasts(model, samples, horizon, &stats);
  return compute_metrics(pairs.predicted, pairs.truth);
}

inline Metrics evaluate(const GnlModel& model, std::span<const WindowSample> samples,
                        const NormalizationStats& stats) {
  return evaluate(model, samples, stats, model.config.horizon);
}

/// `key: value` lines; an undefined R^2 is written as `undefined`.
inline void write_metrics(std::ostream& out, const Metrics& m) {
  out << "mae: " << detail::format_double(m.mae) << '\n';
  out << "rmse: " << detail::format_double(m.rmse) << '\n';
  out << "r2: " << (m.r2 ? detail::format_double(*m.r2) : std::string("undefined")) << '\n';
  out << "count: " << m.count << '\n';
}

}  // namespace gnl
