// SPDX-License-Identifier: Apache-2.0
//
// Training loop: epochs over chronologically ordered training windows, one
// optimizer step per window on the one-step-ahead MSE, model selection by
// validation loss.
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "gnl/config.hpp"
#include "gnl/data.hpp"
#include "gnl/errors.hpp"
#include "gnl/model.hpp"
#include "gnl/optim.hpp"
#include "gnl/tape.hpp"

namespace gnl {

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;       // mean one-step MSE over training windows
  double train_objective = 0.0;  // train_loss + beta * regulariser of the epoch-end parameters
  double validation_loss = 0.0;  // NaN when there are no validation windows
};

/// Called after every training forward pass with (epoch, window index, pass).
using ForwardObserver = std::function<void(std::size_t, std::size_t, const ForwardPass&)>;

struct TrainOptions {
  ForwardObserver on_forward;
};

struct FitResult {
  GnlModel model;  // best-validation parameters
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 0 = initial parameters
};

namespace detail {

struct WindowGradient {
  double loss = 0.0;
  ParamSet grads;
};

inline WindowGradient window_gradient(const GnlModel& model, const WindowSample& sample,
                                      std::size_t epoch, std::size_t index,
                                      const ForwardObserver& observer) {
  GradientTape tape;
  const auto bound = bind_model(tape, model, true);
  const auto pass = forward_window(model, bound, sample.inputs, ForwardOptions{bool(observer)});
  if (observer) observer(epoch, index, pass);
  const Var loss = mse_loss(pass.predictions, sample.targets.front());
  WindowGradient out;
  out.loss = loss.value().item();
  if (!std::isfinite(out.loss)) {
    throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch) + ", window " +
                        std::to_string(index) + " (start " + std::to_string(sample.start) + ")");
  }
  tape.backward(loss);
  for (const auto& p : bound.parameters()) out.grads.push_back(p.grad());
  return out;
}

}  // namespace detail

/// Mean one-step-ahead MSE over `samples` in normalised units.
inline double one_step_loss(const GnlModel& model, const std::vector<WindowSample>& samples) {
  if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (const auto& s : samples) {
    total += mse_loss(forward_window(model, s.inputs, ForwardOptions{false}).prediction,
                      s.targets.front());
  }
  return total / static_cast<double>(samples.size());
}

inline FitResult fit(GnlModel model, const std::vector<WindowSample>& train,
                     const std::vector<WindowSample>& validation, const TrainOptions& options = {}) {
  const auto& cfg = model.config;
  OptimizerState state(cfg.optimizer, cfg.learning_rate, cfg.beta);
  const Regularizer reg = regularizer_for(cfg.optimizer);

  FitResult result{model, {}, 0};
  double best = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.optimizer == OptimizerKind::kApg && cfg.apg_epoch_restart) {
      state.k = 1;
      state.previous.clear();
    }
    double loss_sum = 0.0;
    for (std::size_t w = 0; w < train.size(); ++w) {
      ParamSet theta = model.parameters();
      if (cfg.optimizer == OptimizerKind::kApg) {
        GnlModel probe = model;
        apg_step(state, theta, [&](const ParamSet& point) {
          probe.set_parameters(point);
          auto g = detail::window_gradient(probe, train[w], epoch, w, options.on_forward);
          loss_sum += g.loss;
          return std::move(g.grads);
        });
      } else {
        auto g = detail::window_gradient(model, train[w], epoch, w, options.on_forward);
        loss_sum += g.loss;
        if (cfg.optimizer == OptimizerKind::kPg) {
          pg_step(state, theta, g.grads);
        } else {
          adam_reg_step(state, theta, g.grads);
        }
      }
      model.set_parameters(theta);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train.empty() ? std::numeric_limits<double>::quiet_NaN()
                                   : loss_sum / static_cast<double>(train.size());
    rec.train_objective = rec.train_loss + cfg.beta * regularizer_value(model.parameters(), reg);
    rec.validation_loss = one_step_loss(model, validation);
    result.history.push_back(rec);

    const double score = validation.empty() ? rec.train_loss : rec.validation_loss;
    if (!std::isfinite(score)) {
      throw TrainingError("non-finite " + std::string(validation.empty() ? "training" : "validation") +
                          " loss after epoch " + std::to_string(epoch));
    }
    if (score < best) {
      best = score;
      result.best_epoch = epoch;
      result.model = model;
    }
  }
  return result;
}

/// Everything train() produces besides the fitted parameters.
struct TrainingRun {
  GnlModel model;
  NormalizationStats stats;
  Split split;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
};

/// Prepared windows for one dataset under one configuration.
struct PreparedData {
  Dataset normalized;
  NormalizationStats stats;
  Split split;
  std::vector<WindowSample> train;
  std::vector<WindowSample> validation;
  std::vector<WindowSample> test;
};

/// Chronological split over window starts, z-score fitted on the rows the
/// training windows cover, windows for every split.
inline PreparedData prepare_data(const ModelConfig& config, const Dataset& dataset) {
  config.validate();
  if (dataset.features != config.input_dim) {
    throw ConfigError("config input_dim = " + std::to_string(config.input_dim) + " but dataset has " +
                      std::to_string(dataset.features) + " features per node");
  }
  const std::size_t count = window_count(dataset.length(), config.window, config.horizon);
  PreparedData out;
  out.split = make_split(count, config.horizon, config.train_fraction, config.validation_fraction);
  if (out.split.train.empty()) {
    throw ArgumentError("dataset too short: no training windows for " + std::to_string(count) +
                        " samples");
  }
  auto z = zscore(dataset, rows_covered(out.split.train, config.window, config.horizon));
  out.normalized = std::move(z.normalized);
  out.stats = std::move(z.stats);
  out.train = make_windows(out.normalized, config.window, config.horizon, out.split.train);
  out.validation = make_windows(out.normalized, config.window, config.horizon, out.split.validation);
  out.test = make_windows(out.normalized, config.window, config.horizon, out.split.test);
  return out;
}

inline TrainingRun train(const ModelConfig& config, const Dataset& dataset,
                         const TrainOptions& options = {}) {
  auto data = prepare_data(config, dataset);
  auto fitted = fit(make_model(config, dataset.nodes(), dataset.prior), data.train, data.validation,
                    options);
  return {std::move(fitted.model), std::move(data.stats), data.split, std::move(fitted.history),
          fitted.best_epoch};
}

inline void write_history(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,train_loss,train_objective,validation_loss\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << detail::format_double(r.train_loss) << ','
        << detail::format_double(r.train_objective) << ','
        << detail::format_double(r.validation_loss) << '\n';
  }
}

}  // namespace gnl
