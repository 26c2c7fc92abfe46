// SPDX-License-Identifier: Apache-2.0
//
// Sliding-window GNL network: per timestamp, attention over the current
// hidden states, aggregation into z, and one GDU step per node; a linear head
// maps the final hidden states to predicted node features.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gnl/attention.hpp"
#include "gnl/config.hpp"
#include "gnl/errors.hpp"
#include "gnl/gdu.hpp"
#include "gnl/tape.hpp"
#include "gnl/tensor.hpp"

namespace gnl {

/// Trainable parameters in canonical order:
/// W_f, W_e, W_u, W_g, W_r, W_a, w_a, fc weight, fc bias.
inline constexpr std::array<const char*, 9> kParameterNames = {
    "W_f", "W_e", "W_u", "W_g", "W_r", "W_a", "w_a", "fc_weight", "fc_bias"};

struct GnlModel {
  ModelConfig config;
  GduParameters gdu;
  AttentionParameters attention;
  Tensor fc_weight;       // d_x x d_h
  Tensor fc_bias;         // d_x
  Tensor initial_hidden;  // N x d_h, fixed after construction
  EdgeSet edges;

  GduDims dims() const { return config.dims(); }
  std::size_t nodes() const { return initial_hidden.rank() == 2 ? initial_hidden.shape()[0] : 0; }

  ParamSet parameters() const {
    return {gdu.forget,          gdu.evolve,       gdu.update, gdu.select_g, gdu.select_r,
            attention.projection, attention.score, fc_weight,  fc_bias};
  }

  void set_parameters(const ParamSet& p) {
    if (p.size() != kParameterNames.size()) {
      throw ShapeError("expected " + std::to_string(kParameterNames.size()) +
                       " parameter arrays, got " + std::to_string(p.size()));
    }
    const ParamSet current = parameters();
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (!p[k].same_shape(current[k])) {
        throw ShapeError(std::string(kParameterNames[k]) + ": expected " +
                         shape_string(current[k].shape()) + ", got " + shape_string(p[k].shape()));
      }
    }
    gdu = {p[0], p[1], p[2], p[3], p[4]};
    attention = {p[5], p[6]};
    fc_weight = p[7];
    fc_bias = p[8];
  }

  void validate() const {
    config.validate();
    const auto d = dims();
    gdu.validate(d);
    attention.validate(d);
    if (fc_weight.shape() != Shape{d.input, d.hidden}) {
      throw ShapeError("fc_weight: expected " + shape_string({d.input, d.hidden}) + ", got " +
                       shape_string(fc_weight.shape()));
    }
    if (fc_bias.shape() != Shape{d.input}) {
      throw ShapeError("fc_bias: expected " + shape_string({d.input}) + ", got " +
                       shape_string(fc_bias.shape()));
    }
    if (initial_hidden.rank() != 2 || initial_hidden.shape()[1] != d.hidden) {
      throw ShapeError("initial hidden states: expected N x " + std::to_string(d.hidden) +
                       ", got " + shape_string(initial_hidden.shape()));
    }
    if (edges.nodes() != nodes()) {
      throw ShapeError("edge set covers " + std::to_string(edges.nodes()) + " nodes, model has " +
                       std::to_string(nodes()));
    }
  }
};

/// Builds a model with Glorot-uniform weights, a zero head bias and standard
/// normal initial hidden states, all derived from config.seed. Without a
/// prior edge set the graph is fully connected without self-loops.
inline GnlModel make_model(const ModelConfig& config, std::size_t nodes,
                           std::optional<EdgeSet> prior = std::nullopt) {
  config.validate();
  if (nodes == 0) throw ConfigError("model needs at least one node");
  if (prior && prior->nodes() != nodes) {
    throw ConfigError("prior edge set covers " + std::to_string(prior->nodes()) +
                      " nodes, expected " + std::to_string(nodes));
  }
  const auto d = config.dims();
  std::mt19937_64 seeder(config.seed);
  const std::uint64_t gdu_seed = seeder();
  const std::uint64_t att_seed = seeder();
  const std::uint64_t fc_seed = seeder();
  const std::uint64_t h0_seed = seeder();

  GnlModel m;
  m.config = config;
  m.gdu = init_gdu_params(d, gdu_seed);
  m.attention = init_attention_params(d, att_seed);
  std::mt19937_64 fc_rng(fc_seed);
  m.fc_weight = glorot_uniform(d.input, d.hidden, fc_rng);
  m.fc_bias = Tensor::zeros({d.input});
  std::mt19937_64 h0_rng(h0_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  m.initial_hidden = Tensor::zeros({nodes, d.hidden});
  for (auto& v : m.initial_hidden.values()) v = normal(h0_rng);
  m.edges = prior ? *prior : EdgeSet::fully_connected(nodes);
  return m;
}

/// Model parameters recorded on a tape.
struct BoundModel {
  GduWeights gdu;
  AttentionWeights attention;
  Var fc_weight;
  Var fc_bias;

  std::vector<Var> parameters() const {
    return {gdu.forget,          gdu.evolve,       gdu.update, gdu.select_g, gdu.select_r,
            attention.projection, attention.score, fc_weight,  fc_bias};
  }
};

/// Binds the parameters as tape variables (trainable) or constants.
inline BoundModel bind_model(GradientTape& tape, const GnlModel& m, bool trainable = true) {
  auto leaf = [&](const Tensor& t) { return trainable ? tape.variable(t) : tape.constant(t); };
  return {{leaf(m.gdu.forget), leaf(m.gdu.evolve), leaf(m.gdu.update), leaf(m.gdu.select_g),
           leaf(m.gdu.select_r)},
          {leaf(m.attention.projection), leaf(m.attention.score)},
          leaf(m.fc_weight),
          leaf(m.fc_bias)};
}

/// Binds externally supplied parameter handles (canonical order).
inline BoundModel bind_model(std::span<const Var> p) {
  if (p.size() != kParameterNames.size()) {
    throw ShapeError("expected " + std::to_string(kParameterNames.size()) +
                     " parameter handles, got " + std::to_string(p.size()));
  }
  return {{p[0], p[1], p[2], p[3], p[4]}, {p[5], p[6]}, p[7], p[8]};
}

struct ForwardPass {
  std::vector<Var> hidden;       // h^(tau+1) per node
  std::vector<Var> predictions;  // x_hat per node, length d_x
  /// One matrix per input timestamp plus the one inferred from the final
  /// hidden states.
  std::vector<InfluenceMatrix> alpha_history;
};

struct ForwardOptions {
  /// Also compute the influence matrix from the post-update hidden states.
  bool final_attention = true;
};

/// Row `node` of an N x d_x snapshot as a vector.
inline Tensor node_row(const Tensor& snapshot, std::size_t node) {
  const std::size_t d = snapshot.cols();
  const auto begin = snapshot.values().begin() + static_cast<std::ptrdiff_t>(node * d);
  return Tensor::vector(std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(d)));
}

inline ForwardPass forward_window(const GnlModel& model, const BoundModel& bound,
                                  std::span<const Tensor> window, ForwardOptions options = {}) {
  const auto d = model.dims();
  const std::size_t n = model.nodes();
  if (window.size() != model.config.window) {
    throw ShapeError("window has " + std::to_string(window.size()) + " timestamps, model expects " +
                     std::to_string(model.config.window));
  }
  for (std::size_t t = 0; t < window.size(); ++t) {
    if (window[t].shape() != Shape{n, d.input}) {
      throw ShapeError("timestamp " + std::to_string(t) + ": expected snapshot " +
                       shape_string({n, d.input}) + ", got " + shape_string(window[t].shape()));
    }
  }
  auto& tape = bound.fc_weight.tape();

  ForwardPass pass;
  pass.hidden.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pass.hidden.push_back(tape.constant(node_row(model.initial_hidden, i)));

  for (const auto& snapshot : window) {
    const auto scores = influence_scores(pass.hidden, model.edges, bound.attention,
                                         model.config.negative_slope);
    const auto alpha = influence_coefficients(scores, model.edges, model.config.normalization);
    pass.alpha_history.push_back(alpha.matrix);
    const auto z = aggregate(pass.hidden, alpha, model.edges, bound.attention,
                             model.config.aggregator);
    std::vector<Var> next;
    next.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      next.push_back(gdu_step(tape.constant(node_row(snapshot, i)), pass.hidden[i], z[i], bound.gdu));
    }
    pass.hidden = std::move(next);
  }

  if (options.final_attention) {
    const auto scores = influence_scores(pass.hidden, model.edges, bound.attention,
                                         model.config.negative_slope);
    pass.alpha_history.push_back(
        influence_coefficients(scores, model.edges, model.config.normalization).matrix);
  }

  pass.predictions.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    pass.predictions.push_back(add(matvec(bound.fc_weight, pass.hidden[i]), bound.fc_bias));
  }
  return pass;
}

/// Plain-value result of a forward pass.
struct Forecast {
  Tensor prediction;  // N x d_x
  Tensor hidden;      // N x d_h
  std::vector<InfluenceMatrix> alpha_history;
};

inline Tensor stack_rows(std::span<const Var> rows) {
  if (rows.empty()) return {};
  const std::size_t width = rows.front().size();
  std::vector<double> out;
  out.reserve(rows.size() * width);
  for (const auto& r : rows) out.insert(out.end(), r.value().values().begin(), r.value().values().end());
  return Tensor::matrix(rows.size(), width, std::move(out));
}

inline Forecast forward_window(const GnlModel& model, std::span<const Tensor> window,
                               ForwardOptions options = {}) {
  GradientTape tape;
  const auto bound = bind_model(tape, model, false);
  const auto pass = forward_window(model, bound, window, options);
  return {stack_rows(pass.predictions), stack_rows(pass.hidden), pass.alpha_history};
}

/// Recursive multi-step forecast: each prediction is appended as the newest
/// input and the oldest snapshot dropped.
inline std::vector<Tensor> predict_horizon(const GnlModel& model, std::span<const Tensor> window,
                                           std::size_t horizon) {
  if (horizon < 1) throw ArgumentError("predict_horizon: horizon must be at least 1");
  std::vector<Tensor> inputs(window.begin(), window.end());
  std::vector<Tensor> out;
  out.reserve(horizon);
  for (std::size_t step = 0; step < horizon; ++step) {
    auto forecast = forward_window(model, inputs, ForwardOptions{false});
    out.push_back(forecast.prediction);
    inputs.erase(inputs.begin());
    inputs.push_back(std::move(forecast.prediction));
  }
  return out;
}

/// (1/N) sum_i ||x_hat_i - x_i||^2 with targets given as an N x d_x snapshot.
inline Var mse_loss(std::span<const Var> predictions, const Tensor& targets) {
  if (predictions.empty()) throw ArgumentError("mse_loss: no predictions");
  if (targets.rows() != predictions.size()) {
    throw ShapeError("mse_loss: " + std::to_string(predictions.size()) + " predictions, targets " +
                     shape_string(targets.shape()));
  }
  auto& tape = predictions.front().tape();
  std::vector<Var> per_node;
  per_node.reserve(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const Tensor target = node_row(targets, i);
    if (target.size() != predictions[i].size()) {
      throw ShapeError("mse_loss: prediction " + shape_string(predictions[i].shape()) +
                       " vs target " + shape_string(target.shape()) + " at node " + std::to_string(i));
    }
    const Var diff = sub(predictions[i], tape.constant(target));
    per_node.push_back(dot(diff, diff));
  }
  return scale(add_n(per_node), 1.0 / static_cast<double>(predictions.size()));
}

inline double mse_loss(const Tensor& predictions, const Tensor& targets) {
  if (!predictions.same_shape(targets)) {
    throw ShapeError("mse_loss: predictions " + shape_string(predictions.shape()) + " vs targets " +
                     shape_string(targets.shape()));
  }
  if (predictions.empty()) throw ArgumentError("mse_loss: no predictions");
  double total = 0.0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const double e = predictions[k] - targets[k];
    total += e * e;
  }
  return total / static_cast<double>(predictions.rows());
}

inline constexpr double kFroGuard = 1e-12;

/// loss + beta * R(params) with R the sum over arrays of |.|_1 (l1) or
/// |.|_F (fro); `none` returns the loss.
inline Var objective(const Var& loss, std::span<const Var> params, double beta, Regularizer reg,
                     double guard = kFroGuard) {
  if (!(beta >= 0.0)) throw ArgumentError("objective: beta must be non-negative");
  if (reg == Regularizer::kNone || params.empty()) return loss;
  std::vector<Var> norms;
  norms.reserve(params.size());
  for (const auto& p : params) norms.push_back(reg == Regularizer::kL1 ? abs_sum(p) : fro_norm(p, guard));
  return add(loss, scale(add_n(norms), beta));
}

inline double regularizer_value(const ParamSet& params, Regularizer reg) {
  double total = 0.0;
  for (const auto& p : params) {
    if (reg == Regularizer::kL1) {
      for (double v : p.values()) total += std::abs(v);
    } else if (reg == Regularizer::kFro) {
      double sq = 0.0;
      for (double v : p.values()) sq += v * v;
      total += std::sqrt(sq);
    }
  }
  return total;
}

}  // namespace gnl
