// SPDX-License-Identifier: Apache-2.0
//
// Finite-difference check of the full objective (forward window, MSE,
// regulariser) on small random models.
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "gnl/config.hpp"
#include "gnl/grad_check.hpp"
#include "gnl/model.hpp"

namespace gnl {

struct ModelCheckSpec {
  std::size_t nodes = 5;
  std::size_t window = 3;
  std::size_t input_dim = 1;
  std::size_t aggregate_dim = 3;
  std::size_t hidden_dim = 4;
  double beta = 0.01;
  Regularizer regularizer = Regularizer::kFro;
  Aggregator aggregator = Aggregator::kAttention;
  Normalization normalization = Normalization::kPerSourceOut;
  std::uint64_t seed = 0;
  double step = 1e-6;
};

/// Random model, window and target drawn from `spec.seed`; the head bias is
/// also randomised so no parameter starts at zero.
inline GradCheckReport check_model_gradient(const ModelCheckSpec& spec) {
  ModelConfig c;
  c.input_dim = spec.input_dim;
  c.hidden_dim = spec.hidden_dim;
  c.aggregate_dim = spec.aggregate_dim;
  c.window = spec.window;
  c.beta = spec.beta;
  c.aggregator = spec.aggregator;
  c.normalization = spec.normalization;
  c.seed = spec.seed;
  GnlModel model = make_model(c, spec.nodes);

  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& b : model.fc_bias.values()) b = 0.1 * normal(rng);
  std::vector<Tensor> window;
  for (std::size_t t = 0; t < spec.window; ++t) {
    Tensor snap = Tensor::zeros({spec.nodes, spec.input_dim});
    for (auto& v : snap.values()) v = normal(rng);
    window.push_back(std::move(snap));
  }
  Tensor target = Tensor::zeros({spec.nodes, spec.input_dim});
  for (auto& v : target.values()) v = normal(rng);

  const TapeObjective objective_fn = [&](GradientTape&, std::span<const Var> params) {
    const auto bound = bind_model(params);
    const auto pass = forward_window(model, bound, window, ForwardOptions{false});
    return objective(mse_loss(pass.predictions, target), params, spec.beta, spec.regularizer);
  };
  return grad_check(objective_fn, model.parameters(), spec.step);
}

}  // namespace gnl
