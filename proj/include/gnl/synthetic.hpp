// SPDX-License-Identifier: Apache-2.0
//
// Linear diffusion over a known directed graph:
//   x_i^{t+1} = a_i x_i^t + w * sum_{(j,i) in E} x_j^{t+1-lag} + s_i * eps,
// eps ~ N(0, 1). A neighbour's input at t reaches a node's hidden state at
// t + 2 (one GDU step into its own state, then one aggregation), hence the
// default lag of 2.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gnl/attention.hpp"
#include "gnl/data.hpp"
#include "gnl/errors.hpp"

namespace gnl {

struct DiffusionSpec {
  std::size_t nodes = 6;
  std::size_t length = 300;
  std::vector<double> self_weight;  // a_i
  std::vector<double> noise;        // s_i
  double edge_weight = 0.5;         // w
  std::size_t lag = 2;              // >= 1
  std::vector<EdgeSet::Edge> edges;
  std::size_t burn_in = 100;
  std::uint64_t seed = 0;
};

/// Nodes [0, drivers) are autoregressive drivers; every driver feeds every
/// remaining node, and the followers have no memory of their own.
inline DiffusionSpec driver_follower_spec(std::size_t nodes = 6, std::size_t drivers = 3,
                                          std::uint64_t seed = 0) {
  if (drivers > nodes) throw ArgumentError("more drivers than nodes");
  DiffusionSpec s;
  s.nodes = nodes;
  s.seed = seed;
  for (std::size_t i = 0; i < nodes; ++i) {
    const bool driver = i < drivers;
    s.self_weight.push_back(driver ? 0.9 : 0.0);
    s.noise.push_back(driver ? 1.0 : 0.1);
  }
  for (std::size_t j = 0; j < drivers; ++j)
    for (std::size_t i = drivers; i < nodes; ++i) s.edges.emplace_back(j, i);
  return s;
}

struct SyntheticData {
  Dataset dataset;  // prior left empty: the graph is to be inferred
  EdgeSet truth;
};

inline SyntheticData make_diffusion_data(const DiffusionSpec& spec) {
  if (spec.nodes == 0 || spec.length == 0) {
    throw ArgumentError("diffusion data needs at least one node and one timestamp");
  }
  if (spec.lag < 1) throw ArgumentError("diffusion lag must be at least 1");
  if (spec.self_weight.size() != spec.nodes || spec.noise.size() != spec.nodes) {
    throw ArgumentError("self_weight and noise need one entry per node (" +
                        std::to_string(spec.nodes) + ")");
  }
  for (double s : spec.noise) {
    if (!(s >= 0.0)) throw ArgumentError("noise scales must be non-negative");
  }
  const EdgeSet truth(spec.nodes, spec.edges);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  // history[0] is x^t, history[k] is x^{t-k}
  std::vector<std::vector<double>> history(spec.lag, std::vector<double>(spec.nodes));
  for (auto& row : history)
    for (auto& v : row) v = normal(rng);

  SyntheticData out{{}, truth};
  auto& ds = out.dataset;
  for (std::size_t i = 0; i < spec.nodes; ++i) ds.node_ids.push_back("n" + std::to_string(i));
  ds.features = 1;
  ds.values.reserve(spec.length * spec.nodes);

  std::vector<double> next(spec.nodes);
  for (std::size_t step = 0; step < spec.burn_in + spec.length; ++step) {
    if (step >= spec.burn_in) {
      ds.timestamps.push_back(std::to_string(step - spec.burn_in));
      ds.values.insert(ds.values.end(), history[0].begin(), history[0].end());
    }
    const auto& current = history[0];
    const auto& delayed = history[spec.lag - 1];
    for (std::size_t i = 0; i < spec.nodes; ++i) next[i] = spec.self_weight[i] * current[i];
    for (const auto& [j, i] : truth.edges()) next[i] += spec.edge_weight * delayed[j];
    for (std::size_t i = 0; i < spec.nodes; ++i) next[i] += spec.noise[i] * normal(rng);
    history.pop_back();
    history.insert(history.begin(), next);
  }
  for (double v : ds.values) {
    if (!std::isfinite(v)) throw ArgumentError("diffusion data diverged; reduce the weights");
  }
  return out;
}

}  // namespace gnl
