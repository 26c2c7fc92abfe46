// SPDX-License-Identifier: Apache-2.0
//
// Attentive neighbourhood aggregation. Pairwise influence scores
//   e[j][i] = LeakyReLU(w_a . [W_a h_j, W_a h_i])
// are normalised by a softmax and used to mix projected neighbour states
//   z_i = sigmoid(sum_{j in in(i)} alpha[j][i] W_a h_j).
#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gnl/errors.hpp"
#include "gnl/gdu.hpp"
#include "gnl/tape.hpp"
#include "gnl/tensor.hpp"

namespace gnl {

struct AttentionParameters {
  Tensor projection;  // W_a, d_a x d_h
  Tensor score;       // w_a, 2 d_a

  void validate(const GduDims& dims) const {
    if (projection.shape() != Shape{dims.aggregate, dims.hidden}) {
      throw ShapeError("W_a: expected " + shape_string({dims.aggregate, dims.hidden}) +
                       ", got " + shape_string(projection.shape()));
    }
    if (score.shape() != Shape{2 * dims.aggregate}) {
      throw ShapeError("w_a: expected " + shape_string({2 * dims.aggregate}) + ", got " +
                       shape_string(score.shape()));
    }
  }
};

inline AttentionParameters init_attention_params(const GduDims& dims, std::uint64_t seed) {
  dims.validate();
  std::mt19937_64 rng(seed);
  AttentionParameters p;
  p.projection = glorot_uniform(dims.aggregate, dims.hidden, rng);
  Tensor w = glorot_uniform(1, 2 * dims.aggregate, rng);
  p.score = Tensor::vector(std::move(w.values()));
  return p;
}

struct AttentionWeights {
  Var projection;
  Var score;
};

inline AttentionWeights bind_attention(GradientTape& tape, const AttentionParameters& p) {
  return {tape.variable(p.projection), tape.variable(p.score)};
}

/// Directed influence links (source j, target i) over nodes [0, N).
class EdgeSet {
 public:
  using Edge = std::pair<std::size_t, std::size_t>;

  EdgeSet() = default;

  EdgeSet(std::size_t nodes, std::vector<Edge> edges, bool allow_self_loops = false)
      : nodes_(nodes), in_(nodes), out_(nodes) {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    for (const auto& [j, i] : edges) {
      if (j >= nodes || i >= nodes) {
        throw IndexError("edge (" + std::to_string(j) + ", " + std::to_string(i) +
                         ") references a node outside [0, " + std::to_string(nodes) + ")");
      }
      if (j == i && !allow_self_loops) {
        throw ConfigError("self-loop on node " + std::to_string(j) + " is not allowed");
      }
    }
    edges_ = std::move(edges);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      out_[edges_[e].first].push_back(e);
      in_[edges_[e].second].push_back(e);
    }
  }

  /// Every ordered pair of distinct nodes.
  static EdgeSet fully_connected(std::size_t nodes) {
    std::vector<Edge> edges;
    for (std::size_t j = 0; j < nodes; ++j)
      for (std::size_t i = 0; i < nodes; ++i)
        if (i != j) edges.emplace_back(j, i);
    return EdgeSet(nodes, std::move(edges));
  }

  /// Adds the reverse of every edge.
  static EdgeSet bidirectional(std::size_t nodes, std::vector<Edge> edges) {
    const std::size_t n = edges.size();
    for (std::size_t e = 0; e < n; ++e) edges.emplace_back(edges[e].second, edges[e].first);
    return EdgeSet(nodes, std::move(edges));
  }

  std::size_t nodes() const { return nodes_; }
  std::size_t size() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(std::size_t e) const { return edges_[e]; }

  /// Edge indices whose target is `i`.
  const std::vector<std::size_t>& in_edges(std::size_t i) const { return in_.at(i); }
  /// Edge indices whose source is `j`.
  const std::vector<std::size_t>& out_edges(std::size_t j) const { return out_.at(j); }

  bool contains(std::size_t j, std::size_t i) const {
    return std::binary_search(edges_.begin(), edges_.end(), Edge{j, i});
  }

  bool is_bidirectional() const {
    for (const auto& [j, i] : edges_)
      if (!contains(i, j)) return false;
    return true;
  }

  friend bool operator==(const EdgeSet& a, const EdgeSet& b) {
    return a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
  }

 private:
  std::size_t nodes_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> in_;
  std::vector<std::vector<std::size_t>> out_;
};

enum class Normalization { kPerSourceOut, kPerTargetIn };
enum class Aggregator { kAttention, kNone, kFixedMean };

/// Dense N x N coefficients, rows = source j, columns = target i. Entries
/// outside the edge set are zero.
struct InfluenceMatrix {
  std::size_t nodes = 0;
  std::vector<double> values;

  explicit InfluenceMatrix(std::size_t n = 0) : nodes(n), values(n * n, 0.0) {}
  double operator()(std::size_t j, std::size_t i) const { return values[j * nodes + i]; }
  double& operator()(std::size_t j, std::size_t i) { return values[j * nodes + i]; }

  friend bool operator==(const InfluenceMatrix&, const InfluenceMatrix&) = default;
};

/// Coefficient handles aligned with EdgeSet::edges() plus their dense values.
struct Influence {
  std::vector<Var> per_edge;
  InfluenceMatrix matrix;
};

namespace detail {

inline std::vector<Var> project_all(std::span<const Var> hidden, const Var& projection) {
  std::vector<Var> out;
  out.reserve(hidden.size());
  for (const auto& h : hidden) out.push_back(matvec(projection, h));
  return out;
}

}  // namespace detail

/// Raw score per edge, aligned with edges.edges().
inline std::vector<Var> influence_scores(std::span<const Var> hidden, const EdgeSet& edges,
                                         const AttentionWeights& att, double slope) {
  if (!(slope > 0.0)) throw ArgumentError("influence_scores: negative slope must be positive");
  for (const auto& [j, i] : edges.edges()) {
    if (j >= hidden.size() || i >= hidden.size()) {
      throw IndexError("edge (" + std::to_string(j) + ", " + std::to_string(i) +
                       ") references a node outside [0, " + std::to_string(hidden.size()) + ")");
    }
  }
  const auto projected = detail::project_all(hidden, att.projection);
  if (!projected.empty() && att.score.size() != 2 * projected.front().size()) {
    throw ShapeError("w_a: expected length " + std::to_string(2 * projected.front().size()) +
                     ", got " + std::to_string(att.score.size()));
  }
  std::vector<Var> scores;
  scores.reserve(edges.size());
  for (const auto& [j, i] : edges.edges()) {
    scores.push_back(leaky_relu(dot(att.score, concat({projected[j], projected[i]})), slope));
  }
  return scores;
}

/// Softmax of the scores over each normalisation set: the source's out-edges
/// (per_source_out) or the target's in-edges (per_target_in).
inline Influence influence_coefficients(std::span<const Var> scores, const EdgeSet& edges,
                                        Normalization normalization) {
  if (scores.size() != edges.size()) {
    throw ShapeError("influence_coefficients: " + std::to_string(scores.size()) +
                     " scores for " + std::to_string(edges.size()) + " edges");
  }
  Influence out{std::vector<Var>(edges.size()), InfluenceMatrix(edges.nodes())};
  for (std::size_t node = 0; node < edges.nodes(); ++node) {
    const auto& set = normalization == Normalization::kPerSourceOut ? edges.out_edges(node)
                                                                    : edges.in_edges(node);
    if (set.empty()) continue;
    std::vector<Var> group;
    group.reserve(set.size());
    for (auto e : set) group.push_back(scores[e]);
    const Var weights = masked_softmax(concat(group));
    for (std::size_t k = 0; k < set.size(); ++k) {
      const auto e = set[k];
      out.per_edge[e] = element(weights, k);
      const auto& [j, i] = edges.edge(e);
      out.matrix(j, i) = weights.value()[k];
    }
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!out.per_edge[e].valid()) {
      throw ConfigError("influence_coefficients: edge " + std::to_string(e) +
                        " has no normalisation set");
    }
  }
  return out;
}

/// Neighbour summary z_i for every node.
inline std::vector<Var> aggregate(std::span<const Var> hidden, const Influence& alpha,
                                  const EdgeSet& edges, const AttentionWeights& att,
                                  Aggregator variant) {
  const std::size_t n = hidden.size();
  if (variant == Aggregator::kNone) {
    if (att.projection.shape()[0] != att.projection.shape()[1]) {
      throw ConfigError("aggregator 'none' requires d_a == d_h, got d_a=" +
                        std::to_string(att.projection.shape()[0]) +
                        ", d_h=" + std::to_string(att.projection.shape()[1]));
    }
    return {hidden.begin(), hidden.end()};
  }
  if (edges.nodes() != n) {
    throw ShapeError("aggregate: edge set has " + std::to_string(edges.nodes()) +
                     " nodes, hidden states " + std::to_string(n));
  }
  const auto projected = detail::project_all(hidden, att.projection);
  auto& tape = att.projection.tape();
  const Tensor empty_sum = Tensor::zeros({att.projection.shape()[0]});

  std::vector<Var> z;
  z.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& in = edges.in_edges(i);
    if (in.empty()) {
      z.push_back(sigmoid(tape.constant(empty_sum)));
      continue;
    }
    std::vector<Var> terms;
    terms.reserve(in.size());
    for (auto e : in) {
      const auto j = edges.edge(e).first;
      terms.push_back(variant == Aggregator::kAttention ? scale(projected[j], alpha.per_edge.at(e))
                                                        : projected[j]);
    }
    Var total = add_n(terms);
    if (variant == Aggregator::kFixedMean) total = scale(total, 1.0 / static_cast<double>(in.size()));
    z.push_back(sigmoid(total));
  }
  return z;
}

}  // namespace gnl
