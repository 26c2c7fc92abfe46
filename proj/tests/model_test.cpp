// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "gnl/errors.hpp"
#include "gnl/model.hpp"
#include "gnl/model_check.hpp"

namespace gnl {
namespace {

using Vec = std::vector<double>;

Vec mat_vec(const Tensor& w, const Vec& v) {
  Vec out(w.rows(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r)
    for (std::size_t c = 0; c < w.cols(); ++c) out[r] += w(r, c) * v[c];
  return out;
}

Vec join(std::initializer_list<Vec> parts) {
  Vec out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Straight-line forward pass over plain doubles: scores, softmax over the
// configured set, aggregation, cell update, linear head.
struct Reference {
  Vec prediction;                   // N * d_x
  std::vector<std::vector<Vec>> h;  // per node
  std::vector<Vec> alpha;           // per step, N * N
};

Reference reference_forward(const GnlModel& m, const std::vector<Tensor>& window) {
  const std::size_t n = m.nodes();
  const auto d = m.dims();
  std::vector<Vec> h(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d.hidden; ++k) h[i].push_back(m.initial_hidden(i, k));

  auto coefficients = [&](const std::vector<Vec>& states) {
    std::vector<Vec> proj(n);
    for (std::size_t i = 0; i < n; ++i) proj[i] = mat_vec(m.attention.projection, states[i]);
    Vec e(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) {
        if (!m.edges.contains(j, i)) continue;
        double pre = 0.0;
        const Vec cat = join({proj[j], proj[i]});
        for (std::size_t k = 0; k < cat.size(); ++k) pre += m.attention.score[k] * cat[k];
        e[j * n + i] = pre > 0 ? pre : m.config.negative_slope * pre;
      }
    Vec alpha(n * n, 0.0);
    const bool by_source = m.config.normalization == Normalization::kPerSourceOut;
    for (std::size_t a = 0; a < n; ++a) {
      double total = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const std::size_t j = by_source ? a : b, i = by_source ? b : a;
        if (m.edges.contains(j, i)) total += std::exp(e[j * n + i]);
      }
      for (std::size_t b = 0; b < n; ++b) {
        const std::size_t j = by_source ? a : b, i = by_source ? b : a;
        if (m.edges.contains(j, i)) alpha[j * n + i] = std::exp(e[j * n + i]) / total;
      }
    }
    return std::make_pair(alpha, proj);
  };

  Reference ref;
  for (const auto& snap : window) {
    const auto [alpha, proj] = coefficients(h);
    ref.alpha.push_back(alpha);
    std::vector<Vec> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      Vec z(d.aggregate, 0.0);
      for (std::size_t j = 0; j < n; ++j)
        if (m.edges.contains(j, i))
          for (std::size_t k = 0; k < d.aggregate; ++k) z[k] += alpha[j * n + i] * proj[j][k];
      for (auto& v : z) v = logistic(v);
      Vec x;
      for (std::size_t f = 0; f < d.input; ++f) x.push_back(snap(i, f));
      const Vec xzh = join({x, z, h[i]});
      Vec f = mat_vec(m.gdu.forget, xzh), e = mat_vec(m.gdu.evolve, xzh);
      Vec g = mat_vec(m.gdu.select_g, xzh), r = mat_vec(m.gdu.select_r, xzh);
      Vec zt(d.aggregate), ht(d.hidden);
      for (std::size_t k = 0; k < d.aggregate; ++k) zt[k] = logistic(f[k]) * z[k];
      for (std::size_t k = 0; k < d.hidden; ++k) ht[k] = logistic(e[k]) * h[i][k];
      const Vec b1 = mat_vec(m.gdu.update, join({x, zt, ht}));
      const Vec b2 = mat_vec(m.gdu.update, join({x, z, ht}));
      const Vec b3 = mat_vec(m.gdu.update, join({x, zt, h[i]}));
      const Vec b4 = mat_vec(m.gdu.update, xzh);
      for (std::size_t k = 0; k < d.hidden; ++k) {
        const double gk = logistic(g[k]), rk = logistic(r[k]);
        next[i].push_back(gk * rk * std::tanh(b1[k]) + (1 - gk) * rk * std::tanh(b2[k]) +
                          gk * (1 - rk) * std::tanh(b3[k]) + (1 - gk) * (1 - rk) * std::tanh(b4[k]));
      }
    }
    h = next;
  }
  ref.alpha.push_back(coefficients(h).first);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec y = mat_vec(m.fc_weight, h[i]);
    for (std::size_t f = 0; f < d.input; ++f) ref.prediction.push_back(y[f] + m.fc_bias[f]);
  }
  ref.h.push_back(h);
  return ref;
}

ModelConfig small_config(std::size_t window, std::size_t d_h, std::size_t d_a) {
  ModelConfig c;
  c.window = window;
  c.hidden_dim = d_h;
  c.aggregate_dim = d_a;
  return c;
}

std::vector<Tensor> random_window(std::size_t tau, std::size_t n, std::size_t d_x, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Tensor> w;
  for (std::size_t t = 0; t < tau; ++t) {
    Tensor s = Tensor::zeros({n, d_x});
    for (auto& v : s.values()) v = normal(rng);
    w.push_back(s);
  }
  return w;
}

void zero_parameters(GnlModel& m) {
  ParamSet p = m.parameters();
  for (auto& t : p) std::fill(t.values().begin(), t.values().end(), 0.0);
  m.set_parameters(p);
}

TEST(MakeModel, ShapesAndDefaults) {
  const auto m = make_model(small_config(5, 4, 3), 6);
  EXPECT_EQ(m.nodes(), 6u);
  EXPECT_EQ(m.gdu.forget.shape(), (Shape{3, 8}));
  EXPECT_EQ(m.attention.projection.shape(), (Shape{3, 4}));
  EXPECT_EQ(m.fc_weight.shape(), (Shape{1, 4}));
  EXPECT_EQ(m.fc_bias, Tensor::zeros({1}));
  EXPECT_EQ(m.initial_hidden.shape(), (Shape{6, 4}));
  EXPECT_EQ(m.edges, EdgeSet::fully_connected(6));
  EXPECT_NO_THROW(m.validate());
}

TEST(MakeModel, PriorEdgesFixTheSupport) {
  const EdgeSet prior(3, {{0, 1}, {1, 2}});
  EXPECT_EQ(make_model(small_config(2, 3, 2), 3, prior).edges, prior);
  EXPECT_THROW(make_model(small_config(2, 3, 2), 4, prior), ConfigError);
  EXPECT_THROW(make_model(small_config(2, 3, 2), 0), ConfigError);
}

TEST(MakeModel, SeedDeterminesEverything) {
  ModelConfig c = small_config(3, 4, 3);
  const auto a = make_model(c, 4), b = make_model(c, 4);
  EXPECT_EQ(a.parameters(), b.parameters());
  EXPECT_EQ(a.initial_hidden, b.initial_hidden);
  c.seed = 1;
  EXPECT_NE(make_model(c, 4).initial_hidden, a.initial_hidden);
}

TEST(MakeModel, SetParametersChecksShapes) {
  auto m = make_model(small_config(2, 3, 2), 3);
  ParamSet p = m.parameters();
  p[6] = Tensor::zeros({3});
  EXPECT_THROW(m.set_parameters(p), ShapeError);
  p.pop_back();
  EXPECT_THROW(m.set_parameters(p), ShapeError);
}

TEST(ForwardWindow, ZeroParametersPredictBias) {
  auto m = make_model(small_config(1, 3, 2), 4);
  zero_parameters(m);
  ParamSet p = m.parameters();
  p[8] = Tensor::vector({0.625});
  m.set_parameters(p);
  const auto out = forward_window(m, random_window(1, 4, 1, 3));
  for (double v : out.hidden.values()) EXPECT_EQ(v, 0.0);
  for (double v : out.prediction.values()) EXPECT_EQ(v, 0.625);
}

TEST(ForwardWindow, SingleNodeIgnoresProjection) {
  auto m = make_model(small_config(3, 3, 2), 1);
  const auto window = random_window(3, 1, 1, 5);
  const auto before = forward_window(m, window);
  ParamSet p = m.parameters();
  for (auto& v : p[5].values()) v = v * -3.0 + 1.0;
  m.set_parameters(p);
  const auto after = forward_window(m, window);
  EXPECT_EQ(before.prediction, after.prediction);
  for (const auto& a : after.alpha_history) EXPECT_EQ(a.values, Vec{0.0});
}

TEST(ForwardWindow, MatchesStraightLineReference) {
  for (auto norm : {Normalization::kPerSourceOut, Normalization::kPerTargetIn}) {
    ModelConfig c = small_config(2, 3, 2);
    c.normalization = norm;
    auto m = make_model(c, 3);
    ParamSet p = m.parameters();
    p[8] = Tensor::vector({0.1});
    m.set_parameters(p);
    const auto window = random_window(2, 3, 1, 0);
    const auto out = forward_window(m, window);
    const auto ref = reference_forward(m, window);
    ASSERT_EQ(out.prediction.size(), ref.prediction.size());
    for (std::size_t k = 0; k < ref.prediction.size(); ++k) EXPECT_NEAR(out.prediction[k], ref.prediction[k], 1e-13);
    ASSERT_EQ(out.alpha_history.size(), 3u);
    for (std::size_t t = 0; t < 3; ++t)
      for (std::size_t k = 0; k < 9; ++k) EXPECT_NEAR(out.alpha_history[t].values[k], ref.alpha[t][k], 1e-14);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(out.hidden(i, k), ref.h[0][i][k], 1e-14);
  }
}

TEST(ForwardWindow, MatchesReferenceOnPriorGraphWithMultipleFeatures) {
  ModelConfig c = small_config(4, 5, 3);
  c.input_dim = 2;
  const EdgeSet prior(5, {{0, 1}, {0, 2}, {3, 2}, {4, 0}, {2, 4}});
  const auto m = make_model(c, 5, prior);
  const auto window = random_window(4, 5, 2, 9);
  const auto out = forward_window(m, window);
  const auto ref = reference_forward(m, window);
  for (std::size_t k = 0; k < ref.prediction.size(); ++k) EXPECT_NEAR(out.prediction[k], ref.prediction[k], 1e-13);
}

TEST(ForwardWindow, FinalAttentionIsOptional) {
  const auto m = make_model(small_config(3, 3, 2), 3);
  const auto w = random_window(3, 3, 1, 1);
  EXPECT_EQ(forward_window(m, w).alpha_history.size(), 4u);
  const auto without = forward_window(m, w, ForwardOptions{false});
  EXPECT_EQ(without.alpha_history.size(), 3u);
  EXPECT_EQ(without.prediction, forward_window(m, w).prediction);
}

TEST(ForwardWindow, Deterministic) {
  const auto m = make_model(small_config(5, 4, 3), 4);
  const auto w = random_window(5, 4, 1, 2);
  const auto a = forward_window(m, w), b = forward_window(m, w);
  EXPECT_EQ(a.prediction, b.prediction);
  EXPECT_EQ(a.hidden, b.hidden);
  EXPECT_EQ(a.alpha_history, b.alpha_history);
}

TEST(ForwardWindow, ShapeErrors) {
  const auto m = make_model(small_config(3, 3, 2), 3);
  EXPECT_THROW(forward_window(m, random_window(2, 3, 1, 0)), ShapeError);
  EXPECT_THROW(forward_window(m, random_window(3, 4, 1, 0)), ShapeError);
  EXPECT_THROW(forward_window(m, random_window(3, 3, 2, 0)), ShapeError);
}

TEST(PredictHorizon, OneStepEqualsForward) {
  const auto m = make_model(small_config(3, 3, 2), 3);
  const auto w = random_window(3, 3, 1, 4);
  const auto steps = predict_horizon(m, w, 1);
  ASSERT_EQ(steps.size(), 1u);
  EXPECT_EQ(steps[0], forward_window(m, w).prediction);
}

TEST(PredictHorizon, ZeroParametersRepeatBias) {
  auto m = make_model(small_config(2, 3, 2), 3);
  zero_parameters(m);
  ParamSet p = m.parameters();
  p[8] = Tensor::vector({-1.5});
  m.set_parameters(p);
  for (const auto& s : predict_horizon(m, random_window(2, 3, 1, 0), 4))
    for (double v : s.values()) EXPECT_EQ(v, -1.5);
}

TEST(PredictHorizon, RecursiveRollout) {
  const auto m = make_model(small_config(3, 3, 2), 3);
  std::vector<Tensor> w = random_window(3, 3, 1, 0);
  const auto steps = predict_horizon(m, w, 3);
  for (std::size_t s = 0; s < 3; ++s) {
    const Tensor next = forward_window(m, w).prediction;
    EXPECT_EQ(steps[s], next) << "step " << s;
    w.erase(w.begin());
    w.push_back(next);
  }
  EXPECT_THROW(predict_horizon(m, w, 0), ArgumentError);
}

TEST(MseLoss, Examples) {
  const Tensor a = Tensor::matrix(2, 1, {0.5, 2});
  EXPECT_EQ(mse_loss(a, a), 0.0);
  EXPECT_EQ(mse_loss(Tensor::matrix(2, 1, {1, -1}), Tensor::zeros({2, 1})), 1.0);
  EXPECT_THROW(mse_loss(a, Tensor::zeros({3, 1})), ShapeError);
}

TEST(MseLoss, TapeVersionMatchesPlainAndScalesQuadratically) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor pred = Tensor::zeros({4, 2}), target = Tensor::zeros({4, 2});
  for (auto& v : pred.values()) v = normal(rng);
  for (auto& v : target.values()) v = normal(rng);
  GradientTape tape;
  std::vector<Var> rows;
  for (std::size_t i = 0; i < 4; ++i) rows.push_back(tape.constant(node_row(pred, i)));
  const double base = mse_loss(pred, target);
  EXPECT_NEAR(mse_loss(rows, target).value().item(), base, 1e-15);

  Tensor scaled = pred;
  for (std::size_t k = 0; k < scaled.size(); ++k) scaled[k] = target[k] + 3.0 * (pred[k] - target[k]);
  EXPECT_NEAR(mse_loss(scaled, target), 9.0 * base, 1e-12);
}

TEST(MseLoss, InvariantUnderNodeReordering) {
  const Tensor pred = Tensor::matrix(3, 1, {0.3, -1.2, 2.0});
  const Tensor target = Tensor::matrix(3, 1, {0.1, 0.4, 1.0});
  const Tensor pred_perm = Tensor::matrix(3, 1, {2.0, 0.3, -1.2});
  const Tensor target_perm = Tensor::matrix(3, 1, {1.0, 0.1, 0.4});
  EXPECT_NEAR(mse_loss(pred, target), mse_loss(pred_perm, target_perm), 1e-15);
}

TEST(Objective, RegularisedValues) {
  GradientTape tape;
  const Var loss = tape.constant(Tensor::scalar(0.0));
  const Var theta = tape.variable(Tensor::matrix(2, 1, {3, -4}));
  const Var params[] = {theta};
  EXPECT_EQ(objective(loss, params, 1.0, Regularizer::kL1).value().item(), 7.0);
  EXPECT_EQ(objective(loss, params, 1.0, Regularizer::kFro).value().item(), 5.0);
  EXPECT_EQ(objective(loss, params, 1.0, Regularizer::kNone).value().item(), 0.0);
  EXPECT_EQ(objective(loss, params, 0.0, Regularizer::kL1).value().item(), 0.0);
  EXPECT_THROW(objective(loss, params, -0.1, Regularizer::kL1), ArgumentError);
  EXPECT_EQ(regularizer_value({Tensor::matrix(2, 1, {3, -4})}, Regularizer::kL1), 7.0);
  EXPECT_EQ(regularizer_value({Tensor::matrix(2, 1, {3, -4})}, Regularizer::kFro), 5.0);
}

TEST(Objective, L1IgnoresSigns) {
  const ParamSet a = {Tensor::vector({1.5, -2}), Tensor::matrix(1, 2, {0.25, 3})};
  const ParamSet b = {Tensor::vector({-1.5, -2}), Tensor::matrix(1, 2, {0.25, -3})};
  EXPECT_EQ(regularizer_value(a, Regularizer::kL1), regularizer_value(b, Regularizer::kL1));
}

TEST(ModelGradient, PassesFiniteDifferenceCheck) {
  for (auto reg : {Regularizer::kNone, Regularizer::kFro}) {
    for (auto agg : {Aggregator::kAttention, Aggregator::kFixedMean}) {
      for (auto norm : {Normalization::kPerSourceOut, Normalization::kPerTargetIn}) {
        ModelCheckSpec spec;
        spec.regularizer = reg;
        spec.aggregator = agg;
        spec.normalization = norm;
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
          spec.seed = seed;
          EXPECT_LT(check_model_gradient(spec).max_relative_error, 1e-5) << "seed " << seed;
        }
      }
    }
  }
}

TEST(ModelGradient, NoAggregationLeavesAttentionUntouched) {
  ModelConfig c = small_config(3, 3, 3);
  c.aggregator = Aggregator::kNone;
  const auto m = make_model(c, 4);
  GradientTape tape;
  const auto bound = bind_model(tape, m);
  const auto pass = forward_window(m, bound, random_window(3, 4, 1, 7));
  const auto params = bound.parameters();
  tape.backward(objective(mse_loss(pass.predictions, Tensor::zeros({4, 1})), params, 0.0, Regularizer::kNone));
  for (std::size_t p : {5u, 6u}) {
    const Tensor g = params[p].grad();
    for (double v : g.values()) EXPECT_EQ(v, 0.0) << kParameterNames[p];
  }
  const Tensor gu = params[2].grad();
  EXPECT_TRUE(std::any_of(gu.values().begin(), gu.values().end(), [](double v) { return v != 0.0; }));
}

}  // namespace
}  // namespace gnl
