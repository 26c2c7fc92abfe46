// SPDX-License-Identifier: Apache-2.0
//
// Gated diffusive unit: one hidden-state update for a node given its input
// features x, previous hidden state h and aggregated neighbour summary z.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "gnl/errors.hpp"
#include "gnl/tape.hpp"
#include "gnl/tensor.hpp"

namespace gnl {

struct GduDims {
  std::size_t input = 1;      // d_x
  std::size_t hidden = 1;     // d_h
  std::size_t aggregate = 1;  // d_a

  std::size_t gate_width() const { return input + aggregate + hidden; }

  void validate() const {
    if (input == 0 || hidden == 0 || aggregate == 0) {
      throw ConfigError("GDU dimensions must be positive (d_x=" + std::to_string(input) +
                        ", d_h=" + std::to_string(hidden) +
                        ", d_a=" + std::to_string(aggregate) + ")");
    }
  }

  friend bool operator==(const GduDims&, const GduDims&) = default;
};

/// Gate matrices. `forget` masks z and has d_a rows; the others have d_h rows.
/// All act on the concatenation [x, z, h] of width d_x + d_a + d_h.
struct GduParameters {
  Tensor forget;
  Tensor evolve;
  Tensor update;
  Tensor select_g;
  Tensor select_r;

  void validate(const GduDims& dims) const {
    const std::size_t width = dims.gate_width();
    auto check = [&](const Tensor& w, const char* name, std::size_t rows) {
      if (w.shape() != Shape{rows, width}) {
        throw ShapeError(std::string(name) + ": expected " + shape_string({rows, width}) +
                         ", got " + shape_string(w.shape()));
      }
    };
    check(forget, "W_f", dims.aggregate);
    check(evolve, "W_e", dims.hidden);
    check(update, "W_u", dims.hidden);
    check(select_g, "W_g", dims.hidden);
    check(select_r, "W_r", dims.hidden);
  }
};

/// Glorot-uniform matrix: entries i.i.d. on [-s, s], s = sqrt(6 / (rows + cols)).
inline Tensor glorot_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor w = Tensor::zeros({rows, cols});
  for (auto& v : w.values()) v = dist(rng);
  return w;
}

inline GduParameters init_gdu_params(const GduDims& dims, std::uint64_t seed) {
  dims.validate();
  std::mt19937_64 rng(seed);
  const std::size_t width = dims.gate_width();
  GduParameters p;
  p.forget = glorot_uniform(dims.aggregate, width, rng);
  p.evolve = glorot_uniform(dims.hidden, width, rng);
  p.update = glorot_uniform(dims.hidden, width, rng);
  p.select_g = glorot_uniform(dims.hidden, width, rng);
  p.select_r = glorot_uniform(dims.hidden, width, rng);
  return p;
}

/// Gate matrices bound to a tape.
struct GduWeights {
  Var forget;
  Var evolve;
  Var update;
  Var select_g;
  Var select_r;
};

inline GduWeights bind_gdu(GradientTape& tape, const GduParameters& p) {
  return {tape.variable(p.forget), tape.variable(p.evolve), tape.variable(p.update),
          tape.variable(p.select_g), tape.variable(p.select_r)};
}

inline GduWeights bind_gdu_constant(GradientTape& tape, const GduParameters& p) {
  return {tape.constant(p.forget), tape.constant(p.evolve), tape.constant(p.update),
          tape.constant(p.select_g), tape.constant(p.select_r)};
}

/// h_next = g r tanh(W_u[x,z~,h~]) + (1-g) r tanh(W_u[x,z,h~])
///        + g (1-r) tanh(W_u[x,z~,h]) + (1-g)(1-r) tanh(W_u[x,z,h])
/// with z~ = f z, h~ = e h and every gate a sigmoid of W_*[x,z,h].
inline Var gdu_step(const Var& x, const Var& h, const Var& z, const GduWeights& w) {
  const GduDims dims{x.size(), h.size(), z.size()};
  const std::size_t width = dims.gate_width();
  auto check = [&](const Var& m, const char* name, std::size_t rows) {
    if (m.shape() != Shape{rows, width}) {
      throw ShapeError(std::string(name) + ": expected " + shape_string({rows, width}) +
                       " for d_x=" + std::to_string(dims.input) +
                       ", d_a=" + std::to_string(dims.aggregate) +
                       ", d_h=" + std::to_string(dims.hidden) + ", got " +
                       shape_string(m.shape()));
    }
  };
  check(w.forget, "W_f", dims.aggregate);
  check(w.evolve, "W_e", dims.hidden);
  check(w.update, "W_u", dims.hidden);
  check(w.select_g, "W_g", dims.hidden);
  check(w.select_r, "W_r", dims.hidden);

  const Var xzh = concat({x, z, h});
  const Var f = sigmoid(matvec(w.forget, xzh));
  const Var e = sigmoid(matvec(w.evolve, xzh));
  const Var g = sigmoid(matvec(w.select_g, xzh));
  const Var r = sigmoid(matvec(w.select_r, xzh));
  const Var z_gated = hadamard(f, z);
  const Var h_gated = hadamard(e, h);
  const Var not_g = one_minus(g);
  const Var not_r = one_minus(r);

  const Var both = tanh(matvec(w.update, concat({x, z_gated, h_gated})));
  const Var evolve_only = tanh(matvec(w.update, concat({x, z, h_gated})));
  const Var forget_only = tanh(matvec(w.update, concat({x, z_gated, h})));
  const Var neither = tanh(matvec(w.update, xzh));

  const Var terms[] = {
      hadamard(hadamard(g, r), both),
      hadamard(hadamard(not_g, r), evolve_only),
      hadamard(hadamard(g, not_r), forget_only),
      hadamard(hadamard(not_g, not_r), neither),
  };
  return add_n(terms);
}

}  // namespace gnl
