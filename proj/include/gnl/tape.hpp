// SPDX-License-Identifier: Apache-2.0
//
// Dense reverse-mode differentiation. A GradientTape records every primitive
// applied to its variables in creation order; backward() walks the record in
// reverse and accumulates vector-Jacobian products. Tapes are rebuilt for
// every forward pass and are not thread-safe.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gnl/errors.hpp"
#include "gnl/tensor.hpp"

namespace gnl {

class GradientTape;

/// Handle to a node on a GradientTape.
class Var {
 public:
  Var() = default;
  Var(GradientTape* tape, std::size_t id) : tape_(tape), id_(id) {}

  GradientTape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor& value() const;
  Tensor grad() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }

 private:
  GradientTape* tape_ = nullptr;
  std::size_t id_ = 0;
};

enum class Op : std::uint8_t {
  kConstant,
  kVariable,
  kMatVec,
  kHadamard,
  kAdd,
  kSub,
  kOneMinus,
  kConcat,
  kSigmoid,
  kTanh,
  kLeakyRelu,
  kSoftmax,
  kElement,
  kScale,
  kScaleConst,
  kSum,
  kDot,
  kAddN,
  kAbsSum,
  kFroNorm,
};

class GradientTape {
 public:
  struct Node {
    Op op;
    std::vector<std::size_t> inputs;
    Tensor value;
    double param = 0.0;       // slope, constant factor or norm guard
    std::size_t index = 0;    // element index
    bool tracked = false;     // depends on at least one variable
  };

  GradientTape() = default;
  GradientTape(const GradientTape&) = delete;
  GradientTape& operator=(const GradientTape&) = delete;

  Var constant(Tensor value) { return push_leaf(Op::kConstant, std::move(value), false); }

  /// Leaf whose gradient is reported by backward().
  Var variable(Tensor value) { return push_leaf(Op::kVariable, std::move(value), true); }

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }

  /// Gradient of the last backward() target. Zero-filled for nodes the
  /// target does not depend on.
  Tensor grad(std::size_t id) const {
    const auto& node = nodes_.at(id);
    if (id >= grads_.size() || grads_[id].empty()) return Tensor::zeros(node.value.shape());
    return grads_[id];
  }

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_.at(id); }

  void backward(Var loss);

  Var push(Op op, std::vector<std::size_t> inputs, Tensor value, double param = 0.0,
           std::size_t index = 0) {
    bool tracked = op == Op::kVariable;
    for (auto in : inputs) tracked = tracked || nodes_[in].tracked;
    nodes_.push_back(Node{op, std::move(inputs), std::move(value), param, index, tracked});
    return Var(this, nodes_.size() - 1);
  }

 private:
  Var push_leaf(Op op, Tensor value, bool tracked) {
    nodes_.push_back(Node{op, {}, std::move(value), 0.0, 0, tracked});
    return Var(this, nodes_.size() - 1);
  }

  Tensor& grad_slot(std::size_t id) {
    auto& g = grads_[id];
    if (g.empty()) g = Tensor::zeros(nodes_[id].value.shape());
    return g;
  }

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }
inline Tensor Var::grad() const { return tape_->grad(id_); }

namespace detail {

inline GradientTape& same_tape(const Var& a, const Var& b) {
  if (&a.tape() != &b.tape()) throw ArgumentError("operands recorded on different tapes");
  return a.tape();
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

/// Matrix-vector product A x.
inline Var matvec(const Var& a, const Var& x) {
  auto& tape = detail::same_tape(a, x);
  const auto& am = a.value();
  const auto& xv = x.value();
  if (am.rank() != 2 || xv.rank() != 1 || am.shape()[1] != xv.size()) {
    throw ShapeError("matvec: cannot multiply " + shape_string(am.shape()) + " by " +
                     shape_string(xv.shape()));
  }
  const std::size_t m = am.shape()[0];
  const std::size_t n = am.shape()[1];
  std::vector<double> out(m, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    double acc = 0.0;
    const double* row = am.values().data() + r * n;
    for (std::size_t c = 0; c < n; ++c) acc += row[c] * xv[c];
    out[r] = acc;
  }
  return tape.push(Op::kMatVec, {a.id(), x.id()}, Tensor::vector(std::move(out)));
}

/// Element-wise product of two equal-length vectors.
inline Var hadamard(const Var& x, const Var& y) {
  auto& tape = detail::same_tape(x, y);
  if (!x.value().same_shape(y.value())) {
    throw ShapeError("hadamard: shapes " + shape_string(x.shape()) + " and " +
                     shape_string(y.shape()) + " differ");
  }
  Tensor out = x.value();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= y.value()[k];
  return tape.push(Op::kHadamard, {x.id(), y.id()}, std::move(out));
}

inline Var add(const Var& x, const Var& y) {
  auto& tape = detail::same_tape(x, y);
  if (!x.value().same_shape(y.value())) {
    throw ShapeError("add: shapes " + shape_string(x.shape()) + " and " +
                     shape_string(y.shape()) + " differ");
  }
  Tensor out = x.value();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += y.value()[k];
  return tape.push(Op::kAdd, {x.id(), y.id()}, std::move(out));
}

inline Var sub(const Var& x, const Var& y) {
  auto& tape = detail::same_tape(x, y);
  if (!x.value().same_shape(y.value())) {
    throw ShapeError("sub: shapes " + shape_string(x.shape()) + " and " +
                     shape_string(y.shape()) + " differ");
  }
  Tensor out = x.value();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] -= y.value()[k];
  return tape.push(Op::kSub, {x.id(), y.id()}, std::move(out));
}

/// 1 - x, element-wise.
inline Var one_minus(const Var& x) {
  Tensor out = x.value();
  for (auto& v : out.values()) v = 1.0 - v;
  return x.tape().push(Op::kOneMinus, {x.id()}, std::move(out));
}

/// Concatenation of the flattened parts, in order.
inline Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ArgumentError("concat: empty list of parts");
  auto& tape = parts.front().tape();
  std::vector<std::size_t> ids;
  std::vector<double> out;
  ids.reserve(parts.size());
  for (const auto& p : parts) {
    if (&p.tape() != &tape) throw ArgumentError("concat: parts recorded on different tapes");
    ids.push_back(p.id());
    const auto& v = p.value().values();
    out.insert(out.end(), v.begin(), v.end());
  }
  return tape.push(Op::kConcat, std::move(ids), Tensor::vector(std::move(out)));
}

inline Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

inline Var sigmoid(const Var& x) {
  Tensor out = x.value();
  for (auto& v : out.values()) v = detail::sigmoid(v);
  return x.tape().push(Op::kSigmoid, {x.id()}, std::move(out));
}

inline Var tanh(const Var& x) {
  Tensor out = x.value();
  for (auto& v : out.values()) v = std::tanh(v);
  return x.tape().push(Op::kTanh, {x.id()}, std::move(out));
}

inline Var leaky_relu(const Var& x, double slope) {
  if (!(slope > 0.0)) throw ArgumentError("leaky_relu: slope must be positive");
  Tensor out = x.value();
  for (auto& v : out.values()) v = v >= 0.0 ? v : slope * v;
  return x.tape().push(Op::kLeakyRelu, {x.id()}, std::move(out), slope);
}

/// Activation selector for the element-wise nonlinearities.
struct Activation {
  enum class Kind { kSigmoid, kTanh, kLeakyRelu };
  Kind kind = Kind::kSigmoid;
  double slope = 0.0;

  static Activation parse(const std::string& name, double slope = 0.5) {
    if (name == "sigmoid") return {Kind::kSigmoid, 0.0};
    if (name == "tanh") return {Kind::kTanh, 0.0};
    if (name == "leaky_relu") return {Kind::kLeakyRelu, slope};
    throw ArgumentError("unknown activation '" + name + "'");
  }
};

inline Var activation(const Activation& act, const Var& x) {
  switch (act.kind) {
    case Activation::Kind::kSigmoid: return sigmoid(x);
    case Activation::Kind::kTanh: return tanh(x);
    case Activation::Kind::kLeakyRelu: return leaky_relu(x, act.slope);
  }
  throw ArgumentError("unknown activation kind");
}

/// Softmax over every entry of `scores`, which is the whole normalization set.
inline Var masked_softmax(const Var& scores) {
  const auto& s = scores.value();
  if (s.empty()) throw ArgumentError("masked_softmax: empty index set");
  const double shift = *std::max_element(s.values().begin(), s.values().end());
  std::vector<double> out(s.size());
  double total = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    out[k] = std::exp(s[k] - shift);
    total += out[k];
  }
  for (auto& v : out) v /= total;
  return scores.tape().push(Op::kSoftmax, {scores.id()}, Tensor::vector(std::move(out)));
}

/// Scalar view of entry `k` of a vector.
inline Var element(const Var& v, std::size_t k) {
  if (k >= v.size()) {
    throw IndexError("element: index " + std::to_string(k) + " out of range for shape " +
                     shape_string(v.shape()));
  }
  return v.tape().push(Op::kElement, {v.id()}, Tensor::scalar(v.value()[k]), 0.0, k);
}

/// Vector times a scalar node.
inline Var scale(const Var& v, const Var& s) {
  auto& tape = detail::same_tape(v, s);
  if (s.size() != 1) throw ShapeError("scale: factor must be a scalar, got " + shape_string(s.shape()));
  Tensor out = v.value();
  const double f = s.value()[0];
  for (auto& x : out.values()) x *= f;
  return tape.push(Op::kScale, {v.id(), s.id()}, std::move(out));
}

inline Var scale(const Var& v, double factor) {
  Tensor out = v.value();
  for (auto& x : out.values()) x *= factor;
  return v.tape().push(Op::kScaleConst, {v.id()}, std::move(out), factor);
}

inline Var sum(const Var& v) {
  double acc = 0.0;
  for (double x : v.value().values()) acc += x;
  return v.tape().push(Op::kSum, {v.id()}, Tensor::scalar(acc));
}

inline Var dot(const Var& x, const Var& y) {
  auto& tape = detail::same_tape(x, y);
  if (x.size() != y.size()) {
    throw ShapeError("dot: shapes " + shape_string(x.shape()) + " and " +
                     shape_string(y.shape()) + " differ");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) acc += x.value()[k] * y.value()[k];
  return tape.push(Op::kDot, {x.id(), y.id()}, Tensor::scalar(acc));
}

/// Sum of equally-shaped tensors, accumulated left to right.
inline Var add_n(std::span<const Var> terms) {
  if (terms.empty()) throw ArgumentError("add_n: empty list of terms");
  auto& tape = terms.front().tape();
  Tensor out = terms.front().value();
  std::vector<std::size_t> ids{terms.front().id()};
  for (std::size_t t = 1; t < terms.size(); ++t) {
    const auto& v = terms[t].value();
    if (&terms[t].tape() != &tape) throw ArgumentError("add_n: terms recorded on different tapes");
    if (!v.same_shape(out)) {
      throw ShapeError("add_n: shapes " + shape_string(out.shape()) + " and " +
                       shape_string(v.shape()) + " differ");
    }
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += v[k];
    ids.push_back(terms[t].id());
  }
  return tape.push(Op::kAddN, std::move(ids), std::move(out));
}

/// Sum of absolute values; the derivative at 0 is taken as 0.
inline Var abs_sum(const Var& v) {
  double acc = 0.0;
  for (double x : v.value().values()) acc += std::abs(x);
  return v.tape().push(Op::kAbsSum, {v.id()}, Tensor::scalar(acc));
}

/// Frobenius norm. The backward pass divides by max(norm, guard) so the
/// gradient at the origin is zero instead of NaN.
inline Var fro_norm(const Var& v, double guard) {
  if (!(guard > 0.0)) throw ArgumentError("fro_norm: guard must be positive");
  double acc = 0.0;
  for (double x : v.value().values()) acc += x * x;
  return v.tape().push(Op::kFroNorm, {v.id()}, Tensor::scalar(std::sqrt(acc)), guard);
}

inline void GradientTape::backward(Var loss) {
  if (&loss.tape() != this) throw ArgumentError("backward: loss belongs to another tape");
  if (loss.size() != 1) {
    throw ArgumentError("backward: loss must be scalar, got shape " + shape_string(loss.shape()));
  }
  grads_.assign(nodes_.size(), Tensor{});
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    if (nodes_[id].op == Op::kVariable) grad_slot(id);
  }
  grad_slot(loss.id())[0] = 1.0;

  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    const Node& n = nodes_[id];
    if (!n.tracked || grads_[id].empty()) continue;
    const Tensor& g = grads_[id];
    const Tensor& y = n.value;
    switch (n.op) {
      case Op::kConstant:
      case Op::kVariable:
        break;
      case Op::kMatVec: {
        const auto& a = nodes_[n.inputs[0]].value;
        const auto& x = nodes_[n.inputs[1]].value;
        const std::size_t rows = a.shape()[0];
        const std::size_t cols = a.shape()[1];
        if (nodes_[n.inputs[0]].tracked) {
          auto& ga = grad_slot(n.inputs[0]);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += g[r] * x[c];
        }
        if (nodes_[n.inputs[1]].tracked) {
          auto& gx = grad_slot(n.inputs[1]);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) gx[c] += a[r * cols + c] * g[r];
        }
        break;
      }
      case Op::kHadamard: {
        const auto& a = nodes_[n.inputs[0]].value;
        const auto& b = nodes_[n.inputs[1]].value;
        if (nodes_[n.inputs[0]].tracked) {
          auto& ga = grad_slot(n.inputs[0]);
          for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * b[k];
        }
        if (nodes_[n.inputs[1]].tracked) {
          auto& gb = grad_slot(n.inputs[1]);
          for (std::size_t k = 0; k < g.size(); ++k) gb[k] += g[k] * a[k];
        }
        break;
      }
      case Op::kAdd:
      case Op::kSub: {
        const double sign = n.op == Op::kAdd ? 1.0 : -1.0;
        if (nodes_[n.inputs[0]].tracked) {
          auto& ga = grad_slot(n.inputs[0]);
          for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
        }
        if (nodes_[n.inputs[1]].tracked) {
          auto& gb = grad_slot(n.inputs[1]);
          for (std::size_t k = 0; k < g.size(); ++k) gb[k] += sign * g[k];
        }
        break;
      }
      case Op::kOneMinus: {
        auto& ga = grad_slot(n.inputs[0]);
        for (std::size_t k = 0; k < g.size(); ++k) ga[k] -= g[k];
        break;
      }
      case Op::kConcat: {
        std::size_t offset = 0;
        for (auto in : n.inputs) {
          const std::size_t len = nodes_[in].value.size();
          if (nodes_[in].tracked) {
            auto& gi = grad_slot(in);
            for (std::size_t k = 0; k < len; ++k) gi[k] += g[offset + k];
          }
          offset += len;
        }
        break;
      }
      case Op::kSigmoid: {
        auto& ga = grad_slot(n.inputs[0]);
        for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * y[k] * (1.0 - y[k]);
        break;
      }
      case Op::kTanh: {
        auto& ga = grad_slot(n.inputs[0]);
        for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * (1.0 - y[k] * y[k]);
        break;
      }
      case Op::kLeakyRelu: {
        const auto& x = nodes_[n.inputs[0]].value;
        auto& ga = grad_slot(n.inputs[0]);
        for (std::size_t k = 0; k < g.size(); ++k) ga[k] += x[k] >= 0.0 ? g[k] : n.param * g[k];
        break;
      }
      case Op::kSoftmax: {
        double inner = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) inner += g[k] * y[k];
        auto& ga = grad_slot(n.inputs[0]);
        for (std::size_t k = 0; k < g.size(); ++k) ga[k] += y[k] * (g[k] - inner);
        break;
      }
      case Op::kElement: {
        grad_slot(n.inputs[0])[n.index] += g[0];
        break;
      }
      case Op::kScale: {
        const auto& v = nodes_[n.inputs[0]].value;
        const double f = nodes_[n.inputs[1]].value[0];
        if (nodes_[n.inputs[0]].tracked) {
          auto& gv = grad_slot(n.inputs[0]);
          for (std::size_t k = 0; k < g.size(); ++k) gv[k] += g[k] * f;
        }
        if (nodes_[n.inputs[1]].tracked) {
          double acc = 0.0;
          for (std::size_t k = 0; k < g.size(); ++k) acc += g[k] * v[k];
          grad_slot(n.inputs[1])[0] += acc;
        }
        break;
      }
      case Op::kScaleConst: {
        auto& gv = grad_slot(n.inputs[0]);
        for (std::size_t k = 0; k < g.size(); ++k) gv[k] += g[k] * n.param;
        break;
      }
      case Op::kSum: {
        auto& gv = grad_slot(n.inputs[0]);
        for (std::size_t k = 0; k < gv.size(); ++k) gv[k] += g[0];
        break;
      }
      case Op::kDot: {
        const auto& a = nodes_[n.inputs[0]].value;
        const auto& b = nodes_[n.inputs[1]].value;
        if (nodes_[n.inputs[0]].tracked) {
          auto& ga = grad_slot(n.inputs[0]);
          for (std::size_t k = 0; k < a.size(); ++k) ga[k] += g[0] * b[k];
        }
        if (nodes_[n.inputs[1]].tracked) {
          auto& gb = grad_slot(n.inputs[1]);
          for (std::size_t k = 0; k < b.size(); ++k) gb[k] += g[0] * a[k];
        }
        break;
      }
      case Op::kAddN: {
        for (auto in : n.inputs) {
          if (!nodes_[in].tracked) continue;
          auto& gi = grad_slot(in);
          for (std::size_t k = 0; k < g.size(); ++k) gi[k] += g[k];
        }
        break;
      }
      case Op::kAbsSum: {
        const auto& v = nodes_[n.inputs[0]].value;
        auto& gv = grad_slot(n.inputs[0]);
        for (std::size_t k = 0; k < v.size(); ++k) {
          const double s = v[k] > 0.0 ? 1.0 : (v[k] < 0.0 ? -1.0 : 0.0);
          gv[k] += g[0] * s;
        }
        break;
      }
      case Op::kFroNorm: {
        const auto& v = nodes_[n.inputs[0]].value;
        const double denom = std::max(y[0], n.param);
        auto& gv = grad_slot(n.inputs[0]);
        for (std::size_t k = 0; k < v.size(); ++k) gv[k] += g[0] * v[k] / denom;
        break;
      }
    }
  }
}

}  // namespace gnl
