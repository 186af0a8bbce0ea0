// crstc/tensor.hpp

// Copyright 2026 CRSTC Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Dense 2-d tensors (double precision) with define-by-run reverse-mode
// automatic differentiation. A graph is built implicitly while operating on
// tensors that require gradients and is consumed (freed) by backward().
// Scalars are 1x1 tensors. Elementwise binary ops broadcast only
// scalar-with-tensor.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace crstc {

namespace detail {

struct TensorNode {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::vector<double> grad;  // allocated iff requires_grad
  bool requires_grad = false;
  bool consumed = false;  // backward already ran through this node
  const char* op = "leaf";
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Accumulates into the parents' grad using this->grad.
  std::function<void(const TensorNode&)> backprop;

  std::size_t size() const { return rows * cols; }
  bool is_leaf() const { return !backprop; }
};

using NodePtr = std::shared_ptr<TensorNode>;

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0,
         bool requires_grad = false) {
    if (rows == 0 || cols == 0)
      throw std::invalid_argument("Tensor: dimensions must be positive");
    node_ = std::make_shared<detail::TensorNode>();
    node_->rows = rows;
    node_->cols = cols;
    node_->values.assign(rows * cols, fill);
    node_->requires_grad = requires_grad;
    if (requires_grad) node_->grad.assign(rows * cols, 0.0);
  }

  static Tensor scalar(double v, bool requires_grad = false) {
    Tensor t(1, 1, v, requires_grad);
    return t;
  }

  static Tensor from_values(std::size_t rows, std::size_t cols,
                            std::vector<double> values,
                            bool requires_grad = false) {
    if (values.size() != rows * cols)
      throw std::invalid_argument("Tensor::from_values: size mismatch");
    Tensor t(rows, cols, 0.0, requires_grad);
    t.node_->values = std::move(values);
    return t;
  }

  bool defined() const { return node_ != nullptr; }
  std::size_t rows() const { return node_->rows; }
  std::size_t cols() const { return node_->cols; }
  std::size_t size() const { return node_->size(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool is_scalar() const { return rows() == 1 && cols() == 1; }

  double at(std::size_t r, std::size_t c) const {
    return node_->values[r * cols() + c];
  }
  void set(std::size_t r, std::size_t c, double v) {
    node_->values[r * cols() + c] = v;
  }

  double item() const {
    if (!is_scalar()) throw std::invalid_argument("Tensor::item: not a scalar");
    return node_->values[0];
  }

  const std::vector<double>& values() const { return node_->values; }
  std::vector<double>& mutable_values() { return node_->values; }

  const std::vector<double>& grad() const {
    if (!node_->requires_grad)
      throw std::logic_error("Tensor::grad: tensor does not require grad");
    return node_->grad;
  }
  std::vector<double>& mutable_grad() {
    if (!node_->requires_grad)
      throw std::logic_error("Tensor::grad: tensor does not require grad");
    return node_->grad;
  }

  void zero_grad() {
    if (node_->requires_grad)
      std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
  }

  /// Value copy detached from any graph; never requires grad.
  Tensor detach() const {
    Tensor t(rows(), cols());
    t.node_->values = node_->values;
    return t;
  }

  bool all_finite() const {
    for (double v : node_->values)
      if (!std::isfinite(v)) return false;
    return true;
  }

  detail::NodePtr node() const { return node_; }

 private:
  detail::NodePtr node_;
};

namespace detail {

inline Tensor make_result(std::size_t rows, std::size_t cols,
                          bool requires_grad, const char* op) {
  Tensor t(rows, cols, 0.0, requires_grad);
  t.node()->op = op;
  return t;
}

inline void attach(Tensor& out, std::initializer_list<Tensor> inputs,
                   std::function<void(const TensorNode&)> backprop) {
  if (!out.requires_grad()) return;
  for (const Tensor& in : inputs) out.node()->parents.push_back(in.node());
  out.node()->backprop = std::move(backprop);
}

inline bool any_requires_grad(std::initializer_list<Tensor> ts) {
  for (const Tensor& t : ts)
    if (t.requires_grad()) return true;
  return false;
}

inline void check_same_shape(const Tensor& a, const Tensor& b,
                             const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" +
                                std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
}

// Elementwise binary op with scalar-with-tensor broadcast.
template <typename Fwd, typename DGa, typename DGb>
Tensor ew_binary(const Tensor& a, const Tensor& b, const char* op, Fwd fwd,
                 DGa dga, DGb dgb) {
  const bool a_scalar = a.is_scalar();
  const bool b_scalar = b.is_scalar();
  if (!a_scalar && !b_scalar) check_same_shape(a, b, op);
  const Tensor& shape_src = a_scalar ? b : a;
  Tensor out = make_result(shape_src.rows(), shape_src.cols(),
                           any_requires_grad({a, b}), op);
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& ov = out.mutable_values();
  for (std::size_t i = 0; i < ov.size(); ++i)
    ov[i] = fwd(av[a_scalar ? 0 : i], bv[b_scalar ? 0 : i]);
  if (out.requires_grad()) {
    auto an = a.node();
    auto bn = b.node();
    attach(out, {a, b}, [an, bn, a_scalar, b_scalar, dga, dgb](
                            const TensorNode& self) {
      const std::size_t n = self.size();
      if (an->requires_grad) {
        for (std::size_t i = 0; i < n; ++i) {
          const double g = self.grad[i] *
                           dga(an->values[a_scalar ? 0 : i],
                               bn->values[b_scalar ? 0 : i]);
          an->grad[a_scalar ? 0 : i] += g;
        }
      }
      if (bn->requires_grad) {
        for (std::size_t i = 0; i < n; ++i) {
          const double g = self.grad[i] *
                           dgb(an->values[a_scalar ? 0 : i],
                               bn->values[b_scalar ? 0 : i]);
          bn->grad[b_scalar ? 0 : i] += g;
        }
      }
    });
  }
  return out;
}

// Elementwise unary op; derivative receives (input, output).
template <typename Fwd, typename Deriv>
Tensor ew_unary(const Tensor& a, const char* op, Fwd fwd, Deriv deriv) {
  Tensor out = make_result(a.rows(), a.cols(), a.requires_grad(), op);
  const auto& av = a.values();
  auto& ov = out.mutable_values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = fwd(av[i]);
  if (out.requires_grad()) {
    auto an = a.node();
    attach(out, {a}, [an, deriv](const TensorNode& self) {
      for (std::size_t i = 0; i < self.size(); ++i)
        an->grad[i] += self.grad[i] * deriv(an->values[i], self.values[i]);
    });
  }
  return out;
}

}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
  return detail::ew_binary(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  return detail::ew_binary(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  return detail::ew_binary(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

inline Tensor add(const Tensor& a, double c) { return add(a, Tensor::scalar(c)); }
inline Tensor sub(const Tensor& a, double c) { return sub(a, Tensor::scalar(c)); }
inline Tensor mul(const Tensor& a, double c) { return mul(a, Tensor::scalar(c)); }

inline Tensor exp(const Tensor& a) {
  return detail::ew_unary(
      a, "exp", [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

inline Tensor log(const Tensor& a) {
  for (double v : a.values())
    if (v <= 0.0)
      throw std::domain_error("log: input must be strictly positive");
  return detail::ew_unary(
      a, "log", [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

inline Tensor tanh(const Tensor& a) {
  return detail::ew_unary(
      a, "tanh", [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

inline Tensor sigmoid(const Tensor& a) {
  return detail::ew_unary(
      a, "sigmoid",
      [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

inline Tensor leaky_relu(const Tensor& a, double slope) {
  return detail::ew_unary(
      a, "leaky_relu",
      [slope](double x) { return x >= 0.0 ? x : slope * x; },
      [slope](double x, double) { return x >= 0.0 ? 1.0 : slope; });
}

inline Tensor square(const Tensor& a) {
  return detail::ew_unary(
      a, "square", [](double x) { return x * x; },
      [](double x, double) { return 2.0 * x; });
}

inline Tensor abs(const Tensor& a) {
  return detail::ew_unary(
      a, "abs", [](double x) { return std::fabs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

/// Hard clamp; gradient passes only through the interior.
inline Tensor clamp(const Tensor& a, double lo, double hi) {
  return detail::ew_unary(
      a, "clamp",
      [lo, hi](double x) { return std::min(hi, std::max(lo, x)); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: inner dimensions differ (" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + ")");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out =
      detail::make_result(m, n, detail::any_requires_grad({a, b}), "matmul");
  {
    const double* A = a.values().data();
    const double* B = b.values().data();
    double* C = out.mutable_values().data();
    for (std::size_t i = 0; i < m; ++i) {
      double* Ci = C + i * n;
      const double* Ai = A + i * k;
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = Ai[p];
        const double* Bp = B + p * n;
        for (std::size_t j = 0; j < n; ++j) Ci[j] += aip * Bp[j];
      }
    }
  }
  if (out.requires_grad()) {
    auto an = a.node();
    auto bn = b.node();
    detail::attach(out, {a, b}, [an, bn, m, k, n](const detail::TensorNode& self) {
      const double* G = self.grad.data();
      if (an->requires_grad) {
        // dA = dC * B^T
        const double* B = bn->values.data();
        double* dA = an->grad.data();
        for (std::size_t i = 0; i < m; ++i) {
          const double* Gi = G + i * n;
          double* dAi = dA + i * k;
          for (std::size_t p = 0; p < k; ++p) {
            const double* Bp = B + p * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += Gi[j] * Bp[j];
            dAi[p] += acc;
          }
        }
      }
      if (bn->requires_grad) {
        // dB = A^T * dC
        const double* A = an->values.data();
        double* dB = bn->grad.data();
        for (std::size_t i = 0; i < m; ++i) {
          const double* Ai = A + i * k;
          const double* Gi = G + i * n;
          for (std::size_t p = 0; p < k; ++p) {
            const double aip = Ai[p];
            double* dBp = dB + p * n;
            for (std::size_t j = 0; j < n; ++j) dBp[j] += aip * Gi[j];
          }
        }
      }
    });
  }
  return out;
}

/// Adds a 1 x n bias row to every row of an m x n matrix.
inline Tensor add_row_bias(const Tensor& m, const Tensor& bias) {
  if (bias.rows() != 1 || bias.cols() != m.cols())
    throw std::invalid_argument("add_row_bias: bias must be 1 x cols");
  Tensor out = detail::make_result(
      m.rows(), m.cols(), detail::any_requires_grad({m, bias}), "add_row_bias");
  const auto& mv = m.values();
  const auto& bv = bias.values();
  auto& ov = out.mutable_values();
  const std::size_t cols = m.cols();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = mv[i] + bv[i % cols];
  if (out.requires_grad()) {
    auto mn = m.node();
    auto bn = bias.node();
    detail::attach(out, {m, bias}, [mn, bn, cols](const detail::TensorNode& self) {
      if (mn->requires_grad)
        for (std::size_t i = 0; i < self.size(); ++i) mn->grad[i] += self.grad[i];
      if (bn->requires_grad)
        for (std::size_t i = 0; i < self.size(); ++i)
          bn->grad[i % cols] += self.grad[i];
    });
  }
  return out;
}

inline Tensor sum(const Tensor& a) {
  Tensor out = detail::make_result(1, 1, a.requires_grad(), "sum");
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  out.mutable_values()[0] = acc;
  if (out.requires_grad()) {
    auto an = a.node();
    detail::attach(out, {a}, [an](const detail::TensorNode& self) {
      const double g = self.grad[0];
      for (double& d : an->grad) d += g;
    });
  }
  return out;
}

inline Tensor mean(const Tensor& a) {
  Tensor out = detail::make_result(1, 1, a.requires_grad(), "mean");
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  const double inv_n = 1.0 / static_cast<double>(a.size());
  out.mutable_values()[0] = acc * inv_n;
  if (out.requires_grad()) {
    auto an = a.node();
    detail::attach(out, {a}, [an, inv_n](const detail::TensorNode& self) {
      const double g = self.grad[0] * inv_n;
      for (double& d : an->grad) d += g;
    });
  }
  return out;
}

inline Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows())
    throw std::invalid_argument("concat_cols: row count mismatch");
  const std::size_t rows = a.rows(), ac = a.cols(), bc = b.cols();
  Tensor out = detail::make_result(rows, ac + bc,
                                   detail::any_requires_grad({a, b}), "concat");
  auto& ov = out.mutable_values();
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(av.begin() + r * ac, ac, ov.begin() + r * (ac + bc));
    std::copy_n(bv.begin() + r * bc, bc, ov.begin() + r * (ac + bc) + ac);
  }
  if (out.requires_grad()) {
    auto an = a.node();
    auto bn = b.node();
    detail::attach(out, {a, b}, [an, bn, rows, ac, bc](const detail::TensorNode& self) {
      for (std::size_t r = 0; r < rows; ++r) {
        if (an->requires_grad)
          for (std::size_t c = 0; c < ac; ++c)
            an->grad[r * ac + c] += self.grad[r * (ac + bc) + c];
        if (bn->requires_grad)
          for (std::size_t c = 0; c < bc; ++c)
            bn->grad[r * bc + c] += self.grad[r * (ac + bc) + ac + c];
      }
    });
  }
  return out;
}

inline Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1) {
  if (r0 >= r1 || r1 > a.rows())
    throw std::invalid_argument("slice_rows: bad range");
  const std::size_t cols = a.cols();
  Tensor out =
      detail::make_result(r1 - r0, cols, a.requires_grad(), "slice_rows");
  std::copy_n(a.values().begin() + r0 * cols, (r1 - r0) * cols,
              out.mutable_values().begin());
  if (out.requires_grad()) {
    auto an = a.node();
    detail::attach(out, {a}, [an, r0, cols](const detail::TensorNode& self) {
      for (std::size_t i = 0; i < self.size(); ++i)
        an->grad[r0 * cols + i] += self.grad[i];
    });
  }
  return out;
}

inline Tensor slice_cols(const Tensor& a, std::size_t c0, std::size_t c1) {
  if (c0 >= c1 || c1 > a.cols())
    throw std::invalid_argument("slice_cols: bad range");
  const std::size_t rows = a.rows(), cols = a.cols(), w = c1 - c0;
  Tensor out = detail::make_result(rows, w, a.requires_grad(), "slice_cols");
  auto& ov = out.mutable_values();
  const auto& av = a.values();
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(av.begin() + r * cols + c0, w, ov.begin() + r * w);
  if (out.requires_grad()) {
    auto an = a.node();
    detail::attach(out, {a}, [an, rows, cols, c0, w](const detail::TensorNode& self) {
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < w; ++c)
          an->grad[r * cols + c0 + c] += self.grad[r * w + c];
    });
  }
  return out;
}

/// Runs reverse-mode accumulation from a scalar loss, then frees the graph.
/// Gradients accumulate (+=) into every reachable requires_grad tensor.
inline void backward(const Tensor& loss) {
  if (!loss.is_scalar())
    throw std::invalid_argument("backward: loss must be a scalar tensor");
  auto root = loss.node();
  if (!root->requires_grad)
    throw std::invalid_argument("backward: loss does not require grad");
  if (root->consumed)
    throw std::runtime_error("backward: graph already consumed");

  // Iterative DFS post-order: every node appears after all of its parents.
  std::vector<detail::TensorNode*> order;
  std::unordered_set<detail::TensorNode*> visited;
  struct Frame {
    detail::TensorNode* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({root.get(), 0});
  visited.insert(root.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      detail::TensorNode* p = f.node->parents[f.next_parent++].get();
      if (visited.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backprop) (*it)->backprop(**it);

  // Free the graph; leaves stay usable for the next forward pass.
  for (detail::TensorNode* n : order) {
    if (n->backprop) {
      n->backprop = nullptr;
      n->parents.clear();
      n->consumed = true;
    }
  }
}

}  // namespace crstc
