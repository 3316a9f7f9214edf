// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

// Dense float64 tensors with reverse-mode automatic differentiation.
//
// Every op returns a new Tensor. When grad mode is on and at least one input
// requires a gradient, the result keeps shared references to its inputs and a
// closure that propagates its gradient back to them. The graph is released
// together with the last handle that reaches it, so a training step simply
// builds a fresh graph, calls backward() on the scalar loss and drops it.
// Leaves (parameters) accumulate gradients across backward() calls until
// zeroed; interior nodes are reset at the start of each backward().

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace scfc {

class Rng;

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a backward pass reaches the node
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
  std::uint64_t id = 0;
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  std::size_t dim(std::size_t axis) const;

  std::span<const double> data() const;
  // Writable view for optimizers and gradient checks; never used by ops.
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t i) const;
  double at(std::size_t row, std::size_t col) const;
  std::vector<double> to_vector() const;

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();
  void clear_grad();

  std::uint64_t tape_id() const;

  // Reverse sweep from this scalar; populates grads of every reachable
  // tensor that requires one.
  void backward() const;

  // A copy of the values with no history.
  Tensor detach() const;

  detail::Node* node() const noexcept { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const noexcept { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

// Grad mode is per thread. With it off, ops compute values only.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

using BackwardFn = std::function<void(detail::Node& self)>;

// Building block for ops: wraps a computed value and, when recording, wires
// it to its inputs. `op` names the operation in numeric-error messages.
Tensor record(const char* op, Shape shape, std::vector<double> value,
              const std::vector<Tensor>& inputs, BackwardFn backward);

// Adds `g` into the gradient buffer of `parent` if it participates.
inline void accumulate(detail::Node& parent, std::size_t index, double g) {
  if (!parent.grad.empty()) parent.grad[index] += g;
}

// Sum that does not depend on the order of its terms: the terms are sorted
// before accumulation, so any permutation gives a bit-identical result.
double order_invariant_sum(std::vector<double> terms);

namespace ops {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);

// 2-D x 2-D, or 2-D x 1-D.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);

Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);

Tensor softmax(const Tensor& x);
Tensor log_softmax(const Tensor& x);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor dot(const Tensor& a, const Tensor& b);

Tensor concat(const std::vector<Tensor>& parts);
Tensor slice(const Tensor& x, std::size_t offset, std::size_t length);
Tensor pick(const Tensor& a, std::size_t index);

// Embedding lookup: rows of `table` at `ids`.
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids);
Tensor row(const Tensor& m, std::size_t index);
Tensor stack_rows(const std::vector<Tensor>& rows);

// m[i][j] * v[j]
Tensor mul_rows(const Tensor& m, const Tensor& v);
// m[i][j] + v[j]
Tensor add_rows(const Tensor& m, const Tensor& v);
// Σ_j m[i][j]
Tensor row_sums(const Tensor& m);
// (1/n) Σ_i m[i][:], order-invariant over rows.
Tensor mean_rows(const Tensor& m);
// Σ_i w[i] · m[i][:], order-invariant over rows.
Tensor weighted_rows(const Tensor& w, const Tensor& m);

// Inverted dropout with a seeded mask; identity when rate == 0.
Tensor dropout(const Tensor& x, double rate, Rng& rng);

}  // namespace ops
}  // namespace scfc
