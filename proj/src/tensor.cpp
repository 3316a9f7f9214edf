// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "scfc/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "scfc/error.hpp"
#include "scfc/random.hpp"

namespace scfc {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Contract: return "contract";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Internal: return "internal";
    case ErrorKind::Io: return "io";
    case ErrorKind::BadMagic: return "bad-magic";
    case ErrorKind::Truncated: return "truncated";
    case ErrorKind::SizeMismatch: return "size-mismatch";
    case ErrorKind::Version: return "version";
    case ErrorKind::Fingerprint: return "fingerprint";
    case ErrorKind::MissingParameter: return "missing-parameter";
    case ErrorKind::ShapeMismatch: return "shape-mismatch";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::IdMismatch: return "id-mismatch";
  }
  return "unknown";
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

namespace {

std::atomic<std::uint64_t> next_id{1};
thread_local bool grad_mode = true;

std::shared_ptr<detail::Node> make_node(Shape shape, std::vector<double> value, bool requires_grad) {
  for (std::size_t d : shape) require(d > 0, "tensor dims must be positive, got " + shape_string(shape));
  require_dims(shape_size(shape) == value.size(),
               "shape " + shape_string(shape) + " does not match " + std::to_string(value.size()) + " values");
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  node->id = next_id.fetch_add(1, std::memory_order_relaxed);
  return node;
}

const detail::Node& checked(const Tensor& t) {
  if (!t.defined()) fail(ErrorKind::Contract, "use of an undefined tensor");
  return *t.node();
}

}  // namespace

bool grad_enabled() { return grad_mode; }

NoGradGuard::NoGradGuard() : previous_(grad_mode) { grad_mode = false; }
NoGradGuard::~NoGradGuard() { grad_mode = previous_; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  return Tensor(make_node(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  return Tensor(make_node(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  return Tensor(make_node(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(make_node({1}, {value}, requires_grad));
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  const std::size_t n = values.size();
  return Tensor(make_node({n}, std::move(values), requires_grad));
}

const Shape& Tensor::shape() const { return checked(*this).shape; }
std::size_t Tensor::size() const { return checked(*this).value.size(); }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  require(axis < s.size(), "axis out of range");
  return s[axis];
}

std::span<const double> Tensor::data() const { return checked(*this).value; }
std::span<double> Tensor::mutable_data() {
  checked(*this);
  return node_->value;
}

double Tensor::item() const {
  const auto& n = checked(*this);
  require(n.value.size() == 1, "item() on a tensor with " + std::to_string(n.value.size()) + " elements");
  return n.value[0];
}

double Tensor::at(std::size_t i) const {
  const auto& n = checked(*this);
  require(i < n.value.size(), "index out of range");
  return n.value[i];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  const auto& n = checked(*this);
  require(n.shape.size() == 2 && r < n.shape[0] && c < n.shape[1], "matrix index out of range");
  return n.value[r * n.shape[1] + c];
}

std::vector<double> Tensor::to_vector() const { return checked(*this).value; }

bool Tensor::requires_grad() const { return checked(*this).requires_grad; }
bool Tensor::has_grad() const { return !checked(*this).grad.empty(); }
std::span<const double> Tensor::grad() const { return checked(*this).grad; }
std::span<double> Tensor::mutable_grad() {
  checked(*this);
  return node_->grad;
}

void Tensor::zero_grad() {
  checked(*this);
  node_->grad.assign(node_->value.size(), 0.0);
}

void Tensor::clear_grad() {
  checked(*this);
  node_->grad.clear();
}

std::uint64_t Tensor::tape_id() const { return checked(*this).id; }

Tensor Tensor::detach() const {
  const auto& n = checked(*this);
  return Tensor(make_node(n.shape, n.value, false));
}

void Tensor::backward() const {
  const auto& root = checked(*this);
  require(root.value.size() == 1, "backward() needs a scalar root, got " + shape_string(root.shape));
  if (!root.requires_grad) return;

  // Iterative post-order DFS; a node seen again while still on the stack
  // means the tape has a cycle.
  enum class Mark : unsigned char { Active, Done };
  std::unordered_map<const detail::Node*, Mark> marks;
  std::vector<detail::Node*> order;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  marks[node_.get()] = Mark::Active;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (!parent->requires_grad) continue;
      auto it = marks.find(parent);
      if (it == marks.end()) {
        marks.emplace(parent, Mark::Active);
        stack.emplace_back(parent, 0);
      } else if (it->second == Mark::Active) {
        fail(ErrorKind::Internal, "cycle detected in autodiff tape");
      }
    } else {
      marks[node] = Mark::Done;
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (detail::Node* n : order) {
    if (n->backward) {
      n->grad.assign(n->value.size(), 0.0);
    } else if (n->grad.size() != n->value.size()) {
      n->grad.assign(n->value.size(), 0.0);
    }
  }
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

Tensor record(const char* op, Shape shape, std::vector<double> value,
              const std::vector<Tensor>& inputs, BackwardFn backward) {
  for (double v : value) {
    if (!std::isfinite(v)) fail(ErrorKind::Numeric, std::string(op) + ": non-finite result");
  }
  bool track = false;
  if (grad_mode) {
    for (const auto& in : inputs) track = track || checked(in).requires_grad;
  }
  auto node = make_node(std::move(shape), std::move(value), track);
  if (track) {
    node->parents.reserve(inputs.size());
    for (const auto& in : inputs) node->parents.push_back(in.node_ptr());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

double order_invariant_sum(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end());
  double total = 0.0;
  for (double t : terms) total += t;
  return total;
}

namespace ops {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require_dims(a.shape() == b.shape(), std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                                           " vs " + shape_string(b.shape()));
}

void require_finite_input(const Tensor& x, const char* op) {
  for (double v : x.data()) {
    if (!std::isfinite(v)) fail(ErrorKind::Numeric, std::string(op) + ": non-finite input");
  }
}

template <class F, class D>
Tensor unary(const char* op, const Tensor& a, F f, D derivative) {
  const auto& in = a.data();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  return record(op, a.shape(), std::move(out), {a}, [derivative](detail::Node& self) {
    auto& p = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      accumulate(p, i, self.grad[i] * derivative(p.value[i], self.value[i]));
    }
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return record("add", a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      accumulate(*self.parents[0], i, self.grad[i]);
      accumulate(*self.parents[1], i, self.grad[i]);
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return record("sub", a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      accumulate(*self.parents[0], i, self.grad[i]);
      accumulate(*self.parents[1], i, -self.grad[i]);
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return record("mul", a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      accumulate(pa, i, self.grad[i] * pb.value[i]);
      accumulate(pb, i, self.grad[i] * pa.value[i]);
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return unary(
      "add_scalar", a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_dims(a.rank() == 2, "matmul: left operand must be a matrix, got " + shape_string(a.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1);
  if (b.rank() == 1) {
    require_dims(b.dim(0) == k, "matmul: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
    const auto A = a.data();
    const auto x = b.data();
    std::vector<double> out(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) acc += A[i * k + j] * x[j];
      out[i] = acc;
    }
    return record("matvec", {m}, std::move(out), {a, b}, [m, k](detail::Node& self) {
      auto& pa = *self.parents[0];
      auto& pb = *self.parents[1];
      for (std::size_t i = 0; i < m; ++i) {
        const double g = self.grad[i];
        if (g == 0.0) continue;
        for (std::size_t j = 0; j < k; ++j) {
          accumulate(pa, i * k + j, g * pb.value[j]);
          accumulate(pb, j, g * pa.value[i * k + j]);
        }
      }
    });
  }
  require_dims(b.rank() == 2 && b.dim(0) == k,
               "matmul: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  const std::size_t n = b.dim(1);
  const auto A = a.data();
  const auto B = b.data();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t l = 0; l < k; ++l) acc += A[i * k + l] * B[l * n + j];
      out[i * n + j] = acc;
    }
  }
  return record("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double g = self.grad[i * n + j];
        if (g == 0.0) continue;
        for (std::size_t l = 0; l < k; ++l) {
          accumulate(pa, i * k + l, g * pb.value[l * n + j]);
          accumulate(pb, l * n + j, g * pa.value[i * k + l]);
        }
      }
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_dims(a.rank() == 2, "transpose: expected a matrix");
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<double> out(r * c);
  const auto A = a.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = A[i * c + j];
  return record("transpose", {c, r}, std::move(out), {a}, [r, c](detail::Node& self) {
    auto& p = *self.parents[0];
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) accumulate(p, i * c + j, self.grad[j * r + i]);
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  require_dims(shape_size(shape) == a.size(), "reshape: size mismatch");
  return record("reshape", std::move(shape), a.to_vector(), {a}, [](detail::Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) accumulate(*self.parents[0], i, self.grad[i]);
  });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& a) {
  return unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& a) {
  return unary(
      "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  for (double v : a.data()) {
    if (!(v > 0.0)) fail(ErrorKind::Numeric, "log: input must be positive");
  }
  return unary(
      "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor softmax(const Tensor& x) {
  require_dims(x.rank() == 1 && x.size() >= 1, "softmax: expected a non-empty vector");
  require_finite_input(x, "softmax");
  const auto in = x.data();
  const double top = *std::max_element(in.begin(), in.end());
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::exp(in[i] - top);
  const double z = order_invariant_sum(out);
  for (double& v : out) v /= z;
  return record("softmax", x.shape(), std::move(out), {x}, [](detail::Node& self) {
    double inner = 0.0;
    for (std::size_t i = 0; i < self.grad.size(); ++i) inner += self.grad[i] * self.value[i];
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      accumulate(*self.parents[0], i, self.value[i] * (self.grad[i] - inner));
  });
}

Tensor log_softmax(const Tensor& x) {
  require_dims(x.rank() == 1 && x.size() >= 1, "log_softmax: expected a non-empty vector");
  require_finite_input(x, "log_softmax");
  const auto in = x.data();
  const double top = *std::max_element(in.begin(), in.end());
  std::vector<double> shifted(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) shifted[i] = std::exp(in[i] - top);
  const double log_z = top + std::log(order_invariant_sum(shifted));
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] - log_z;
  return record("log_softmax", x.shape(), std::move(out), {x}, [](detail::Node& self) {
    double total = 0.0;
    for (double g : self.grad) total += g;
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      accumulate(*self.parents[0], i, self.grad[i] - std::exp(self.value[i]) * total);
  });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return record("sum", {1}, {total}, {a}, [](detail::Node& self) {
    auto& p = *self.parents[0];
    for (std::size_t i = 0; i < p.value.size(); ++i) accumulate(p, i, self.grad[0]);
  });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Tensor dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += a.data()[i] * b.data()[i];
  return record("dot", {1}, {total}, {a, b}, [](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    for (std::size_t i = 0; i < pa.value.size(); ++i) {
      accumulate(pa, i, self.grad[0] * pb.value[i]);
      accumulate(pb, i, self.grad[0] * pa.value[i]);
    }
  });
}

Tensor concat(const std::vector<Tensor>& parts) {
  require(!parts.empty(), "concat: no inputs");
  std::vector<double> out;
  for (const auto& p : parts) {
    require_dims(p.rank() == 1, "concat: inputs must be vectors");
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  const std::size_t n = out.size();
  return record("concat", {n}, std::move(out), parts, [](detail::Node& self) {
    std::size_t offset = 0;
    for (auto& parent : self.parents) {
      for (std::size_t i = 0; i < parent->value.size(); ++i) accumulate(*parent, i, self.grad[offset + i]);
      offset += parent->value.size();
    }
  });
}

Tensor slice(const Tensor& x, std::size_t offset, std::size_t length) {
  require_dims(x.rank() == 1 && offset + length <= x.size() && length > 0, "slice: range out of bounds");
  std::vector<double> out(x.data().begin() + static_cast<std::ptrdiff_t>(offset),
                          x.data().begin() + static_cast<std::ptrdiff_t>(offset + length));
  return record("slice", {length}, std::move(out), {x}, [offset](detail::Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) accumulate(*self.parents[0], offset + i, self.grad[i]);
  });
}

Tensor pick(const Tensor& a, std::size_t index) {
  require(index < a.size(), "pick: index out of range");
  return record("pick", {1}, {a.data()[index]}, {a}, [index](detail::Node& self) {
    accumulate(*self.parents[0], index, self.grad[0]);
  });
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids) {
  require_dims(table.rank() == 2, "gather_rows: expected a matrix");
  require(!ids.empty(), "gather_rows: no ids");
  const std::size_t rows = table.dim(0), cols = table.dim(1);
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  std::vector<double> out;
  out.reserve(idx.size() * cols);
  for (std::size_t id : idx) {
    require(id < rows, "gather_rows: id " + std::to_string(id) + " out of range " + std::to_string(rows));
    auto r = table.data().subspan(id * cols, cols);
    out.insert(out.end(), r.begin(), r.end());
  }
  const std::size_t count = idx.size();
  return record("gather_rows", {count, cols}, std::move(out), {table},
                [idx = std::move(idx), cols](detail::Node& self) {
                  for (std::size_t r = 0; r < idx.size(); ++r)
                    for (std::size_t c = 0; c < cols; ++c)
                      accumulate(*self.parents[0], idx[r] * cols + c, self.grad[r * cols + c]);
                });
}

Tensor row(const Tensor& m, std::size_t index) {
  require_dims(m.rank() == 2, "row: expected a matrix");
  require(index < m.dim(0), "row: index out of range");
  const std::size_t cols = m.dim(1);
  auto r = m.data().subspan(index * cols, cols);
  return record("row", {cols}, std::vector<double>(r.begin(), r.end()), {m},
                [index, cols](detail::Node& self) {
                  for (std::size_t c = 0; c < cols; ++c)
                    accumulate(*self.parents[0], index * cols + c, self.grad[c]);
                });
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  require(!rows.empty(), "stack_rows: no rows");
  const std::size_t cols = rows.front().size();
  std::vector<double> out;
  out.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    require_dims(r.rank() == 1 && r.size() == cols, "stack_rows: ragged rows");
    out.insert(out.end(), r.data().begin(), r.data().end());
  }
  return record("stack_rows", {rows.size(), cols}, std::move(out), rows, [cols](detail::Node& self) {
    for (std::size_t r = 0; r < self.parents.size(); ++r)
      for (std::size_t c = 0; c < cols; ++c) accumulate(*self.parents[r], c, self.grad[r * cols + c]);
  });
}

Tensor mul_rows(const Tensor& m, const Tensor& v) {
  require_dims(m.rank() == 2 && v.rank() == 1 && m.dim(1) == v.dim(0),
               "mul_rows: " + shape_string(m.shape()) + " vs " + shape_string(v.shape()));
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = m.data()[r * cols + c] * v.data()[c];
  return record("mul_rows", m.shape(), std::move(out), {m, v}, [rows, cols](detail::Node& self) {
    auto& pm = *self.parents[0];
    auto& pv = *self.parents[1];
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        const double g = self.grad[r * cols + c];
        accumulate(pm, r * cols + c, g * pv.value[c]);
        accumulate(pv, c, g * pm.value[r * cols + c]);
      }
  });
}

Tensor add_rows(const Tensor& m, const Tensor& v) {
  require_dims(m.rank() == 2 && v.rank() == 1 && m.dim(1) == v.dim(0),
               "add_rows: " + shape_string(m.shape()) + " vs " + shape_string(v.shape()));
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = m.data()[r * cols + c] + v.data()[c];
  return record("add_rows", m.shape(), std::move(out), {m, v}, [rows, cols](detail::Node& self) {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        accumulate(*self.parents[0], r * cols + c, self.grad[r * cols + c]);
        accumulate(*self.parents[1], c, self.grad[r * cols + c]);
      }
  });
}

Tensor row_sums(const Tensor& m) {
  require_dims(m.rank() == 2, "row_sums: expected a matrix");
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  std::vector<double> out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r] += m.data()[r * cols + c];
  return record("row_sums", {rows}, std::move(out), {m}, [rows, cols](detail::Node& self) {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) accumulate(*self.parents[0], r * cols + c, self.grad[r]);
  });
}

Tensor mean_rows(const Tensor& m) {
  require_dims(m.rank() == 2, "mean_rows: expected a matrix");
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  std::vector<double> out(cols);
  std::vector<double> column(rows);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) column[r] = m.data()[r * cols + c];
    out[c] = order_invariant_sum(column) / static_cast<double>(rows);
  }
  return record("mean_rows", {cols}, std::move(out), {m}, [rows, cols](detail::Node& self) {
    const double inv = 1.0 / static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) accumulate(*self.parents[0], r * cols + c, self.grad[c] * inv);
  });
}

Tensor weighted_rows(const Tensor& w, const Tensor& m) {
  require_dims(m.rank() == 2 && w.rank() == 1 && w.dim(0) == m.dim(0),
               "weighted_rows: " + shape_string(w.shape()) + " vs " + shape_string(m.shape()));
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  std::vector<double> out(cols);
  std::vector<double> terms(rows);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) terms[r] = w.data()[r] * m.data()[r * cols + c];
    out[c] = order_invariant_sum(terms);
  }
  return record("weighted_rows", {cols}, std::move(out), {w, m}, [rows, cols](detail::Node& self) {
    auto& pw = *self.parents[0];
    auto& pm = *self.parents[1];
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        accumulate(pw, r, self.grad[c] * pm.value[r * cols + c]);
        accumulate(pm, r * cols + c, self.grad[c] * pw.value[r]);
      }
  });
}

Tensor dropout(const Tensor& x, double rate, Rng& rng) {
  require(rate >= 0.0 && rate < 1.0, "dropout: rate must be in [0, 1)");
  if (rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.size());
  for (double& m : mask) m = rng.uniform() < rate ? 0.0 : keep_scale;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * mask[i];
  return record("dropout", x.shape(), std::move(out), {x}, [mask = std::move(mask)](detail::Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) accumulate(*self.parents[0], i, self.grad[i] * mask[i]);
  });
}

}  // namespace ops
}  // namespace scfc
