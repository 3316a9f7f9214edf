// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "scfc/random.hpp"
#include "scfc/tensor.hpp"

namespace scfc {

// Named trainable tensors. Iteration follows insertion order.
class ParameterStore {
 public:
  // Glorot-uniform matrix, a = sqrt(6 / (fan_in + fan_out)); fan_in is the
  // column count.
  Tensor add_matrix(const std::string& name, std::size_t rows, std::size_t cols, Rng& rng);
  Tensor add_zeros(const std::string& name, Shape shape);
  Tensor add(const std::string& name, Tensor value);

  bool contains(const std::string& name) const;
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::vector<std::pair<std::string, Tensor>>& entries() { return entries_; }

  void zero_grad();
  void clear_grad();

  // Name of the first parameter holding a NaN/Inf value, or empty.
  std::string first_non_finite() const;

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  AdamConfig config;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step_count = 0;
};

OptimizerState make_optimizer(const ParameterStore& store, AdamConfig config = {});

// Bias-corrected Adam update; zeroes the gradients afterwards. Every
// parameter must carry a gradient buffer.
void adam_step(ParameterStore& store, OptimizerState& state);

// Rescales all gradients by max_norm / ||g|| when the global L2 norm exceeds
// max_norm. Returns the factor applied (1.0 when untouched).
double clip_global_norm(ParameterStore& store, double max_norm);

struct GradCheckReport {
  double max_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t coordinates = 0;
};

// Compares backward() against central differences, one coordinate at a
// time: error = |analytic - numeric| / max(1, |analytic|, |numeric|).
// `f` must be deterministic; parameters are restored bit-exactly.
GradCheckReport grad_check(const std::function<Tensor()>& f, ParameterStore& store, double eps = 1e-5);

}  // namespace scfc
