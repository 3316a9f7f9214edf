// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "scfc/optim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "scfc/error.hpp"

namespace scfc {

Tensor ParameterStore::add_matrix(const std::string& name, std::size_t rows, std::size_t cols, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::vector<double> values(rows * cols);
  for (double& v : values) v = rng.uniform(-a, a);
  return add(name, Tensor::from({rows, cols}, std::move(values), true));
}

Tensor ParameterStore::add_zeros(const std::string& name, Shape shape) {
  return add(name, Tensor::zeros(std::move(shape), true));
}

Tensor ParameterStore::add(const std::string& name, Tensor value) {
  require(!index_.contains(name), "duplicate parameter name '" + name + "'");
  require(value.defined() && value.requires_grad(), "parameter '" + name + "' must require grad");
  index_.emplace(name, entries_.size());
  entries_.emplace_back(name, value);
  return value;
}

bool ParameterStore::contains(const std::string& name) const { return index_.contains(name); }

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorKind::MissingParameter, "no parameter named '" + name + "'");
  return entries_[it->second].second;
}

Tensor& ParameterStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorKind::MissingParameter, "no parameter named '" + name + "'");
  return entries_[it->second].second;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : entries_) n += t.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [_, t] : entries_) t.zero_grad();
}

void ParameterStore::clear_grad() {
  for (auto& [_, t] : entries_) t.clear_grad();
}

std::string ParameterStore::first_non_finite() const {
  for (const auto& [name, t] : entries_) {
    for (double v : t.data())
      if (!std::isfinite(v)) return name;
  }
  return {};
}

OptimizerState make_optimizer(const ParameterStore& store, AdamConfig config) {
  require(config.learning_rate > 0.0, "learning rate must be positive");
  require(config.beta1 >= 0.0 && config.beta1 < 1.0 && config.beta2 >= 0.0 && config.beta2 < 1.0,
          "Adam betas must lie in [0, 1)");
  OptimizerState state;
  state.config = config;
  for (const auto& [_, t] : store.entries()) {
    state.first_moment.emplace_back(t.size(), 0.0);
    state.second_moment.emplace_back(t.size(), 0.0);
  }
  return state;
}

void adam_step(ParameterStore& store, OptimizerState& state) {
  auto& entries = store.entries();
  require(state.first_moment.size() == entries.size(), "optimizer state does not match the parameter store");
  for (std::size_t p = 0; p < entries.size(); ++p) {
    const auto& [name, t] = entries[p];
    if (!t.has_grad()) fail(ErrorKind::Contract, "adam_step: parameter '" + name + "' has no gradient");
    require(state.first_moment[p].size() == t.size(), "adam_step: moment buffer shape mismatch for '" + name + "'");
  }
  state.step_count += 1;
  const auto& cfg = state.config;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t p = 0; p < entries.size(); ++p) {
    auto& param = entries[p].second;
    auto values = param.mutable_data();
    auto grads = param.mutable_grad();
    auto& m = state.first_moment[p];
    auto& v = state.second_moment[p];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grads[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      values[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
    std::fill(grads.begin(), grads.end(), 0.0);
  }
}

double clip_global_norm(ParameterStore& store, double max_norm) {
  require(max_norm > 0.0, "clip_global_norm: max_norm must be positive");
  double squared = 0.0;
  for (const auto& [name, t] : store.entries()) {
    if (!t.has_grad()) fail(ErrorKind::Contract, "clip_global_norm: parameter '" + name + "' has no gradient");
    for (double g : t.grad()) squared += g * g;
  }
  const double norm = std::sqrt(squared);
  if (!(norm > max_norm)) return 1.0;
  const double factor = max_norm / norm;
  for (auto& [_, t] : store.entries())
    for (double& g : t.mutable_grad()) g *= factor;
  return factor;
}

GradCheckReport grad_check(const std::function<Tensor()>& f, ParameterStore& store, double eps) {
  require(eps >= 1e-8 && eps <= 1e-3, "grad_check: eps must lie in [1e-8, 1e-3]");

  const auto evaluate = [&f] {
    NoGradGuard guard;
    return f().item();
  };
  const double first = evaluate();
  const double second = evaluate();
  if (std::bit_cast<std::uint64_t>(first) != std::bit_cast<std::uint64_t>(second)) {
    fail(ErrorKind::Contract, "grad_check: objective is not deterministic");
  }

  store.zero_grad();
  f().backward();
  std::vector<std::vector<double>> analytic;
  for (const auto& [_, t] : store.entries()) analytic.emplace_back(t.grad().begin(), t.grad().end());
  store.zero_grad();

  GradCheckReport report;
  auto& entries = store.entries();
  for (std::size_t p = 0; p < entries.size(); ++p) {
    auto values = entries[p].second.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double plus = evaluate();
      values[i] = saved - eps;
      const double minus = evaluate();
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double a = analytic[p][i];
      const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      ++report.coordinates;
      if (report.worst_parameter.empty() || err > report.max_error) {
        report.max_error = err;
        report.worst_parameter = entries[p].first;
        report.worst_index = i;
      }
    }
  }
  return report;
}

}  // namespace scfc
