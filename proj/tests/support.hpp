// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "scfc/model.hpp"
#include "scfc/random.hpp"
#include "scfc/tensor.hpp"

namespace scfc::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0, bool requires_grad = false) {
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = scale * rng.uniform(-1.0, 1.0);
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

inline bool bitwise_equal(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline std::vector<std::vector<double>> snapshot(const ParameterStore& store) {
  std::vector<std::vector<double>> out;
  for (const auto& [_, t] : store.entries()) out.push_back(t.to_vector());
  return out;
}

inline bool same_parameters(const std::vector<std::vector<double>>& a, const ParameterStore& store) {
  const auto b = snapshot(store);
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!bitwise_equal(a[i], b[i])) return false;
  return true;
}

// The acceptance toy dims: n=4, h=5, e=6, d=5, decoder 7, c=4, |vocab|=9.
inline ModelConfig toy_model_config(std::size_t layers) {
  ModelConfig c;
  c.vocab_size = 9;
  c.embed_dim = 6;
  c.region_dim = 5;
  c.joint_dim = 5;
  c.attention_hidden = 7;
  c.decoder_hidden = 7;
  c.layers = layers;
  c.attribute_ids = {0, 1, 2, 3};
  c.bos_id = 7;
  c.eos_id = 8;
  return c;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("scfc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace scfc::testing
