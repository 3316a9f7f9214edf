// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numeric>

#include "doctest.h"
#include "scfc/optim.hpp"
#include "scfc/scfc_stack.hpp"
#include "support.hpp"

using namespace scfc;
using scfc::testing::bitwise_equal;
using scfc::testing::random_tensor;

namespace {

CfcLayerParams random_layer(std::size_t h, std::size_t e, std::size_t d, Rng& rng, ParameterStore* store = nullptr,
                            const std::string& prefix = "") {
  const bool grad = store != nullptr;
  CfcLayerParams p{random_tensor({d, h}, rng, 1.0, grad), random_tensor({d, e}, rng, 1.0, grad),
                   random_tensor({d}, rng, 1.0, grad), random_tensor({e, h}, rng, 0.5, grad)};
  if (store) {
    store->add(prefix + "w_v", p.w_v);
    store->add(prefix + "w_h", p.w_h);
    store->add(prefix + "w_d", p.w_d);
    store->add(prefix + "w_proj", p.w_proj);
  }
  return p;
}

Tensor permute_rows(const Tensor& m, const std::vector<std::size_t>& perm) {
  return ops::gather_rows(m, perm).detach();
}

}  // namespace

TEST_CASE("relevance matches a hand computation") {
  const Tensor regions = Tensor::from({2, 1}, {1.0, -2.0});
  CfcLayerParams p{Tensor::from({2, 1}, {0.5, 1.0}), Tensor::from({2, 1}, {1.0, 0.25}), Tensor::vector({1.0, -1.0}),
                   Tensor::from({1, 1}, {2.0})};
  const Tensor carrier = Tensor::vector({2.0});
  const CfcRelevance r = cfc_relevance(regions, carrier, p);
  // textual = (2, 0.5); visual rows (0.5, 1) and (-1, -2)
  const double s0 = std::tanh(1.0) - std::tanh(0.5), s1 = std::tanh(-2.0) - std::tanh(-1.0);
  CHECK(r.scores.at(0) == doctest::Approx(s0).epsilon(1e-14));
  CHECK(r.scores.at(1) == doctest::Approx(s1).epsilon(1e-14));
  const double d0 = 1.0 / (1.0 + std::exp(s1 - s0));
  CHECK(r.distribution.at(0) == doctest::Approx(d0).epsilon(1e-14));
  const Consolidation c = cfc_consolidate(r.distribution, regions, carrier, p);
  const double attended = d0 * 1.0 + (1 - d0) * -2.0;
  CHECK(c.attended.at(0) == doctest::Approx(attended).epsilon(1e-14));
  CHECK(c.fused.at(0) == doctest::Approx(2.0 * attended + 2.0).epsilon(1e-14));
}

TEST_CASE("each layer yields a distribution and a convex combination of regions") {
  Rng rng(9);
  const Tensor regions = random_tensor({6, 4}, rng);
  std::vector<CfcLayerParams> layers;
  for (int s = 0; s < 3; ++s) layers.push_back(random_layer(4, 3, 5, rng));
  const ConsolidatedFeature out = scfc_forward(regions, random_tensor({3}, rng), random_tensor({2}, rng), layers);
  CHECK(out.relevance.size() == 3);
  CHECK(out.fused.size() == 5);
  for (std::size_t s = 0; s < 3; ++s) {
    const auto d = out.relevance[s].to_vector();
    CHECK(std::accumulate(d.begin(), d.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t k = 0; k < 4; ++k) {
      double lo = 1e300, hi = -1e300;
      for (std::size_t i = 0; i < 6; ++i) {
        lo = std::min(lo, regions.data()[i * 4 + k]);
        hi = std::max(hi, regions.data()[i * 4 + k]);
      }
      CHECK(out.attended[s].at(k) >= lo - 1e-12);
      CHECK(out.attended[s].at(k) <= hi + 1e-12);
    }
  }
}

TEST_CASE("region order does not change the consolidated feature") {
  Rng rng(10);
  const Tensor regions = random_tensor({7, 4}, rng);
  std::vector<CfcLayerParams> layers;
  for (int s = 0; s < 3; ++s) layers.push_back(random_layer(4, 3, 5, rng));
  const Tensor caa = random_tensor({3}, rng), h_att = random_tensor({2}, rng);
  const ConsolidatedFeature base = scfc_forward(regions, caa, h_att, layers);
  std::vector<std::size_t> perm(7);
  std::iota(perm.begin(), perm.end(), 0);
  for (int trial = 0; trial < 10; ++trial) {
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.next() % i]);
    const ConsolidatedFeature moved = scfc_forward(permute_rows(regions, perm), caa, h_att, layers);
    CHECK(bitwise_equal(moved.fused.data(), base.fused.data()));
    for (std::size_t i = 0; i < 7; ++i) CHECK(moved.relevance[0].at(i) == base.relevance[0].at(perm[i]));
  }
}

TEST_CASE("stack gradient check") {
  Rng rng(13);
  ParameterStore store;
  Tensor regions = store.add("v", random_tensor({3, 4}, rng, 1.0, true));
  Tensor caa = store.add("caa", random_tensor({3}, rng, 1.0, true));
  std::vector<CfcLayerParams> layers;
  for (int s = 0; s < 2; ++s) layers.push_back(random_layer(4, 3, 5, rng, &store, "l" + std::to_string(s) + "."));
  const Tensor w = random_tensor({5}, rng);
  const auto f = [&] { return ops::dot(scfc_forward(regions, caa, Tensor::vector({0.1, -0.2}), layers).fused, w); };
  CHECK(grad_check(f, store).max_error < 1e-7);
}
