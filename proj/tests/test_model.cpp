// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "scfc/error.hpp"
#include "scfc/model.hpp"
#include "support.hpp"

using namespace scfc;
using scfc::testing::bitwise_equal;
using scfc::testing::random_tensor;
using scfc::testing::toy_model_config;

TEST_CASE("model owns the expected parameters") {
  Rng rng(1);
  ScfcModel model(toy_model_config(3), rng);
  const ParameterStore& p = model.parameters();
  for (const char* name : {"embedding", "attribute.w_ap", "attribute.w_v", "att_lstm.w", "caa.proj", "cfc3.w_v",
                           "decoder.w_u", "output.w"})
    CHECK_NOTHROW(p.get(name));
  CHECK(p.get("att_lstm.w").shape() == Shape{28, 7 + 5 + 6});
  CHECK(p.get("decoder.w_u").shape() == Shape{7, 6 + 7});
  CHECK_THROWS(p.get("cfc4.w_v"));
  CHECK_THROWS(p.get("rpn.conv_w"));

  ModelConfig ablated = toy_model_config(1);
  ablated.use_caa = false;
  ablated.inject_consolidated = false;
  ScfcModel small(ablated, rng);
  CHECK_THROWS(small.parameters().get("caa.proj"));
  CHECK_THROWS(small.parameters().get("decoder.w_u"));
  CHECK_NOTHROW(small.greedy(random_tensor({4, 5}, rng), 4));
}

TEST_CASE("invalid configurations are usage errors") {
  Rng rng(1);
  ModelConfig c = toy_model_config(0);
  try {
    ScfcModel m(c, rng);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Usage);
  }
  c = toy_model_config(1);
  c.attribute_ids = {12};
  CHECK_THROWS_AS(ScfcModel(c, rng), Error);
  c = toy_model_config(1);
  c.use_detector = true;
  c.map_channels = 3;
  c.rpn_hidden = 4;
  CHECK_THROWS_AS(ScfcModel(c, rng), Error);  // region_dim 5 != 1 * 1 * 3
}

TEST_CASE("a zero output layer predicts the uniform distribution") {
  Rng rng(2);
  ScfcModel model(toy_model_config(2), rng);
  for (double& v : model.parameters().get("output.w").mutable_data()) v = 0.0;
  const Tensor regions = random_tensor({4, 5}, rng);
  const std::size_t tokens[] = {3, 8};
  CHECK(model.caption_loss(regions, tokens).item() == doctest::Approx(2.0 * std::log(9.0)).epsilon(1e-14));
}

TEST_CASE("initialisation is deterministic in the seed") {
  Rng a(5), b(5), c(6);
  ScfcModel x(toy_model_config(2), a), y(toy_model_config(2), b), z(toy_model_config(2), c);
  CHECK(scfc::testing::same_parameters(scfc::testing::snapshot(x.parameters()), y.parameters()));
  CHECK_FALSE(scfc::testing::same_parameters(scfc::testing::snapshot(x.parameters()), z.parameters()));
}

TEST_CASE("caption loss requires the end token and known ids") {
  Rng rng(3);
  ScfcModel model(toy_model_config(1), rng);
  const Tensor regions = random_tensor({4, 5}, rng);
  const std::size_t no_end[] = {1, 2};
  const std::size_t bad[] = {20, 8};
  CHECK_THROWS_AS(model.caption_loss(regions, no_end), Error);
  CHECK_THROWS_AS(model.caption_loss(regions, bad), Error);
  CHECK_THROWS_AS(model.caption_loss(random_tensor({4, 6}, rng), std::vector<std::size_t>{8}), Error);
}

TEST_CASE("full model gradient check for S = 1, 2, 3") {
  for (std::size_t s = 1; s <= 3; ++s) {
    Rng rng(40 + s);
    ScfcModel model(toy_model_config(s), rng);
    for (double& v : model.parameters().get("decoder.p_i").mutable_data()) v = rng.uniform(-0.5, 0.5);
    const Tensor regions = random_tensor({4, 5}, rng);
    DetectionTargets targets;
    targets.attribute_targets = {1, 0, 0, 1};
    const std::size_t caption[] = {1, 4, 8};
    const auto f = [&] {
      return ops::add(model.caption_loss(regions, caption), model.frontend_loss(regions, targets).total);
    };
    CHECK(grad_check(f, model.parameters()).max_error < 1e-6);
  }
}

TEST_CASE("decoding entry points agree") {
  Rng rng(7);
  ScfcModel model(toy_model_config(2), rng);
  const Tensor regions = random_tensor({4, 5}, rng);
  const TokenSequence g = model.greedy(regions, 6);
  const BeamResult b = model.beam(regions, 1, 6);
  CHECK(g.tokens == b.best.tokens);
  const ImageContext image = model.encode(regions);
  const double lp = model.sequence_log_prob(image, g.tokens).item();
  CHECK(lp == doctest::Approx(g.log_prob).epsilon(1e-12));
  CHECK(model.beam(regions, 4, 6).best.log_prob >= g.log_prob - 1e-12);

  Rng s1(9), s2(9);
  const TokenSequence a = model.sample(regions, 6, s1), c = model.sample(regions, 6, s2);
  CHECK(a.tokens == c.tokens);
  CHECK(a.tokens.size() <= 6);
}

TEST_CASE("moving a model keeps it usable") {
  Rng rng(8);
  ScfcModel model(toy_model_config(1), rng);
  const Tensor regions = random_tensor({4, 5}, rng);
  const auto before = model.greedy(regions, 5);
  ScfcModel moved = std::move(model);
  CHECK(moved.greedy(regions, 5).tokens == before.tokens);
}

TEST_CASE("dropout only applies with an rng") {
  Rng rng(9);
  ModelConfig c = toy_model_config(1);
  c.dropout = 0.5;
  ScfcModel model(c, rng);
  const Tensor regions = random_tensor({4, 5}, rng);
  const std::size_t caption[] = {2, 8};
  const double clean = model.caption_loss(regions, caption).item();
  CHECK(model.caption_loss(regions, caption).item() == clean);
  Rng d1(1), d2(1);
  const double noisy1 = model.caption_loss(regions, caption, &d1).item();
  CHECK(model.caption_loss(regions, caption, &d2).item() == noisy1);
}
