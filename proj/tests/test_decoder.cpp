// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "scfc/decoder.hpp"
#include "scfc/optim.hpp"
#include "support.hpp"

using namespace scfc;
using scfc::testing::bitwise_equal;
using scfc::testing::random_tensor;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

using History = std::vector<std::size_t>;

// Deterministic toy language model: the distribution depends on the whole
// history through a seeded draw.
StepFunction<History> table_model(std::uint64_t seed, std::size_t vocab, double sharpness = 2.0) {
  return [=](const History& h, std::size_t previous) {
    std::uint64_t key = seed * 1000003u + previous;
    for (std::size_t t : h) key = key * 31u + t + 1;
    Rng rng(key);
    std::vector<double> logits(vocab);
    double z = 0.0;
    for (double& l : logits) {
      l = sharpness * rng.normal();
      z += std::exp(l);
    }
    for (double& l : logits) l -= std::log(z);
    History next = h;
    next.push_back(previous);
    return std::make_pair(next, logits);
  };
}

// Best complete sequence by brute force: complete means it ends in `eos`
// or has max_len tokens.
TokenSequence exhaustive_best(const StepFunction<History>& step, std::size_t bos, std::size_t eos, std::size_t vocab,
                              std::size_t max_len) {
  TokenSequence best;
  best.log_prob = -INFINITY;
  bool found = false;
  std::function<void(const History&, std::size_t, TokenSequence&)> walk = [&](const History& state, std::size_t prev,
                                                                               TokenSequence& prefix) {
    auto [next, lp] = step(state, prev);
    for (std::size_t k = 0; k < vocab; ++k) {
      prefix.tokens.push_back(k);
      const double saved = prefix.log_prob;
      prefix.log_prob += lp[k];
      if (k == eos || prefix.tokens.size() == max_len) {
        if (!found || prefix.log_prob > best.log_prob ||
            (prefix.log_prob == best.log_prob && lexicographically_less(prefix.tokens, best.tokens))) {
          best = prefix;
          found = true;
        }
      } else {
        walk(next, k, prefix);
      }
      prefix.tokens.pop_back();
      prefix.log_prob = saved;
    }
  };
  TokenSequence prefix;
  walk({}, bos, prefix);
  return best;
}

}  // namespace

TEST_CASE("peephole step matches a scalar oracle") {
  PeepholeLstmParams p;
  p.w = Tensor::from({4, 2}, {0.1, -0.2, 0.3, 0.4, -0.5, 0.2, 0.6, 0.1});
  p.r = Tensor::from({4, 1}, {0.2, 0.1, -0.3, 0.4});
  p.b = Tensor::vector({0.0, 0.1, 0.2, -0.1});
  p.p_i = Tensor::vector({0.5});
  p.p_f = Tensor::vector({-0.3});
  p.p_o = Tensor::vector({0.7});
  p.w_u = Tensor::from({1, 2}, {0.25, -0.5});
  const DecoderState prev{Tensor::vector({0.4}), Tensor::vector({-0.6})};
  const DecoderState next = peephole_lstm_step(p, prev, Tensor::vector({1.0, 2.0}), Tensor::vector({2.0, 0.5}));
  const double x[2] = {1.0, 2.0};
  double z[4];
  for (int g = 0; g < 4; ++g) z[g] = p.w.at(g * 2) * x[0] + p.w.at(g * 2 + 1) * x[1] + p.r.at(g) * 0.4 + p.b.at(g);
  const double i = sigmoid(z[0] + 0.5 * -0.6), f = sigmoid(z[1] + -0.3 * -0.6);
  const double c = f * -0.6 + i * std::tanh(z[3] + 0.25 * 2.0 - 0.5 * 0.5);
  const double o = sigmoid(z[2] + 0.7 * c);
  CHECK(next.c.at(0) == doctest::Approx(c).epsilon(1e-14));
  CHECK(next.h.at(0) == doctest::Approx(o * std::tanh(c)).epsilon(1e-14));
}

TEST_CASE("a zero injection matrix reduces to the plain peephole LSTM") {
  Rng rng(3);
  PeepholeLstmParams p{random_tensor({12, 4}, rng), random_tensor({12, 3}, rng), random_tensor({12}, rng),
                       random_tensor({3}, rng),     random_tensor({3}, rng),     random_tensor({3}, rng),
                       Tensor::zeros({3, 5})};
  PeepholeLstmParams plain = p;
  plain.w_u = Tensor();
  const DecoderState s{random_tensor({3}, rng), random_tensor({3}, rng)};
  const Tensor x = random_tensor({4}, rng), u = random_tensor({5}, rng);
  const DecoderState a = peephole_lstm_step(p, s, x, u), b = peephole_lstm_step(plain, s, x, Tensor());
  CHECK(bitwise_equal(a.h.data(), b.h.data()));
  CHECK(bitwise_equal(a.c.data(), b.c.data()));
}

TEST_CASE("peephole gradient check") {
  Rng rng(4);
  ParameterStore store;
  PeepholeLstmParams p{store.add("w", random_tensor({8, 3}, rng, 0.5, true)),
                       store.add("r", random_tensor({8, 2}, rng, 0.5, true)),
                       store.add("b", random_tensor({8}, rng, 0.5, true)),
                       store.add("p_i", random_tensor({2}, rng, 0.5, true)),
                       store.add("p_f", random_tensor({2}, rng, 0.5, true)),
                       store.add("p_o", random_tensor({2}, rng, 0.5, true)),
                       store.add("w_u", random_tensor({2, 3}, rng, 0.5, true))};
  Tensor out_w = store.add("out", random_tensor({4, 2}, rng, 1.0, true));
  const Tensor x = random_tensor({3}, rng), u = random_tensor({3}, rng);
  const auto f = [&] {
    DecoderState s = zero_decoder_state(2);
    s = peephole_lstm_step(p, s, x, u);
    s = peephole_lstm_step(p, s, x, u);
    return ops::pick(word_log_distribution(s.h, out_w), 1);
  };
  CHECK(grad_check(f, store).max_error < 1e-7);
}

TEST_CASE("greedy breaks ties toward the lowest id and stops at the end token") {
  const StepFunction<int> flat = [](const int& s, std::size_t) {
    return std::make_pair(s + 1, std::vector<double>{-1.0, -0.5, -0.5, -2.0});
  };
  const TokenSequence out = greedy_decode(flat, 0, 3, 2, 5);
  CHECK(out.tokens == std::vector<std::size_t>{1, 1, 1, 1, 1});
  const StepFunction<int> ends = [](const int& s, std::size_t) {
    return std::make_pair(s + 1, s == 1 ? std::vector<double>{-1.0, -3.0, -0.1} : std::vector<double>{-0.1, -3.0, -1.0});
  };
  const TokenSequence stopped = greedy_decode(ends, 0, 0, 2, 5);
  CHECK(stopped.tokens == std::vector<std::size_t>{0, 2});
  CHECK(stopped.log_prob == doctest::Approx(-0.2));
}

TEST_CASE("beam size one reproduces greedy decoding") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto step = table_model(seed, 5);
    const TokenSequence g = greedy_decode(step, History{}, 4, 3, 6);
    const BeamResult b = beam_search_decode(step, History{}, 4, 3, 6, 1);
    CHECK(b.best.tokens == g.tokens);
    CHECK(b.best.log_prob == g.log_prob);
  }
}

TEST_CASE("a wide beam finds the exhaustive optimum") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    for (std::size_t len = 1; len <= 3; ++len) {
      const auto step = table_model(seed, 4, 1.0);
      const TokenSequence truth = exhaustive_best(step, 0, 3, 4, len);
      const BeamResult b = beam_search_decode(step, History{}, 0, 3, len, 64);
      CHECK(b.best.tokens == truth.tokens);
      CHECK(b.best.log_prob == doctest::Approx(truth.log_prob).epsilon(1e-12));
      const BeamResult narrow = beam_search_decode(step, History{}, 0, 3, len, 2);
      CHECK(narrow.best.log_prob <= truth.log_prob + 1e-12);
    }
  }
}

TEST_CASE("beam ties resolve to the lexicographically smaller sequence") {
  const StepFunction<int> flat = [](const int& s, std::size_t) {
    return std::make_pair(s + 1, std::vector<double>{std::log(0.49), std::log(0.49), std::log(0.02)});
  };
  const BeamResult b = beam_search_decode(flat, 0, 0, 2, 3, 3);
  CHECK(b.best.tokens == std::vector<std::size_t>{0, 0, 0});
  CHECK(b.finished.size() >= 2);
  for (std::size_t i = 1; i < b.finished.size(); ++i) CHECK(b.finished[i - 1].log_prob >= b.finished[i].log_prob);
}

TEST_CASE("decoders reject empty budgets") {
  const auto step = table_model(1, 3);
  CHECK_THROWS_AS(greedy_decode(step, History{}, 0, 2, 0), Error);
  CHECK_THROWS_AS(beam_search_decode(step, History{}, 0, 2, 3, 0), Error);
}
