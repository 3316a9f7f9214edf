// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "scfc/error.hpp"
#include "scfc/tensor.hpp"

namespace scfc {

// Peephole LSTM whose cell candidate also sees the consolidated feature
// through w_u. Gate blocks in w/r/b are ordered i, f, o, g.
struct PeepholeLstmParams {
  Tensor w;    // {4N, M}
  Tensor r;    // {4N, N}
  Tensor b;    // {4N}
  Tensor p_i;  // {N}
  Tensor p_f;  // {N}
  Tensor p_o;  // {N}
  Tensor w_u;  // {N, |U|}; undefined for a plain peephole LSTM
};

struct DecoderState {
  Tensor h;
  Tensor c;
};

DecoderState zero_decoder_state(std::size_t hidden);

// The output gate peeks at the fresh cell; input and forget gates at the
// previous one. `fused` is ignored when params.w_u is undefined.
DecoderState peephole_lstm_step(const PeepholeLstmParams& params, const DecoderState& state, const Tensor& input,
                                const Tensor& fused);

// log softmax(W_h h); no output bias.
Tensor word_log_distribution(const Tensor& hidden, const Tensor& output_weights);

struct TokenSequence {
  std::vector<std::size_t> tokens;  // ends with the end token unless cut off by max_len
  double log_prob = 0.0;
};

// Lexicographic order on token ids; shorter prefix first.
inline bool lexicographically_less(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// A step consumes the previous token and returns the successor state plus
// log-probabilities over the vocabulary.
template <class State>
using StepFunction = std::function<std::pair<State, std::vector<double>>(const State&, std::size_t)>;

// Argmax at every step, lowest id on ties. max_len counts emitted tokens
// including the end token.
template <class State>
TokenSequence greedy_decode(const StepFunction<State>& step, State state, std::size_t start_token,
                            std::size_t end_token, std::size_t max_len) {
  require(max_len >= 1, "greedy_decode: max_len must be at least 1");
  TokenSequence out;
  std::size_t previous = start_token;
  for (std::size_t t = 0; t < max_len; ++t) {
    auto [next, log_probs] = step(state, previous);
    require(!log_probs.empty(), "greedy_decode: empty distribution");
    std::size_t best = 0;
    for (std::size_t k = 1; k < log_probs.size(); ++k) {
      if (log_probs[k] > log_probs[best]) best = k;
    }
    out.tokens.push_back(best);
    out.log_prob += log_probs[best];
    state = std::move(next);
    previous = best;
    if (best == end_token) break;
  }
  return out;
}

struct BeamResult {
  TokenSequence best;
  std::vector<TokenSequence> finished;  // best first
};

// Each step ranks every one-token extension of every live hypothesis by total
// log-probability and keeps the top `beam_size`. Extensions ending in the end
// token, or reaching max_len, retire to the finished pool, so the live beam
// shrinks as hypotheses complete. Ties resolve to the lexicographically
// smaller token sequence. With beam_size 1 this reproduces greedy_decode.
template <class State>
BeamResult beam_search_decode(const StepFunction<State>& step, State initial, std::size_t start_token,
                              std::size_t end_token, std::size_t max_len, std::size_t beam_size) {
  require(max_len >= 1, "beam_search_decode: max_len must be at least 1");
  require(beam_size >= 1, "beam_search_decode: beam size must be at least 1");
  struct Hypothesis {
    std::vector<std::size_t> tokens;
    double log_prob = 0.0;
    State state;
  };
  struct Candidate {
    std::size_t parent;
    std::size_t token;
    double log_prob;
  };
  const auto ranks_before = [](const TokenSequence& a, const TokenSequence& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return lexicographically_less(a.tokens, b.tokens);
  };

  std::vector<Hypothesis> live{{{}, 0.0, std::move(initial)}};
  BeamResult result;
  for (std::size_t t = 1; t <= max_len && !live.empty(); ++t) {
    std::vector<State> successors;
    std::vector<Candidate> candidates;
    for (std::size_t p = 0; p < live.size(); ++p) {
      const std::size_t previous = live[p].tokens.empty() ? start_token : live[p].tokens.back();
      auto [next, log_probs] = step(live[p].state, previous);
      require(!log_probs.empty(), "beam_search_decode: empty distribution");
      successors.push_back(std::move(next));
      for (std::size_t k = 0; k < log_probs.size(); ++k) {
        candidates.push_back({p, k, live[p].log_prob + log_probs[k]});
      }
    }
    const std::size_t keep = std::min(beam_size, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                      [&](const Candidate& a, const Candidate& b) {
                        if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
                        // Same parent: lower token wins. Different parents:
                        // compare the parents' sequences, which share length.
                        if (a.parent == b.parent) return a.token < b.token;
                        const auto& pa = live[a.parent].tokens;
                        const auto& pb = live[b.parent].tokens;
                        if (pa != pb) return lexicographically_less(pa, pb);
                        return a.token < b.token;
                      });
    std::vector<Hypothesis> next_live;
    for (std::size_t i = 0; i < keep; ++i) {
      const Candidate& cand = candidates[i];
      std::vector<std::size_t> tokens = live[cand.parent].tokens;
      tokens.push_back(cand.token);
      if (cand.token == end_token || t == max_len) {
        result.finished.push_back({std::move(tokens), cand.log_prob});
      } else {
        next_live.push_back({std::move(tokens), cand.log_prob, successors[cand.parent]});
      }
    }
    live = std::move(next_live);
  }
  std::stable_sort(result.finished.begin(), result.finished.end(), ranks_before);
  result.best = result.finished.front();
  return result;
}

}  // namespace scfc
