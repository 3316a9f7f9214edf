// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "scfc/tensor.hpp"

namespace scfc {

// Stacked-gate LSTM weights; gate blocks are ordered i, f, o, g.
struct LstmParams {
  Tensor w;  // {4N, M}
  Tensor r;  // {4N, N}
  Tensor b;  // {4N}
};

struct AttentionContext {
  Tensor h;
  Tensor c;
};

struct CaaResult {
  Tensor activations;  // b_j stacked, {c, e}
  Tensor weights;      // β, {c}
  Tensor caa;          // {e}
};

// v̄ = (1/n) Σ_i v_i over the rows of V.
Tensor mean_pool_regions(const Tensor& regions);

AttentionContext zero_attention_context(std::size_t hidden);

// One step of the attention LSTM on h_dec ⊕ v̄ ⊕ E·Π_t.
AttentionContext attention_lstm_step(const LstmParams& params, const Tensor& previous_decoder_hidden,
                                     const Tensor& mean_region, const Tensor& word_embedding,
                                     const AttentionContext& context);

// Context-aware attributes. The attention state is projected into the
// embedding space, correlated with every attribute embedding by elementwise
// product, and each correlation vector is reduced by summation to the score
// that the softmax turns into β. No bias on the projection, so a zero state
// yields all-zero activations.
CaaResult caa_attend(const Tensor& attention_hidden, const Tensor& projection, const Tensor& attribute_embeddings);

// β uniform over attributes; used when context-aware weighting is ablated.
CaaResult uniform_attributes(const Tensor& attribute_embeddings);

}  // namespace scfc
