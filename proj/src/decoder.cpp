// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "scfc/decoder.hpp"

namespace scfc {

DecoderState zero_decoder_state(std::size_t hidden) {
  return {Tensor::zeros({hidden}), Tensor::zeros({hidden})};
}

DecoderState peephole_lstm_step(const PeepholeLstmParams& params, const DecoderState& state, const Tensor& input,
                                const Tensor& fused) {
  const std::size_t n = state.h.size();
  require_dims(params.w.dim(0) == 4 * n && params.r.dim(0) == 4 * n && params.r.dim(1) == n &&
                   params.b.size() == 4 * n,
               "peephole_lstm_step: weights do not match hidden size " + std::to_string(n));
  require_dims(params.p_i.size() == n && params.p_f.size() == n && params.p_o.size() == n,
               "peephole_lstm_step: peephole vectors must have the hidden size");
  require_dims(params.w.dim(1) == input.size(), "peephole_lstm_step: input size " + std::to_string(input.size()) +
                                                    " does not match weights " + shape_string(params.w.shape()));
  const Tensor gates = ops::add(ops::add(ops::matmul(params.w, input), ops::matmul(params.r, state.h)), params.b);
  const Tensor i = ops::sigmoid(ops::add(ops::slice(gates, 0, n), ops::mul(params.p_i, state.c)));
  const Tensor f = ops::sigmoid(ops::add(ops::slice(gates, n, n), ops::mul(params.p_f, state.c)));
  Tensor candidate = ops::slice(gates, 3 * n, n);
  if (params.w_u.defined()) {
    require(fused.defined(), "peephole_lstm_step: consolidated feature missing");
    require_dims(params.w_u.dim(0) == n && params.w_u.dim(1) == fused.size(),
                 "peephole_lstm_step: W_U " + shape_string(params.w_u.shape()) + " does not fit |U| = " +
                     std::to_string(fused.size()));
    candidate = ops::add(candidate, ops::matmul(params.w_u, fused));
  }
  const Tensor c = ops::add(ops::mul(f, state.c), ops::mul(i, ops::tanh(candidate)));
  const Tensor o = ops::sigmoid(ops::add(ops::slice(gates, 2 * n, n), ops::mul(params.p_o, c)));
  return {ops::mul(o, ops::tanh(c)), c};
}

Tensor word_log_distribution(const Tensor& hidden, const Tensor& output_weights) {
  require_dims(output_weights.rank() == 2 && output_weights.dim(1) == hidden.size(),
               "word_log_distribution: W_h must be {|vocab|, N}");
  return ops::log_softmax(ops::matmul(output_weights, hidden));
}

}  // namespace scfc
