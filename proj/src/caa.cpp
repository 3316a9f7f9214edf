// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "scfc/caa.hpp"

#include "scfc/error.hpp"

namespace scfc {

Tensor mean_pool_regions(const Tensor& regions) {
  require(regions.defined() && regions.rank() == 2, "mean_pool_regions: expected an {n, h} region matrix");
  return ops::mean_rows(regions);
}

AttentionContext zero_attention_context(std::size_t hidden) {
  return {Tensor::zeros({hidden}), Tensor::zeros({hidden})};
}

AttentionContext attention_lstm_step(const LstmParams& params, const Tensor& previous_decoder_hidden,
                                     const Tensor& mean_region, const Tensor& word_embedding,
                                     const AttentionContext& context) {
  const std::size_t n = context.h.size();
  require_dims(params.w.dim(0) == 4 * n && params.r.dim(0) == 4 * n && params.r.dim(1) == n && params.b.size() == 4 * n,
               "attention_lstm_step: weights do not match hidden size " + std::to_string(n));
  const Tensor input = ops::concat({previous_decoder_hidden, mean_region, word_embedding});
  require_dims(params.w.dim(1) == input.size(), "attention_lstm_step: input size " + std::to_string(input.size()) +
                                                    " does not match weights " + shape_string(params.w.shape()));
  const Tensor gates = ops::add(ops::add(ops::matmul(params.w, input), ops::matmul(params.r, context.h)), params.b);
  const Tensor i = ops::sigmoid(ops::slice(gates, 0, n));
  const Tensor f = ops::sigmoid(ops::slice(gates, n, n));
  const Tensor o = ops::sigmoid(ops::slice(gates, 2 * n, n));
  const Tensor g = ops::tanh(ops::slice(gates, 3 * n, n));
  const Tensor c = ops::add(ops::mul(f, context.c), ops::mul(i, g));
  return {ops::mul(o, ops::tanh(c)), c};
}

CaaResult caa_attend(const Tensor& attention_hidden, const Tensor& projection, const Tensor& attribute_embeddings) {
  require(attribute_embeddings.defined() && attribute_embeddings.rank() == 2,
          "caa_attend: attribute embeddings must be {c, e}");
  require_dims(projection.rank() == 2 && projection.dim(0) == attribute_embeddings.dim(1) &&
                   projection.dim(1) == attention_hidden.size(),
               "caa_attend: projection must map the attention state to the embedding size");
  const Tensor context = ops::matmul(projection, attention_hidden);
  CaaResult out;
  out.activations = ops::mul_rows(attribute_embeddings, context);
  out.weights = ops::softmax(ops::row_sums(out.activations));
  out.caa = ops::weighted_rows(out.weights, attribute_embeddings);
  return out;
}

CaaResult uniform_attributes(const Tensor& attribute_embeddings) {
  const std::size_t c = attribute_embeddings.dim(0);
  CaaResult out;
  out.activations = Tensor::zeros(attribute_embeddings.shape());
  out.weights = Tensor::full({c}, 1.0 / static_cast<double>(c));
  out.caa = ops::weighted_rows(out.weights, attribute_embeddings);
  return out;
}

}  // namespace scfc
