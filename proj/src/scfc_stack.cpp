// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "scfc/scfc_stack.hpp"

#include "scfc/error.hpp"

namespace scfc {

CfcRelevance cfc_relevance(const Tensor& regions, const Tensor& carrier, const CfcLayerParams& params) {
  require(regions.defined() && regions.rank() == 2, "cfc_relevance: regions must be {n, h}");
  require_dims(params.w_v.dim(1) == regions.dim(1), "cfc_relevance: W_v expects h = " +
                                                        std::to_string(params.w_v.dim(1)) + ", regions have " +
                                                        std::to_string(regions.dim(1)));
  require_dims(params.w_h.dim(1) == carrier.size(), "cfc_relevance: W_h does not match the carrier size");
  require_dims(params.w_d.size() == params.w_v.dim(0) && params.w_h.dim(0) == params.w_v.dim(0),
               "cfc_relevance: joint sizes disagree");
  CfcRelevance out;
  const Tensor visual = ops::matmul(regions, ops::transpose(params.w_v));  // {n, d}
  const Tensor textual = ops::matmul(params.w_h, carrier);                 // {d}
  out.alpha = ops::tanh(ops::mul_rows(visual, textual));
  out.scores = ops::matmul(out.alpha, params.w_d);
  out.distribution = ops::softmax(out.scores);
  return out;
}

Consolidation cfc_consolidate(const Tensor& distribution, const Tensor& regions, const Tensor& carrier,
                              const CfcLayerParams& params) {
  require_dims(distribution.size() == regions.dim(0), "cfc_consolidate: one weight per region");
  require_dims(params.w_proj.dim(1) == regions.dim(1) && params.w_proj.dim(0) == carrier.size(),
               "cfc_consolidate: W_proj must map h to the carrier size");
  Consolidation out;
  out.attended = ops::weighted_rows(distribution, regions);
  out.fused = ops::add(ops::matmul(params.w_proj, out.attended), carrier);
  return out;
}

ConsolidatedFeature scfc_forward(const Tensor& regions, const Tensor& caa, const Tensor& attention_hidden,
                                 std::span<const CfcLayerParams> layers) {
  require(!layers.empty(), "scfc_forward: at least one CFC layer is required");
  ConsolidatedFeature out;
  Tensor carrier = caa;
  for (const auto& layer : layers) {
    const CfcRelevance rel = cfc_relevance(regions, carrier, layer);
    Consolidation step = cfc_consolidate(rel.distribution, regions, carrier, layer);
    out.relevance.push_back(rel.distribution);
    out.attended.push_back(step.attended);
    out.intermediates.push_back(step.fused);
    carrier = step.fused;
  }
  out.fused = ops::concat({carrier, attention_hidden});
  return out;
}

}  // namespace scfc
