// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

// Stacked cross-modal feature consolidation. Each layer scores every region
// against the textual carrier H, attends over the regions and adds the
// (projected) attended visual back onto H; the result carries on as the next
// layer's H. The first carrier is the CAA vector.

#pragma once

#include <span>
#include <vector>

#include "scfc/tensor.hpp"

namespace scfc {

struct CfcLayerParams {
  Tensor w_v;     // {d, h}
  Tensor w_h;     // {d, e}
  Tensor w_d;     // {d}
  Tensor w_proj;  // {e, h}
};

struct CfcRelevance {
  Tensor alpha;         // tanh((W_v v_i) ⊙ (W_h H)), {n, d}
  Tensor scores;        // w_d · α_i, {n}
  Tensor distribution;  // softmax over regions, {n}
};

struct ConsolidatedFeature {
  std::vector<Tensor> relevance;      // D^s, s = 1..S
  std::vector<Tensor> attended;       // Ṽ^s
  std::vector<Tensor> intermediates;  // U^s
  Tensor fused;                       // U^S ⊕ h_att
};

CfcRelevance cfc_relevance(const Tensor& regions, const Tensor& carrier, const CfcLayerParams& params);

struct Consolidation {
  Tensor attended;  // Ṽ = Σ_i D_i v_i
  Tensor fused;     // U = W_proj Ṽ + H
};

Consolidation cfc_consolidate(const Tensor& distribution, const Tensor& regions, const Tensor& carrier,
                              const CfcLayerParams& params);

ConsolidatedFeature scfc_forward(const Tensor& regions, const Tensor& caa, const Tensor& attention_hidden,
                                 std::span<const CfcLayerParams> layers);

}  // namespace scfc
