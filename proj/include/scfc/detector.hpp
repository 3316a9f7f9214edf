// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

// Coupled region detector and attribute predictor. The backbone is out of
// the picture: a FeatureMap is either loaded or synthesized and everything
// from the sliding-window RPN onwards is differentiable.

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "scfc/tensor.hpp"

namespace scfc {

struct FeatureMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  Tensor values;  // {height, width, channels}

  static FeatureMap from(Tensor values);
};

// Corner-form box in feature-map coordinates; grid node (x, y) sits at the
// integer point (x, y).
struct Box {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double area() const { return (x2 - x1) * (y2 - y1); }
};

double iou(const Box& a, const Box& b);

struct Anchor {
  double cx = 0, cy = 0, w = 0, h = 0;

  Box box() const { return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h}; }
};

struct AnchorSet {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t per_location = 0;  // k
  std::vector<Anchor> anchors;   // index = (y * width + x) * k + a
};

struct AnchorConfig {
  std::vector<double> scales{32.0, 64.0, 128.0};  // pixels
  std::vector<double> ratios{0.5, 1.0, 2.0};      // height / width
  double stride = 16.0;                           // pixels per feature-map cell
};

AnchorSet generate_anchors(std::size_t height, std::size_t width, const AnchorConfig& config = {});

// Samples a P x P grid of bin centres inside `box` ({x1, y1, x2, y2}) and
// bilinearly interpolates the four surrounding grid nodes. The box is clipped
// to the node span first. Differentiable in both the map and the box.
Tensor bilinear_roi_pool(const FeatureMap& map, const Tensor& box, std::size_t out_size);

struct RpnParams {
  Tensor conv_w;  // {hidden, 9 * channels}
  Tensor conv_b;  // {hidden}
  Tensor cls_w;   // {k, hidden}
  Tensor cls_b;   // {k}
  Tensor reg_w;   // {4k, hidden}
  Tensor reg_b;   // {4k}
};

struct RegionFeatureSet {
  Tensor features;            // V, {n, h}
  std::vector<Box> boxes;     // n boxes (may be empty for loaded features)
  std::vector<double> scores; // n confidences, descending

  std::size_t count() const { return features.dim(0); }
  std::size_t dim() const { return features.dim(1); }
};

struct ProposalConfig {
  std::size_t top_n = 36;
  double nms_iou = 0.7;
  std::size_t pool_size = 1;
};

struct RpnOutput {
  Tensor scores;  // {N}, object probability per anchor
  Tensor deltas;  // {N, 4}, (dx, dy, dw, dh) per anchor
  RegionFeatureSet regions;
};

// Applies deltas to an anchor: centre shift scaled by the anchor size and
// log-space size change. Returns {x1, y1, x2, y2}.
Tensor decode_box(const Anchor& anchor, const Tensor& delta);

// Greedy non-maximum suppression over `boxes` visited in `order`. Keeps at
// most `limit` indices.
std::vector<std::size_t> nms(const std::vector<Box>& boxes, const std::vector<std::size_t>& order,
                             double iou_threshold, std::size_t limit);

// 3x3 shared window (zero padded) -> ReLU hidden layer -> k sigmoid scores
// and 4k deltas per location, then NMS top-n selection and pooling.
RpnOutput rpn_forward(const FeatureMap& map, const AnchorSet& anchors, const RpnParams& params,
                      const ProposalConfig& config = {});

// sigmoid((EA W_ap^T)(W_v V^T)); `attribute_embeddings` is {c, e}.
Tensor attribute_raw_probabilities(const Tensor& regions, const Tensor& attribute_embeddings,
                                   const Tensor& w_ap, const Tensor& w_v);

// p_i = 1 - Π_j (1 - P[i][j]) on a {c, n} matrix of probabilities.
Tensor noisy_or_aggregate(const Tensor& raw);

constexpr double kProbabilityFloor = 1e-7;

// FL(p) = -α (1-p)^γ log p for y = 1, -(1-α) p^γ log(1-p) otherwise, with
// p clamped to [1e-7, 1 - 1e-7].
double focal_loss(double p, int label, double alpha, double gamma);

// Elementwise focal loss; entries with label < 0 are ignored (zero).
Tensor focal_loss_terms(const Tensor& p, std::span<const int> labels, double alpha, double gamma);

// Σ smoothL1(pred - target) with transition at 1.
Tensor smooth_l1(const Tensor& pred, std::span<const double> target);

struct DetectionTargets {
  std::vector<int> p_star;                     // per anchor: 1 object, 0 background, -1 ignored
  std::vector<std::array<double, 4>> t_star;   // per anchor; only read where p_star == 1
  std::vector<int> attribute_targets;          // length c, 0/1
};

// Standard RPN labelling: IoU >= pos_iou (or best anchor of a ground-truth
// box) is positive, IoU < neg_iou negative, the rest ignored.
DetectionTargets assign_anchor_targets(const AnchorSet& anchors, const std::vector<Box>& ground_truth,
                                       double pos_iou = 0.7, double neg_iou = 0.3);

std::array<double, 4> encode_box(const Anchor& anchor, const Box& target);

struct FrontendConfig {
  double detector_alpha = 0.3;
  double detector_gamma = 2.0;
  double lambda = 10.0;
  double attribute_alpha = 0.95;
  double attribute_gamma = 2.0;
  double attribute_weight = 0.5;
};

struct FrontendLosses {
  Tensor detector;   // L_VD
  Tensor attribute;  // L_AP
  Tensor total;      // L_VD + 0.5 L_AP
  bool attribute_term_skipped = false;  // no positive attributes in the targets
};

Tensor detector_loss(const Tensor& scores, const Tensor& deltas, const DetectionTargets& targets,
                     const FrontendConfig& config = {});
// Returns an empty tensor when there are no positive attributes.
Tensor attribute_loss(const Tensor& p, std::span<const int> targets, const FrontendConfig& config = {});
Tensor combine_frontend(const Tensor& detector, const Tensor& attribute, double attribute_weight = 0.5);

// `scores`/`deltas` may be undefined when only attributes are supervised.
FrontendLosses frontend_losses(const Tensor& scores, const Tensor& deltas, const Tensor& p,
                               const DetectionTargets& targets, const FrontendConfig& config = {});

}  // namespace scfc
