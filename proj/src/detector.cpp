// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "scfc/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scfc/error.hpp"

namespace scfc {
namespace {

// Upper bound on log-space size deltas, as in the usual RPN decoders.
const double kMaxLogDelta = std::log(1000.0 / 16.0);

double clamp_probability(double p) { return std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor); }

// Focal loss derivative with respect to p, zero outside the clamp range.
double focal_derivative(double p, int label, double alpha, double gamma) {
  if (p < kProbabilityFloor || p > 1.0 - kProbabilityFloor) return 0.0;
  if (label == 1) {
    const double q = 1.0 - p;
    const double modulated = gamma == 0.0 ? 0.0 : gamma * std::pow(q, gamma - 1.0) * std::log(p);
    return alpha * (modulated - std::pow(q, gamma) / p);
  }
  const double q = 1.0 - p;
  const double modulated = gamma == 0.0 ? 0.0 : gamma * std::pow(p, gamma - 1.0) * std::log(q);
  return -(1.0 - alpha) * (modulated - std::pow(p, gamma) / q);
}

// {H*W, 9C} matrix of zero-padded 3x3 windows, one row per location.
Tensor window_patches(const FeatureMap& map) {
  const std::size_t H = map.height, W = map.width, C = map.channels;
  const std::size_t cols = 9 * C;
  std::vector<double> out(H * W * cols, 0.0);
  const auto src = map.values.data();
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const long yy = static_cast<long>(y) + dy, xx = static_cast<long>(x) + dx;
          if (yy < 0 || xx < 0 || yy >= static_cast<long>(H) || xx >= static_cast<long>(W)) continue;
          const std::size_t w = static_cast<std::size_t>((dy + 1) * 3 + (dx + 1));
          for (std::size_t c = 0; c < C; ++c)
            out[(y * W + x) * cols + w * C + c] = src[(static_cast<std::size_t>(yy) * W + static_cast<std::size_t>(xx)) * C + c];
        }
  return record("window_patches", {H * W, cols}, std::move(out), {map.values}, [H, W, C, cols](detail::Node& self) {
    auto& p = *self.parents[0];
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const long yy = static_cast<long>(y) + dy, xx = static_cast<long>(x) + dx;
            if (yy < 0 || xx < 0 || yy >= static_cast<long>(H) || xx >= static_cast<long>(W)) continue;
            const std::size_t w = static_cast<std::size_t>((dy + 1) * 3 + (dx + 1));
            for (std::size_t c = 0; c < C; ++c)
              accumulate(p, (static_cast<std::size_t>(yy) * W + static_cast<std::size_t>(xx)) * C + c,
                         self.grad[(y * W + x) * cols + w * C + c]);
          }
  });
}

Box clip_box(Box b, std::size_t height, std::size_t width) {
  const double xmax = static_cast<double>(width) - 1.0, ymax = static_cast<double>(height) - 1.0;
  b.x1 = std::clamp(b.x1, 0.0, xmax);
  b.x2 = std::clamp(b.x2, 0.0, xmax);
  b.y1 = std::clamp(b.y1, 0.0, ymax);
  b.y2 = std::clamp(b.y2, 0.0, ymax);
  return b;
}

Box decode_values(const Anchor& a, std::span<const double> d) {
  const double cx = a.cx + d[0] * a.w, cy = a.cy + d[1] * a.h;
  const double w = a.w * std::exp(std::min(d[2], kMaxLogDelta));
  const double h = a.h * std::exp(std::min(d[3], kMaxLogDelta));
  return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
}

}  // namespace

FeatureMap FeatureMap::from(Tensor values) {
  require_dims(values.rank() == 3, "feature map must be {height, width, channels}, got " + shape_string(values.shape()));
  FeatureMap map;
  map.height = values.dim(0);
  map.width = values.dim(1);
  map.channels = values.dim(2);
  map.values = std::move(values);
  return map;
}

double iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

AnchorSet generate_anchors(std::size_t height, std::size_t width, const AnchorConfig& config) {
  require(height >= 1 && width >= 1, "generate_anchors: map dims must be >= 1");
  require(!config.scales.empty() && !config.ratios.empty(), "generate_anchors: scales and ratios must be non-empty");
  require(config.stride > 0.0, "generate_anchors: stride must be positive");
  for (double s : config.scales) require(s > 0.0, "generate_anchors: scales must be positive");
  for (double r : config.ratios) require(r > 0.0, "generate_anchors: ratios must be positive");

  std::vector<std::pair<double, double>> shapes;
  for (double s : config.scales) {
    const double base = s / config.stride;
    for (double r : config.ratios) shapes.emplace_back(base / std::sqrt(r), base * std::sqrt(r));
  }
  AnchorSet set;
  set.height = height;
  set.width = width;
  set.per_location = shapes.size();
  set.anchors.reserve(height * width * shapes.size());
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x)
      for (const auto& [w, h] : shapes)
        set.anchors.push_back({static_cast<double>(x), static_cast<double>(y), w, h});
  return set;
}

Tensor bilinear_roi_pool(const FeatureMap& map, const Tensor& box, std::size_t out_size) {
  require(out_size >= 1, "bilinear_roi_pool: output size must be >= 1");
  require_dims(box.rank() == 1 && box.size() == 4, "bilinear_roi_pool: box must have 4 coordinates");
  const std::size_t H = map.height, W = map.width, C = map.channels, P = out_size;
  const double xmax = static_cast<double>(W) - 1.0, ymax = static_cast<double>(H) - 1.0;

  // Clipped corners and whether each coordinate passed through unclipped.
  std::array<double, 4> raw{box.at(0), box.at(1), box.at(2), box.at(3)};
  std::array<double, 4> lim{xmax, ymax, xmax, ymax};
  std::array<double, 4> c{};
  std::array<double, 4> pass{};
  for (std::size_t i = 0; i < 4; ++i) {
    c[i] = std::clamp(raw[i], 0.0, lim[i]);
    pass[i] = (raw[i] > 0.0 && raw[i] < lim[i]) ? 1.0 : 0.0;
  }
  if (!(c[2] > c[0] && c[3] > c[1])) fail(ErrorKind::Contract, "bilinear_roi_pool: zero-area box after clipping");

  struct Sample {
    std::size_t x0, x1, y0, y1;
    double lx, ly;
  };
  std::vector<Sample> samples(P * P);
  const auto v = map.values.data();
  std::vector<double> out(P * P * C);
  const auto locate = [](double s, std::size_t n, std::size_t& i0, std::size_t& i1, double& frac) {
    if (n == 1) {
      i0 = i1 = 0;
      frac = 0.0;
      return;
    }
    i0 = std::min(static_cast<std::size_t>(std::floor(s)), n - 2);
    i1 = i0 + 1;
    frac = s - static_cast<double>(i0);
  };
  for (std::size_t i = 0; i < P; ++i) {
    const double sy = c[1] + (static_cast<double>(i) + 0.5) * (c[3] - c[1]) / static_cast<double>(P);
    for (std::size_t j = 0; j < P; ++j) {
      const double sx = c[0] + (static_cast<double>(j) + 0.5) * (c[2] - c[0]) / static_cast<double>(P);
      Sample s{};
      locate(sx, W, s.x0, s.x1, s.lx);
      locate(sy, H, s.y0, s.y1, s.ly);
      samples[i * P + j] = s;
      for (std::size_t ch = 0; ch < C; ++ch) {
        const double v00 = v[(s.y0 * W + s.x0) * C + ch], v01 = v[(s.y0 * W + s.x1) * C + ch];
        const double v10 = v[(s.y1 * W + s.x0) * C + ch], v11 = v[(s.y1 * W + s.x1) * C + ch];
        out[(i * P + j) * C + ch] = (1 - s.ly) * ((1 - s.lx) * v00 + s.lx * v01) + s.ly * ((1 - s.lx) * v10 + s.lx * v11);
      }
    }
  }
  return record("bilinear_roi_pool", {P, P, C}, std::move(out), {map.values, box},
                [=, samples = std::move(samples)](detail::Node& self) {
                  auto& pm = *self.parents[0];
                  auto& pb = *self.parents[1];
                  for (std::size_t i = 0; i < P; ++i) {
                    const double fy = (static_cast<double>(i) + 0.5) / static_cast<double>(P);
                    for (std::size_t j = 0; j < P; ++j) {
                      const double fx = (static_cast<double>(j) + 0.5) / static_cast<double>(P);
                      const Sample& s = samples[i * P + j];
                      double dsx = 0.0, dsy = 0.0;
                      for (std::size_t ch = 0; ch < C; ++ch) {
                        const double g = self.grad[(i * P + j) * C + ch];
                        if (g == 0.0) continue;
                        const std::size_t i00 = (s.y0 * W + s.x0) * C + ch, i01 = (s.y0 * W + s.x1) * C + ch;
                        const std::size_t i10 = (s.y1 * W + s.x0) * C + ch, i11 = (s.y1 * W + s.x1) * C + ch;
                        accumulate(pm, i00, g * (1 - s.ly) * (1 - s.lx));
                        accumulate(pm, i01, g * (1 - s.ly) * s.lx);
                        accumulate(pm, i10, g * s.ly * (1 - s.lx));
                        accumulate(pm, i11, g * s.ly * s.lx);
                        const auto& val = pm.value;
                        if (s.x1 != s.x0)
                          dsx += g * ((1 - s.ly) * (val[i01] - val[i00]) + s.ly * (val[i11] - val[i10]));
                        if (s.y1 != s.y0)
                          dsy += g * ((1 - s.lx) * (val[i10] - val[i00]) + s.lx * (val[i11] - val[i01]));
                      }
                      accumulate(pb, 0, dsx * (1.0 - fx) * pass[0]);
                      accumulate(pb, 2, dsx * fx * pass[2]);
                      accumulate(pb, 1, dsy * (1.0 - fy) * pass[1]);
                      accumulate(pb, 3, dsy * fy * pass[3]);
                    }
                  }
                });
}

Tensor decode_box(const Anchor& anchor, const Tensor& delta) {
  require_dims(delta.rank() == 1 && delta.size() == 4, "decode_box: delta must have 4 values");
  const auto d = delta.data();
  const Box b = decode_values(anchor, d);
  const double ew = d[2] < kMaxLogDelta ? 1.0 : 0.0, eh = d[3] < kMaxLogDelta ? 1.0 : 0.0;
  const double half_w = 0.5 * (b.x2 - b.x1), half_h = 0.5 * (b.y2 - b.y1);
  const Anchor a = anchor;
  return record("decode_box", {4}, {b.x1, b.y1, b.x2, b.y2}, {delta},
                [a, ew, eh, half_w, half_h](detail::Node& self) {
                  auto& p = *self.parents[0];
                  const auto& g = self.grad;
                  accumulate(p, 0, (g[0] + g[2]) * a.w);
                  accumulate(p, 1, (g[1] + g[3]) * a.h);
                  accumulate(p, 2, (g[2] - g[0]) * half_w * ew);
                  accumulate(p, 3, (g[3] - g[1]) * half_h * eh);
                });
}

std::vector<std::size_t> nms(const std::vector<Box>& boxes, const std::vector<std::size_t>& order,
                             double iou_threshold, std::size_t limit) {
  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    if (kept.size() >= limit) break;
    bool suppressed = false;
    for (std::size_t k : kept) {
      if (iou(boxes[idx], boxes[k]) >= iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(idx);
  }
  return kept;
}

RpnOutput rpn_forward(const FeatureMap& map, const AnchorSet& anchors, const RpnParams& params,
                      const ProposalConfig& config) {
  require_dims(params.conv_w.rank() == 2 && params.conv_w.dim(1) == 9 * map.channels,
               "rpn_forward: conv weights expect " + std::to_string(params.conv_w.rank() == 2 ? params.conv_w.dim(1) / 9 : 0) +
                   " channels, map has " + std::to_string(map.channels));
  require_dims(anchors.height == map.height && anchors.width == map.width, "rpn_forward: anchors built for another map size");
  const std::size_t k = anchors.per_location;
  require_dims(params.cls_w.dim(0) == k && params.reg_w.dim(0) == 4 * k, "rpn_forward: head sizes do not match k");
  require(config.top_n >= 1, "rpn_forward: top_n must be >= 1");

  const std::size_t locations = map.height * map.width;
  const Tensor patches = window_patches(map);
  const Tensor hidden = ops::relu(ops::add_rows(ops::matmul(patches, ops::transpose(params.conv_w)), params.conv_b));
  const Tensor logits = ops::add_rows(ops::matmul(hidden, ops::transpose(params.cls_w)), params.cls_b);
  RpnOutput out;
  out.scores = ops::sigmoid(ops::reshape(logits, {locations * k}));
  out.deltas = ops::reshape(ops::add_rows(ops::matmul(hidden, ops::transpose(params.reg_w)), params.reg_b), {locations * k, 4});

  const std::size_t N = locations * k;
  std::vector<Box> boxes(N);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < N; ++i) {
    boxes[i] = clip_box(decode_values(anchors.anchors[i], out.deltas.data().subspan(i * 4, 4)), map.height, map.width);
    if (boxes[i].x2 > boxes[i].x1 && boxes[i].y2 > boxes[i].y1) order.push_back(i);
  }
  if (order.empty()) fail(ErrorKind::Contract, "rpn_forward: every proposal collapsed to zero area");
  const auto scores = out.scores.data();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const auto kept = nms(boxes, order, config.nms_iou, config.top_n);

  std::vector<Tensor> rows;
  for (std::size_t idx : kept) {
    const Tensor box = decode_box(anchors.anchors[idx], ops::row(out.deltas, idx));
    const Tensor pooled = bilinear_roi_pool(map, box, config.pool_size);
    rows.push_back(ops::reshape(pooled, {pooled.size()}));
    out.regions.boxes.push_back(boxes[idx]);
    out.regions.scores.push_back(scores[idx]);
  }
  out.regions.features = ops::stack_rows(rows);
  return out;
}

Tensor attribute_raw_probabilities(const Tensor& regions, const Tensor& attribute_embeddings, const Tensor& w_ap,
                                   const Tensor& w_v) {
  require_dims(regions.rank() == 2 && attribute_embeddings.rank() == 2 && w_ap.rank() == 2 && w_v.rank() == 2,
               "attribute_raw_probabilities: expected matrices");
  require_dims(w_ap.dim(1) == attribute_embeddings.dim(1), "attribute_raw_probabilities: W_AP must map e -> d");
  require_dims(w_v.dim(1) == regions.dim(1), "attribute_raw_probabilities: W_v must map h -> d");
  require_dims(w_ap.dim(0) == w_v.dim(0), "attribute_raw_probabilities: projections disagree on d");
  const Tensor attributes = ops::matmul(attribute_embeddings, ops::transpose(w_ap));  // {c, d}
  const Tensor projected = ops::matmul(w_v, ops::transpose(regions));                // {d, n}
  return ops::sigmoid(ops::matmul(attributes, projected));
}

Tensor noisy_or_aggregate(const Tensor& raw) {
  require_dims(raw.rank() == 2, "noisy_or_aggregate: expected a {c, n} matrix");
  const std::size_t c = raw.dim(0), n = raw.dim(1);
  const auto P = raw.data();
  for (double v : P) require(v >= 0.0 && v <= 1.0, "noisy_or_aggregate: entries must lie in [0, 1]");
  std::vector<double> out(c);
  for (std::size_t i = 0; i < c; ++i) {
    double miss = 1.0;
    for (std::size_t j = 0; j < n; ++j) miss *= 1.0 - P[i * n + j];
    out[i] = 1.0 - miss;
  }
  return record("noisy_or", {c}, std::move(out), {raw}, [c, n](detail::Node& self) {
    auto& p = *self.parents[0];
    std::vector<double> prefix(n + 1), suffix(n + 1);
    for (std::size_t i = 0; i < c; ++i) {
      prefix[0] = 1.0;
      for (std::size_t j = 0; j < n; ++j) prefix[j + 1] = prefix[j] * (1.0 - p.value[i * n + j]);
      suffix[n] = 1.0;
      for (std::size_t j = n; j > 0; --j) suffix[j - 1] = suffix[j] * (1.0 - p.value[i * n + j - 1]);
      for (std::size_t j = 0; j < n; ++j) accumulate(p, i * n + j, self.grad[i] * prefix[j] * suffix[j + 1]);
    }
  });
}

double focal_loss(double p, int label, double alpha, double gamma) {
  require(alpha > 0.0 && alpha < 1.0, "focal_loss: alpha must lie in (0, 1)");
  require(gamma >= 0.0, "focal_loss: gamma must be >= 0");
  const double q = clamp_probability(p);
  if (label == 1) return -alpha * std::pow(1.0 - q, gamma) * std::log(q);
  return -(1.0 - alpha) * std::pow(q, gamma) * std::log(1.0 - q);
}

Tensor focal_loss_terms(const Tensor& p, std::span<const int> labels, double alpha, double gamma) {
  require_dims(p.rank() == 1 && p.size() == labels.size(), "focal_loss_terms: one label per probability");
  std::vector<int> y(labels.begin(), labels.end());
  std::vector<double> out(p.size(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i)
    if (y[i] >= 0) out[i] = focal_loss(p.data()[i], y[i], alpha, gamma);
  return record("focal_loss", p.shape(), std::move(out), {p}, [y = std::move(y), alpha, gamma](detail::Node& self) {
    auto& pp = *self.parents[0];
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] >= 0) accumulate(pp, i, self.grad[i] * focal_derivative(pp.value[i], y[i], alpha, gamma));
  });
}

Tensor smooth_l1(const Tensor& pred, std::span<const double> target) {
  require_dims(pred.rank() == 1 && pred.size() == target.size(), "smooth_l1: size mismatch");
  std::vector<double> t(target.begin(), target.end());
  double total = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double x = pred.data()[i] - t[i];
    total += std::abs(x) < 1.0 ? 0.5 * x * x : std::abs(x) - 0.5;
  }
  return record("smooth_l1", {1}, {total}, {pred}, [t = std::move(t)](detail::Node& self) {
    auto& p = *self.parents[0];
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double x = p.value[i] - t[i];
      accumulate(p, i, self.grad[0] * (std::abs(x) < 1.0 ? x : (x > 0 ? 1.0 : -1.0)));
    }
  });
}

std::array<double, 4> encode_box(const Anchor& a, const Box& g) {
  const double gw = g.x2 - g.x1, gh = g.y2 - g.y1;
  require(gw > 0.0 && gh > 0.0, "encode_box: degenerate ground-truth box");
  const double gx = g.x1 + 0.5 * gw, gy = g.y1 + 0.5 * gh;
  return {(gx - a.cx) / a.w, (gy - a.cy) / a.h, std::log(gw / a.w), std::log(gh / a.h)};
}

DetectionTargets assign_anchor_targets(const AnchorSet& anchors, const std::vector<Box>& ground_truth, double pos_iou,
                                       double neg_iou) {
  const std::size_t N = anchors.anchors.size();
  DetectionTargets t;
  t.p_star.assign(N, 0);
  t.t_star.assign(N, {0, 0, 0, 0});
  if (ground_truth.empty()) return t;
  std::vector<double> best(N, 0.0);
  std::vector<std::size_t> best_gt(N, 0);
  for (std::size_t i = 0; i < N; ++i) {
    const Box ab = anchors.anchors[i].box();
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      const double o = iou(ab, ground_truth[g]);
      if (o > best[i]) {
        best[i] = o;
        best_gt[i] = g;
      }
    }
    t.p_star[i] = best[i] >= pos_iou ? 1 : (best[i] < neg_iou ? 0 : -1);
  }
  for (std::size_t g = 0; g < ground_truth.size(); ++g) {
    std::size_t arg = 0;
    double top = -1.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double o = iou(anchors.anchors[i].box(), ground_truth[g]);
      if (o > top) {
        top = o;
        arg = i;
      }
    }
    if (top > 0.0) {
      t.p_star[arg] = 1;
      best_gt[arg] = g;
    }
  }
  for (std::size_t i = 0; i < N; ++i)
    if (t.p_star[i] == 1) t.t_star[i] = encode_box(anchors.anchors[i], ground_truth[best_gt[i]]);
  return t;
}

Tensor detector_loss(const Tensor& scores, const Tensor& deltas, const DetectionTargets& targets,
                     const FrontendConfig& config) {
  const std::size_t N = scores.size();
  require_dims(targets.p_star.size() == N && targets.t_star.size() == N, "detector_loss: one target per anchor");
  require_dims(deltas.rank() == 2 && deltas.dim(0) == N && deltas.dim(1) == 4, "detector_loss: deltas must be {N, 4}");
  const auto n_cls = static_cast<std::size_t>(std::count_if(targets.p_star.begin(), targets.p_star.end(), [](int y) { return y >= 0; }));
  Tensor cls = ops::scale(ops::sum(focal_loss_terms(scores, targets.p_star, config.detector_alpha, config.detector_gamma)),
                          1.0 / static_cast<double>(std::max<std::size_t>(n_cls, 1)));
  std::vector<Tensor> reg_terms;
  for (std::size_t i = 0; i < N; ++i)
    if (targets.p_star[i] == 1) reg_terms.push_back(smooth_l1(ops::row(deltas, i), targets.t_star[i]));
  if (reg_terms.empty()) return cls;
  const Tensor reg = ops::sum(ops::concat(reg_terms));
  return ops::add(cls, ops::scale(reg, config.lambda / static_cast<double>(reg_terms.size())));
}

Tensor attribute_loss(const Tensor& p, std::span<const int> targets, const FrontendConfig& config) {
  require_dims(p.size() == targets.size(), "attribute_loss: one target per attribute");
  const auto n_pos = std::count(targets.begin(), targets.end(), 1);
  if (n_pos == 0) return {};
  return ops::scale(ops::sum(focal_loss_terms(p, targets, config.attribute_alpha, config.attribute_gamma)),
                    1.0 / static_cast<double>(n_pos));
}

Tensor combine_frontend(const Tensor& detector, const Tensor& attribute, double attribute_weight) {
  return ops::add(detector, ops::scale(attribute, attribute_weight));
}

FrontendLosses frontend_losses(const Tensor& scores, const Tensor& deltas, const Tensor& p,
                               const DetectionTargets& targets, const FrontendConfig& config) {
  FrontendLosses out;
  out.detector = scores.defined() ? detector_loss(scores, deltas, targets, config) : Tensor::scalar(0.0);
  out.attribute = attribute_loss(p, targets.attribute_targets, config);
  if (!out.attribute.defined()) {
    out.attribute = Tensor::scalar(0.0);
    out.attribute_term_skipped = true;
  }
  out.total = combine_frontend(out.detector, out.attribute, config.attribute_weight);
  return out;
}

}  // namespace scfc
