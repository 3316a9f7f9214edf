// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "scfc/model.hpp"

#include <cmath>

#include "scfc/error.hpp"

namespace scfc {

void validate(const ModelConfig& c) {
  const auto positive = [](std::size_t v, const char* name) {
    if (v == 0) fail(ErrorKind::Usage, std::string("model: ") + name + " must be positive");
  };
  positive(c.vocab_size, "vocab_size");
  positive(c.embed_dim, "embed_dim");
  positive(c.region_dim, "region_dim");
  positive(c.joint_dim, "joint_dim");
  positive(c.attention_hidden, "attention_hidden");
  positive(c.decoder_hidden, "decoder_hidden");
  positive(c.layers, "layers");
  if (c.attribute_ids.empty()) fail(ErrorKind::Usage, "model: the attribute catalog is empty");
  for (std::size_t id : c.attribute_ids) {
    if (id >= c.vocab_size) fail(ErrorKind::Usage, "model: attribute id " + std::to_string(id) + " outside vocabulary");
  }
  if (c.bos_id >= c.vocab_size || c.eos_id >= c.vocab_size) fail(ErrorKind::Usage, "model: special ids outside vocabulary");
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) fail(ErrorKind::Usage, "model: dropout must lie in [0, 1)");
  if (c.use_detector) {
    positive(c.map_channels, "map_channels");
    positive(c.rpn_hidden, "rpn_hidden");
    positive(c.proposals.pool_size, "pool_size");
    positive(c.proposals.top_n, "top_n");
    const std::size_t pooled = c.proposals.pool_size * c.proposals.pool_size * c.map_channels;
    if (pooled != c.region_dim) {
      fail(ErrorKind::Usage, "model: region_dim " + std::to_string(c.region_dim) + " must equal pool^2 * channels = " +
                                 std::to_string(pooled));
    }
  }
}

namespace {

Tensor add_vector(ParameterStore& store, const std::string& name, std::size_t n, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(n + 1));
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-a, a);
  return store.add(name, Tensor::vector(std::move(v), true));
}

}  // namespace

ScfcModel::ScfcModel(ModelConfig config, Rng& rng) : config_(std::move(config)) {
  validate(config_);
  const auto& c = config_;
  const std::size_t e = c.embed_dim, h = c.region_dim, d = c.joint_dim;
  const std::size_t ha = c.attention_hidden, hd = c.decoder_hidden;

  params_.add_matrix("embedding", c.vocab_size, e, rng);
  params_.add_matrix("attribute.w_ap", d, e, rng);
  params_.add_matrix("attribute.w_v", d, h, rng);
  if (c.use_detector) {
    const std::size_t k = c.anchors.scales.size() * c.anchors.ratios.size();
    params_.add_matrix("rpn.conv_w", c.rpn_hidden, 9 * c.map_channels, rng);
    params_.add_zeros("rpn.conv_b", {c.rpn_hidden});
    params_.add_matrix("rpn.cls_w", k, c.rpn_hidden, rng);
    params_.add_zeros("rpn.cls_b", {k});
    params_.add_matrix("rpn.reg_w", 4 * k, c.rpn_hidden, rng);
    params_.add_zeros("rpn.reg_b", {4 * k});
  }
  params_.add_matrix("att_lstm.w", 4 * ha, hd + h + e, rng);
  params_.add_matrix("att_lstm.r", 4 * ha, ha, rng);
  params_.add_zeros("att_lstm.b", {4 * ha});
  if (c.use_caa) params_.add_matrix("caa.proj", e, ha, rng);
  for (std::size_t s = 0; s < c.layers; ++s) {
    const std::string prefix = "cfc" + std::to_string(s + 1) + ".";
    CfcLayerParams layer;
    layer.w_v = params_.add_matrix(prefix + "w_v", d, h, rng);
    layer.w_h = params_.add_matrix(prefix + "w_h", d, e, rng);
    layer.w_d = add_vector(params_, prefix + "w_d", d, rng);
    layer.w_proj = params_.add_matrix(prefix + "w_proj", e, h, rng);
    layers_.push_back(layer);
  }
  params_.add_matrix("decoder.w", 4 * hd, e, rng);
  params_.add_matrix("decoder.r", 4 * hd, hd, rng);
  params_.add_zeros("decoder.b", {4 * hd});
  params_.add_zeros("decoder.p_i", {hd});
  params_.add_zeros("decoder.p_f", {hd});
  params_.add_zeros("decoder.p_o", {hd});
  if (c.inject_consolidated) params_.add_matrix("decoder.w_u", hd, e + ha, rng);
  params_.add_matrix("output.w", c.vocab_size, hd, rng);
}

LstmParams ScfcModel::attention_params() const {
  return {params_.get("att_lstm.w"), params_.get("att_lstm.r"), params_.get("att_lstm.b")};
}

PeepholeLstmParams ScfcModel::decoder_params() const {
  PeepholeLstmParams p{params_.get("decoder.w"),   params_.get("decoder.r"),   params_.get("decoder.b"),
                       params_.get("decoder.p_i"), params_.get("decoder.p_f"), params_.get("decoder.p_o"),
                       {}};
  if (config_.inject_consolidated) p.w_u = params_.get("decoder.w_u");
  return p;
}

RpnParams ScfcModel::rpn_params() const {
  require(config_.use_detector, "model has no region detector");
  return {params_.get("rpn.conv_w"), params_.get("rpn.conv_b"), params_.get("rpn.cls_w"),
          params_.get("rpn.cls_b"),  params_.get("rpn.reg_w"),  params_.get("rpn.reg_b")};
}

ImageContext ScfcModel::encode(const Tensor& regions) const {
  require(regions.defined() && regions.rank() == 2 && regions.dim(0) > 0, "encode: regions must be a non-empty {n, h} matrix");
  require_dims(regions.dim(1) == config_.region_dim, "encode: region width " + std::to_string(regions.dim(1)) +
                                                         " but the model expects " + std::to_string(config_.region_dim));
  ImageContext ctx;
  ctx.regions = regions;
  ctx.mean_region = mean_pool_regions(regions);
  ctx.attribute_embeddings = ops::gather_rows(params_.get("embedding"), config_.attribute_ids);
  return ctx;
}

ModelState ScfcModel::initial_state() const {
  return {zero_attention_context(config_.attention_hidden), zero_decoder_state(config_.decoder_hidden)};
}

StepOutput ScfcModel::step(const ImageContext& image, const ModelState& state, std::size_t previous_token,
                           Rng* dropout_rng) const {
  require(previous_token < config_.vocab_size, "step: token id " + std::to_string(previous_token) + " outside vocabulary");
  const std::size_t ids[] = {previous_token};
  Tensor word = ops::reshape(ops::gather_rows(params_.get("embedding"), ids), {config_.embed_dim});
  if (dropout_rng && config_.dropout > 0.0) word = ops::dropout(word, config_.dropout, *dropout_rng);

  StepOutput out;
  out.state.attention =
      attention_lstm_step(attention_params(), state.decoder.h, image.mean_region, word, state.attention);
  const Tensor& h_att = out.state.attention.h;
  out.attributes = config_.use_caa ? caa_attend(h_att, params_.get("caa.proj"), image.attribute_embeddings)
                                   : uniform_attributes(image.attribute_embeddings);
  out.consolidated = scfc_forward(image.regions, out.attributes.caa, h_att, layers_);
  out.state.decoder = peephole_lstm_step(decoder_params(), state.decoder, word, out.consolidated.fused);
  Tensor hidden = out.state.decoder.h;
  if (dropout_rng && config_.dropout > 0.0) hidden = ops::dropout(hidden, config_.dropout, *dropout_rng);
  out.log_probs = word_log_distribution(hidden, params_.get("output.w"));
  return out;
}

Tensor ScfcModel::sequence_log_prob(const ImageContext& image, std::span<const std::size_t> tokens,
                                    Rng* dropout_rng) const {
  require(!tokens.empty(), "sequence_log_prob: empty token sequence");
  ModelState state = initial_state();
  std::size_t previous = config_.bos_id;
  std::vector<Tensor> terms;
  terms.reserve(tokens.size());
  for (std::size_t token : tokens) {
    require(token < config_.vocab_size, "sequence_log_prob: token id " + std::to_string(token) + " outside vocabulary");
    StepOutput out = step(image, state, previous, dropout_rng);
    terms.push_back(ops::pick(out.log_probs, token));
    state = std::move(out.state);
    previous = token;
  }
  return ops::sum(ops::concat(terms));
}

Tensor ScfcModel::caption_loss(const Tensor& regions, std::span<const std::size_t> tokens, Rng* dropout_rng) const {
  require(!tokens.empty() && tokens.back() == config_.eos_id, "caption_loss: target must end with the end token");
  return ops::scale(sequence_log_prob(encode(regions), tokens, dropout_rng), -1.0);
}

Tensor ScfcModel::attribute_probabilities(const Tensor& regions) const {
  const Tensor ea = ops::gather_rows(params_.get("embedding"), config_.attribute_ids);
  return noisy_or_aggregate(
      attribute_raw_probabilities(regions, ea, params_.get("attribute.w_ap"), params_.get("attribute.w_v")));
}

RpnOutput ScfcModel::detect(const FeatureMap& map) const {
  require_dims(map.channels == config_.map_channels, "detect: feature map has " + std::to_string(map.channels) +
                                                         " channels, model expects " +
                                                         std::to_string(config_.map_channels));
  const AnchorSet anchors = generate_anchors(map.height, map.width, config_.anchors);
  return rpn_forward(map, anchors, rpn_params(), config_.proposals);
}

FrontendLosses ScfcModel::frontend_loss(const Tensor& regions, const DetectionTargets& targets,
                                        const RpnOutput* detection) const {
  require_dims(targets.attribute_targets.size() == config_.attribute_ids.size(),
               "frontend_loss: one attribute target per catalog entry");
  const Tensor p = attribute_probabilities(regions);
  if (detection != nullptr && !targets.p_star.empty()) {
    return frontend_losses(detection->scores, detection->deltas, p, targets, config_.frontend);
  }
  return frontend_losses({}, {}, p, targets, config_.frontend);
}

StepFunction<ModelState> ScfcModel::step_function(const ImageContext& image) const {
  return [this, image](const ModelState& state, std::size_t token) {
    StepOutput out = step(image, state, token);
    return std::make_pair(std::move(out.state), out.log_probs.to_vector());
  };
}

TokenSequence ScfcModel::greedy(const Tensor& regions, std::size_t max_len) const {
  NoGradGuard guard;
  const ImageContext image = encode(regions);
  return greedy_decode(step_function(image), initial_state(), config_.bos_id, config_.eos_id, max_len);
}

BeamResult ScfcModel::beam(const Tensor& regions, std::size_t beam_size, std::size_t max_len) const {
  NoGradGuard guard;
  const ImageContext image = encode(regions);
  return beam_search_decode(step_function(image), initial_state(), config_.bos_id, config_.eos_id, max_len, beam_size);
}

TokenSequence ScfcModel::sample(const Tensor& regions, std::size_t max_len, Rng& rng) const {
  require(max_len >= 1, "sample: max_len must be at least 1");
  NoGradGuard guard;
  const ImageContext image = encode(regions);
  ModelState state = initial_state();
  std::size_t previous = config_.bos_id;
  TokenSequence out;
  for (std::size_t t = 0; t < max_len; ++t) {
    StepOutput step_out = step(image, state, previous);
    const std::vector<double> log_probs = step_out.log_probs.to_vector();
    std::vector<double> probs(log_probs.size());
    for (std::size_t k = 0; k < probs.size(); ++k) probs[k] = std::exp(log_probs[k]);
    const std::size_t token = rng.categorical(probs);
    out.tokens.push_back(token);
    out.log_prob += log_probs[token];
    state = std::move(step_out.state);
    previous = token;
    if (token == config_.eos_id) break;
  }
  return out;
}

}  // namespace scfc
