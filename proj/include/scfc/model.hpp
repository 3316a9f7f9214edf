// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "scfc/caa.hpp"
#include "scfc/decoder.hpp"
#include "scfc/detector.hpp"
#include "scfc/optim.hpp"
#include "scfc/random.hpp"
#include "scfc/scfc_stack.hpp"

namespace scfc {

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 1000;         // e
  std::size_t region_dim = 2048;        // h
  std::size_t joint_dim = 1000;         // d
  std::size_t attention_hidden = 1000;  // attention LSTM size
  std::size_t decoder_hidden = 1000;    // language LSTM size
  std::size_t layers = 3;               // S
  std::vector<std::size_t> attribute_ids;  // vocabulary ids of the c attributes
  std::size_t bos_id = 0;
  std::size_t eos_id = 0;
  std::uint64_t vocab_hash = 0;
  bool use_caa = true;
  bool inject_consolidated = true;
  double dropout = 0.0;

  // Region detector on a backbone feature map. When off, region features are
  // supplied directly and only the attribute predictor is trained.
  bool use_detector = false;
  std::size_t map_channels = 0;
  std::size_t rpn_hidden = 0;
  AnchorConfig anchors;
  ProposalConfig proposals;
  FrontendConfig frontend;
};

void validate(const ModelConfig& config);

// Per-image quantities that do not change across decoding steps.
struct ImageContext {
  Tensor regions;               // V, {n, h}
  Tensor mean_region;           // v̄
  Tensor attribute_embeddings;  // EA, {c, e}
};

struct ModelState {
  AttentionContext attention;
  DecoderState decoder;
};

struct StepOutput {
  ModelState state;
  Tensor log_probs;  // {|vocab|}
  CaaResult attributes;
  ConsolidatedFeature consolidated;
};

class ScfcModel {
 public:
  ScfcModel(ModelConfig config, Rng& rng);
  ScfcModel(const ScfcModel&) = delete;
  ScfcModel& operator=(const ScfcModel&) = delete;
  ScfcModel(ScfcModel&&) = default;
  ScfcModel& operator=(ScfcModel&&) = default;

  const ModelConfig& config() const { return config_; }
  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }

  ImageContext encode(const Tensor& regions) const;
  ModelState initial_state() const;

  // Consumes `previous_token` and predicts the next one. Dropout applies only
  // when `dropout_rng` is given.
  StepOutput step(const ImageContext& image, const ModelState& state, std::size_t previous_token,
                  Rng* dropout_rng = nullptr) const;

  // Teacher-forced Σ_t log p(y_t | y_<t).
  Tensor sequence_log_prob(const ImageContext& image, std::span<const std::size_t> tokens,
                           Rng* dropout_rng = nullptr) const;

  // -Σ_t log p(y_t | y_<t); `tokens` must end with the end token.
  Tensor caption_loss(const Tensor& regions, std::span<const std::size_t> tokens, Rng* dropout_rng = nullptr) const;

  // Noisy-OR attribute probabilities p, {c}.
  Tensor attribute_probabilities(const Tensor& regions) const;

  RpnOutput detect(const FeatureMap& map) const;

  // L_VDAP for one image. Without a detector, or without detection targets,
  // L_VD is zero.
  FrontendLosses frontend_loss(const Tensor& regions, const DetectionTargets& targets,
                               const RpnOutput* detection = nullptr) const;

  TokenSequence greedy(const Tensor& regions, std::size_t max_len) const;
  BeamResult beam(const Tensor& regions, std::size_t beam_size, std::size_t max_len) const;
  // Draws every token from the model distribution; no gradient is recorded.
  TokenSequence sample(const Tensor& regions, std::size_t max_len, Rng& rng) const;

  StepFunction<ModelState> step_function(const ImageContext& image) const;

 private:
  LstmParams attention_params() const;
  PeepholeLstmParams decoder_params() const;
  RpnParams rpn_params() const;
  const std::vector<CfcLayerParams>& layers() const { return layers_; }

  ModelConfig config_;
  ParameterStore params_;
  std::vector<CfcLayerParams> layers_;
};

}  // namespace scfc
