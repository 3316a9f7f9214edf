// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scfc/corpus.hpp"
#include "scfc/metrics.hpp"
#include "scfc/model.hpp"

namespace scfc {

enum class Round { CrossEntropy, SelfCritical };

const char* to_string(Round round);

struct TrainingSample {
  std::string image_id;
  Tensor regions;                 // V; ignored when `map` is set
  std::optional<FeatureMap> map;  // backbone output for the region detector
  std::vector<std::vector<std::size_t>> captions;  // token ids, each ending with the end token
  std::vector<Sentence> references;                // tokenized captions for rewards
  DetectionTargets targets;       // attribute targets; anchor targets when `map` is set
};

struct TrainConfig {
  Round round = Round::CrossEntropy;
  std::size_t epochs = 1;
  std::size_t batch_size = 8;
  double learning_rate = 1e-4;
  double clip_norm = 5.0;
  std::size_t max_len = 20;
  std::uint64_t seed = 1;
  bool include_frontend = true;
  // The RL round refuses to start from freshly initialized parameters.
  bool initialized_from_checkpoint = false;
};

// L_o = L_cap + L_VDAP.
Tensor overall_loss(const Tensor& caption, const Tensor& frontend);

struct StepReport {
  double loss = 0.0;
  double reward_mean = 0.0;
  double baseline_mean = 0.0;
  bool updated = false;
};

struct EpochReport {
  std::size_t epoch = 0;
  Round round = Round::CrossEntropy;
  double loss = 0.0;
  double reward_mean = 0.0;
  double baseline_mean = 0.0;
  std::size_t steps = 0;
  std::size_t skipped_steps = 0;
};

std::string to_json_line(const EpochReport& report);

// Caption reward for a sampled token sequence.
using RewardFunction = std::function<double(const std::vector<std::size_t>& tokens, const TrainingSample& sample)>;

// CIDEr-D against the sample's references, document frequencies from the
// references of `corpus`.
RewardFunction cider_reward(const std::vector<TrainingSample>& corpus, const Vocabulary& vocab);

class Trainer {
 public:
  Trainer(ScfcModel& model, TrainConfig config, const std::vector<TrainingSample>& data, RewardFunction reward = {});

  // One update on a batch of (image, caption) pairs with teacher forcing.
  StepReport xe_step(std::span<const std::pair<const TrainingSample*, std::size_t>> batch);
  // Self-critical update: one multinomial sample and one greedy baseline per
  // image. When every advantage is zero and no frontend loss applies, nothing
  // is updated.
  StepReport scst_step(std::span<const TrainingSample* const> batch);

  EpochReport run_epoch();
  std::vector<EpochReport> run(const std::function<void(const EpochReport&)>& on_epoch = {});

  OptimizerState& optimizer() { return optimizer_; }
  Rng& rng() { return rng_; }

 private:
  Tensor regions_for(const TrainingSample& sample, std::optional<RpnOutput>& detection) const;
  Tensor frontend_term(const TrainingSample& sample, const Tensor& regions, const std::optional<RpnOutput>& detection) const;
  void apply_update();

  ScfcModel& model_;
  TrainConfig config_;
  const std::vector<TrainingSample>& data_;
  RewardFunction reward_;
  OptimizerState optimizer_;
  Rng rng_;
  std::size_t epoch_ = 0;
};

// Decodes every image; beam 1 is greedy.
CaptionSet caption_images(const ScfcModel& model, const Vocabulary& vocab,
                          const std::vector<std::pair<std::string, Tensor>>& images, std::size_t beam,
                          std::size_t max_len);

}  // namespace scfc
