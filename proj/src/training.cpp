// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "scfc/training.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"

#include "scfc/error.hpp"

namespace scfc {

const char* to_string(Round round) { return round == Round::CrossEntropy ? "xe" : "rl"; }

Tensor overall_loss(const Tensor& caption, const Tensor& frontend) { return ops::add(caption, frontend); }

std::string to_json_line(const EpochReport& r) {
  nlohmann::json j;
  j["epoch"] = r.epoch;
  j["round"] = to_string(r.round);
  j["loss"] = r.loss;
  j["steps"] = r.steps;
  if (r.round == Round::SelfCritical) {
    j["reward_mean"] = r.reward_mean;
    j["baseline_mean"] = r.baseline_mean;
    j["skipped_steps"] = r.skipped_steps;
  }
  return j.dump();
}

RewardFunction cider_reward(const std::vector<TrainingSample>& corpus, const Vocabulary& vocab) {
  std::vector<std::vector<Sentence>> refs;
  for (const auto& s : corpus) refs.push_back(s.references);
  auto scorer = std::make_shared<const CiderD>(refs);
  return [scorer, &vocab](const std::vector<std::size_t>& tokens, const TrainingSample& sample) {
    return scorer->score(vocab.decode(tokens), sample.references);
  };
}

Trainer::Trainer(ScfcModel& model, TrainConfig config, const std::vector<TrainingSample>& data, RewardFunction reward)
    : model_(model),
      config_(config),
      data_(data),
      reward_(std::move(reward)),
      optimizer_(make_optimizer(model.parameters(), AdamConfig{config.learning_rate})),
      rng_(config.seed) {
  if (config_.batch_size == 0) fail(ErrorKind::Usage, "train: batch size must be positive");
  if (!(config_.learning_rate > 0.0)) fail(ErrorKind::Usage, "train: learning rate must be positive");
  if (!(config_.clip_norm > 0.0)) fail(ErrorKind::Usage, "train: clip norm must be positive");
  if (config_.round == Round::SelfCritical) {
    if (!config_.initialized_from_checkpoint) {
      fail(ErrorKind::Precondition, "the RL round needs parameters from a cross-entropy checkpoint");
    }
    if (!reward_) fail(ErrorKind::Usage, "the RL round needs a reward function");
  }
}

Tensor Trainer::regions_for(const TrainingSample& sample, std::optional<RpnOutput>& detection) const {
  if (sample.map) {
    detection = model_.detect(*sample.map);
    return detection->regions.features;
  }
  require(sample.regions.defined(), "training sample '" + sample.image_id + "' has no region features");
  return sample.regions;
}

Tensor Trainer::frontend_term(const TrainingSample& sample, const Tensor& regions,
                              const std::optional<RpnOutput>& detection) const {
  if (!config_.include_frontend) return Tensor::scalar(0.0);
  return model_.frontend_loss(regions, sample.targets, detection ? &*detection : nullptr).total;
}

void Trainer::apply_update() {
  for (const auto& [name, t] : model_.parameters().entries()) {
    for (double g : t.grad()) {
      if (!std::isfinite(g)) fail(ErrorKind::Numeric, "non-finite gradient in parameter '" + name + "'");
    }
  }
  clip_global_norm(model_.parameters(), config_.clip_norm);
  adam_step(model_.parameters(), optimizer_);
  const std::string bad = model_.parameters().first_non_finite();
  if (!bad.empty()) fail(ErrorKind::Numeric, "update produced a non-finite value in parameter '" + bad + "'");
}

StepReport Trainer::xe_step(std::span<const std::pair<const TrainingSample*, std::size_t>> batch) {
  StepReport report;
  if (batch.empty()) return report;
  model_.parameters().zero_grad();
  std::vector<Tensor> losses;
  for (const auto& [sample, k] : batch) {
    std::optional<RpnOutput> detection;
    const Tensor v = regions_for(*sample, detection);
    const Tensor cap = model_.caption_loss(v, sample->captions.at(k), &rng_);
    losses.push_back(overall_loss(cap, frontend_term(*sample, v, detection)));
  }
  const Tensor loss = ops::scale(ops::sum(ops::concat(losses)), 1.0 / static_cast<double>(losses.size()));
  report.loss = loss.item();
  loss.backward();
  apply_update();
  report.updated = true;
  return report;
}

StepReport Trainer::scst_step(std::span<const TrainingSample* const> batch) {
  StepReport report;
  if (batch.empty()) return report;
  struct Rollout {
    TokenSequence sampled;
    double advantage = 0.0;
  };
  // Rewards first; a failing reward leaves the parameters untouched.
  std::vector<Rollout> rollouts;
  for (const TrainingSample* sample : batch) {
    std::optional<RpnOutput> detection;
    Tensor v;
    {
      NoGradGuard no_grad;
      v = regions_for(*sample, detection).detach();
    }
    Rollout r;
    const TokenSequence baseline = model_.greedy(v, config_.max_len);
    r.sampled = model_.sample(v, config_.max_len, rng_);
    const double rs = reward_(r.sampled.tokens, *sample);
    const double rb = reward_(baseline.tokens, *sample);
    if (!std::isfinite(rs) || !std::isfinite(rb)) {
      fail(ErrorKind::Numeric, "reward for image '" + sample->image_id + "' is not finite");
    }
    r.advantage = rs - rb;
    report.reward_mean += rs;
    report.baseline_mean += rb;
    rollouts.push_back(std::move(r));
  }
  const double n = static_cast<double>(batch.size());
  report.reward_mean /= n;
  report.baseline_mean /= n;

  bool any_signal = config_.include_frontend;
  for (const auto& r : rollouts) any_signal = any_signal || r.advantage != 0.0;
  if (!any_signal) return report;

  model_.parameters().zero_grad();
  std::vector<Tensor> losses;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const TrainingSample& sample = *batch[i];
    std::optional<RpnOutput> detection;
    const Tensor v = regions_for(sample, detection);
    Tensor cap = Tensor::scalar(0.0);
    if (rollouts[i].advantage != 0.0) {
      const Tensor log_p = model_.sequence_log_prob(model_.encode(v), rollouts[i].sampled.tokens, &rng_);
      cap = ops::scale(log_p, -rollouts[i].advantage);
    }
    losses.push_back(overall_loss(cap, frontend_term(sample, v, detection)));
  }
  const Tensor loss = ops::scale(ops::sum(ops::concat(losses)), 1.0 / n);
  report.loss = loss.item();
  loss.backward();
  apply_update();
  report.updated = true;
  return report;
}

EpochReport Trainer::run_epoch() {
  EpochReport report;
  report.epoch = ++epoch_;
  report.round = config_.round;
  const auto shuffle = [&](auto& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng_.uniform() * static_cast<double>(i));
      std::swap(items[i - 1], items[std::min(j, i - 1)]);
    }
  };
  double loss_total = 0.0;
  if (config_.round == Round::CrossEntropy) {
    std::vector<std::pair<const TrainingSample*, std::size_t>> units;
    for (const auto& s : data_)
      for (std::size_t k = 0; k < s.captions.size(); ++k) units.emplace_back(&s, k);
    shuffle(units);
    for (std::size_t b = 0; b < units.size(); b += config_.batch_size) {
      const std::size_t len = std::min(config_.batch_size, units.size() - b);
      const StepReport step = xe_step(std::span(units).subspan(b, len));
      loss_total += step.loss;
      ++report.steps;
    }
  } else {
    std::vector<const TrainingSample*> units;
    for (const auto& s : data_) units.push_back(&s);
    shuffle(units);
    for (std::size_t b = 0; b < units.size(); b += config_.batch_size) {
      const std::size_t len = std::min(config_.batch_size, units.size() - b);
      const StepReport step = scst_step(std::span(units).subspan(b, len));
      loss_total += step.loss;
      report.reward_mean += step.reward_mean;
      report.baseline_mean += step.baseline_mean;
      if (!step.updated) ++report.skipped_steps;
      ++report.steps;
    }
    if (report.steps) {
      report.reward_mean /= static_cast<double>(report.steps);
      report.baseline_mean /= static_cast<double>(report.steps);
    }
  }
  if (report.steps) report.loss = loss_total / static_cast<double>(report.steps);
  return report;
}

std::vector<EpochReport> Trainer::run(const std::function<void(const EpochReport&)>& on_epoch) {
  std::vector<EpochReport> log;
  if (data_.empty()) return log;
  for (std::size_t e = 0; e < config_.epochs; ++e) {
    log.push_back(run_epoch());
    if (on_epoch) on_epoch(log.back());
  }
  return log;
}

CaptionSet caption_images(const ScfcModel& model, const Vocabulary& vocab,
                          const std::vector<std::pair<std::string, Tensor>>& images, std::size_t beam,
                          std::size_t max_len) {
  CaptionSet out;
  for (const auto& [id, regions] : images) {
    const TokenSequence seq = beam <= 1 ? model.greedy(regions, max_len) : model.beam(regions, beam, max_len).best;
    out[id] = {join_tokens(vocab.decode(seq.tokens))};
  }
  return out;
}

}  // namespace scfc
