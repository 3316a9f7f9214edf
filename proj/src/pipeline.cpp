// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "scfc/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "scfc/error.hpp"

namespace scfc {
namespace fs = std::filesystem;
namespace {

constexpr const char* kFeatureExtension = ".feat";

std::string vocab_path(const RunConfig& run) {
  if (!run.vocab.empty()) return run.vocab;
  return run.checkpoint + ".vocab";
}

void require_path(const std::string& value, const char* key) {
  if (value.empty()) fail(ErrorKind::Usage, std::string("missing required option '") + key + "'");
}

void require_directory(const std::string& dir, const char* key) {
  require_path(dir, key);
  if (!fs::is_directory(dir)) fail(ErrorKind::Io, std::string(key) + " directory '" + dir + "' does not exist");
}

void emit(const RunConfig& run, const std::string& text) {
  if (!run.out.empty()) write_file_atomic(run.out, text);
}

nlohmann::json metrics_json(const MetricReport& r) {
  return {{"bleu_1", r.bleu[0]}, {"bleu_2", r.bleu[1]}, {"bleu_3", r.bleu[2]}, {"bleu_4", r.bleu[3]},
          {"rouge_l", r.rouge_l}, {"cider_d", r.cider_d}, {"images", r.images}};
}

struct TrainedModel {
  ScfcModel model;
  std::vector<EpochReport> log;
};

TrainedModel train_model(const RunConfig& run, const Vocabulary& vocab, const AttributeCatalog& catalog,
                         const std::vector<TrainingSample>& samples) {
  Rng init_rng(run.seed);
  TrainedModel out{ScfcModel(model_config(run, vocab, catalog), init_rng), {}};
  TrainConfig tc = train_config(run);
  if (!run.init_checkpoint.empty()) {
    load_checkpoint(run.init_checkpoint, out.model);
    tc.initialized_from_checkpoint = true;
  }
  RewardFunction reward;
  if (tc.round == Round::SelfCritical && !samples.empty()) reward = cider_reward(samples, vocab);
  if (tc.round == Round::SelfCritical && samples.empty()) reward = [](const auto&, const auto&) { return 0.0; };
  Trainer trainer(out.model, tc, samples, reward);
  out.log = trainer.run();
  return out;
}

}  // namespace

ModelConfig model_config(const RunConfig& run, const Vocabulary& vocab, const AttributeCatalog& catalog) {
  ModelConfig c;
  c.vocab_size = vocab.size();
  c.embed_dim = run.embed_dim;
  c.region_dim = run.region_dim;
  c.joint_dim = run.joint_dim;
  c.attention_hidden = run.attention_hidden;
  c.decoder_hidden = run.decoder_hidden;
  c.layers = run.layers;
  c.attribute_ids = catalog.ids;
  c.bos_id = vocab.bos_id();
  c.eos_id = vocab.eos_id();
  c.vocab_hash = vocab.hash();
  c.use_caa = run.use_caa;
  c.inject_consolidated = run.inject_consolidated;
  c.dropout = run.dropout;
  c.proposals.top_n = run.regions;
  return c;
}

TrainConfig train_config(const RunConfig& run) {
  TrainConfig t;
  t.round = run.round == "rl" ? Round::SelfCritical : Round::CrossEntropy;
  t.epochs = run.epochs;
  t.batch_size = run.batch_size;
  t.learning_rate = run.learning_rate;
  t.clip_norm = run.clip_norm;
  t.max_len = run.max_len;
  t.seed = run.seed;
  t.include_frontend = run.include_frontend;
  return t;
}

AttributeCatalog catalog_from_vocabulary(const Vocabulary& vocab, std::size_t count) {
  require(count >= 1, "attribute catalog: need at least one attribute");
  AttributeCatalog catalog;
  for (std::size_t id = 0; id < vocab.size() && catalog.size() < count; ++id) {
    if (id == vocab.unk_id() || id == vocab.bos_id() || id == vocab.eos_id()) continue;
    catalog.ids.push_back(id);
    catalog.words.push_back(vocab.token(id));
  }
  if (catalog.size() < count) {
    fail(ErrorKind::Usage, "attribute catalog: asked for " + std::to_string(count) + " attributes but the vocabulary has " +
                               std::to_string(catalog.size()) + " regular words");
  }
  return catalog;
}

std::vector<std::pair<std::string, Tensor>> load_feature_directory(const std::string& dir) {
  require_directory(dir, "features");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == kFeatureExtension) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<std::pair<std::string, Tensor>> out;
  for (const auto& f : files) out.emplace_back(f.stem().string(), read_region_features(f));
  return out;
}

std::vector<TrainingSample> build_samples(const CaptionSet& captions, const Vocabulary& vocab,
                                          const AttributeCatalog& catalog, const std::string& features_dir) {
  require_directory(features_dir, "features");
  std::vector<TrainingSample> samples;
  for (const auto& [id, list] : captions) {
    if (list.empty()) continue;
    TrainingSample s;
    s.image_id = id;
    s.regions = read_region_features(fs::path(features_dir) / (id + kFeatureExtension));
    for (const auto& c : list) {
      auto words = tokenize_caption(c);
      s.captions.push_back(vocab.encode(words));
      s.references.push_back(std::move(words));
    }
    s.targets.attribute_targets = attribute_targets(list, catalog);
    samples.push_back(std::move(s));
  }
  return samples;
}

std::string run_train(const RunConfig& run) {
  require_path(run.captions, "captions");
  require_path(run.checkpoint, "checkpoint");
  if (run.round == "rl" && run.init_checkpoint.empty()) {
    fail(ErrorKind::Precondition, "the RL round needs --init-checkpoint from a cross-entropy run");
  }
  const CaptionSet captions = read_captions(run.captions);
  const Vocabulary vocab = build_vocabulary(captions, run.min_count);
  const AttributeCatalog catalog = catalog_from_vocabulary(vocab, run.attributes);
  const std::vector<TrainingSample> samples = build_samples(captions, vocab, catalog, run.features);

  TrainedModel trained = train_model(run, vocab, catalog, samples);
  std::string log;
  for (const auto& e : trained.log) log += to_json_line(e) + "\n";
  write_vocabulary(vocab_path(run), vocab);
  write_file_atomic(run.log.empty() ? run.checkpoint + ".log.jsonl" : run.log, log);
  save_checkpoint(run.checkpoint, trained.model);
  return log;
}

std::string run_caption(const RunConfig& run) {
  require_path(run.checkpoint, "checkpoint");
  const auto images = load_feature_directory(run.features);
  const Vocabulary vocab = read_vocabulary(vocab_path(run));
  const AttributeCatalog catalog = catalog_from_vocabulary(vocab, run.attributes);
  Rng rng(run.seed);
  ScfcModel model(model_config(run, vocab, catalog), rng);
  load_checkpoint(run.checkpoint, model);
  const CaptionSet captions = caption_images(model, vocab, images, run.beam, run.max_len);
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [id, list] : captions) doc[id] = list;
  const std::string text = doc.dump(2) + "\n";
  emit(run, text);
  return text;
}

MetricReport run_eval(const RunConfig& run) {
  require_path(run.hypotheses, "hypotheses");
  require_path(run.references, "references");
  return evaluate_captions(read_captions(run.hypotheses), read_captions(run.references));
}

std::string metric_report_json(const MetricReport& report) { return metrics_json(report).dump(2) + "\n"; }

std::string run_sweep(const RunConfig& run) {
  require_path(run.captions, "captions");
  const std::vector<std::size_t> layer_values = parse_size_list(run.sweep_layers, "sweep_layers");
  const std::vector<std::size_t> beam_values = parse_size_list(run.sweep_beams, "sweep_beams");
  const CaptionSet captions = read_captions(run.captions);
  const Vocabulary vocab = build_vocabulary(captions, run.min_count);
  const AttributeCatalog catalog = catalog_from_vocabulary(vocab, run.attributes);
  const std::vector<TrainingSample> samples = build_samples(captions, vocab, catalog, run.features);
  std::vector<std::pair<std::string, Tensor>> images;
  for (const auto& s : samples) images.emplace_back(s.image_id, s.regions);

  RunConfig base = run;
  base.round = "xe";
  base.init_checkpoint.clear();
  nlohmann::json report;
  report["images"] = samples.size();
  report["seed"] = run.seed;
  report["epochs"] = run.epochs;
  report["layers"] = nlohmann::json::array();
  report["beam"] = nlohmann::json::array();
  std::optional<TrainedModel> beam_model;
  for (std::size_t s : layer_values) {
    RunConfig variant = base;
    variant.layers = s;
    TrainedModel trained = train_model(variant, vocab, catalog, samples);
    const CaptionSet hyps = caption_images(trained.model, vocab, images, run.beam, run.max_len);
    nlohmann::json row;
    row["layers"] = s;
    row["final_loss"] = trained.log.empty() ? 0.0 : trained.log.back().loss;
    row["metrics"] = metrics_json(evaluate_captions(hyps, captions));
    report["layers"].push_back(row);
    if (s == run.layers) beam_model.emplace(std::move(trained));
  }
  if (!beam_model) beam_model.emplace(train_model(base, vocab, catalog, samples));
  report["beam_layers"] = run.layers;
  for (std::size_t b : beam_values) {
    const CaptionSet hyps = caption_images(beam_model->model, vocab, images, b, run.max_len);
    nlohmann::json row;
    row["beam"] = b;
    row["metrics"] = metrics_json(evaluate_captions(hyps, captions));
    report["beam"].push_back(row);
  }
  const std::string text = report.dump(2) + "\n";
  emit(run, text);
  return text;
}

}  // namespace scfc
