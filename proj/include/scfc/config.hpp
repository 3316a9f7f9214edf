// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

// Run configuration shared by every command. Sources are layered: built-in
// defaults, then a key = value file, then SCFC_<KEY> environment variables,
// then explicit overrides (command-line flags).

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace scfc {

struct RunConfig {
  // paths
  std::string features;         // directory of <image_id>.feat files
  std::string captions;         // training captions / references
  std::string vocab;            // defaults to <checkpoint>.vocab
  std::string checkpoint;       // written by train, read by caption
  std::string init_checkpoint;  // starting point for train
  std::string out;              // output file; stdout when empty (caption, eval, sweep)
  std::string log;              // epoch log; defaults to <checkpoint>.log.jsonl
  std::string hypotheses;       // eval input
  std::string references;       // eval input

  // model
  std::size_t embed_dim = 1000;
  std::size_t region_dim = 2048;
  std::size_t joint_dim = 1000;
  std::size_t attention_hidden = 1000;
  std::size_t decoder_hidden = 1000;
  std::size_t layers = 3;
  std::size_t attributes = 1000;
  std::size_t regions = 36;
  std::size_t min_count = 5;
  double dropout = 0.5;
  bool use_caa = true;
  bool inject_consolidated = true;

  // run
  std::uint64_t seed = 1;
  std::size_t beam = 3;
  std::size_t max_len = 20;
  std::string round = "xe";
  std::size_t epochs = 1;
  std::size_t batch_size = 8;
  double learning_rate = 1e-4;
  double clip_norm = 5.0;
  bool include_frontend = true;

  // ablation sweep
  std::string sweep_layers = "1,2,3";
  std::string sweep_beams = "1,2,3,4,5";
};

std::vector<std::string> option_keys();
// Unknown keys and unparsable values raise Usage errors.
void set_option(RunConfig& config, const std::string& key, const std::string& value);
std::string get_option(const RunConfig& config, const std::string& key);

// Lines of `key = value`; '#' starts a comment.
void apply_config_text(RunConfig& config, std::string_view text, const std::string& source = "<config>");
void apply_config_file(RunConfig& config, const std::string& path);

using EnvLookup = std::function<const char*(const char*)>;
// SCFC_<KEY> with the key upper-cased, e.g. SCFC_MAX_LEN.
void apply_environment(RunConfig& config, const EnvLookup& lookup);
std::string environment_name(const std::string& key);

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& key);

}  // namespace scfc
