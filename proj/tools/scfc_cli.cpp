// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

// scfc train|caption|eval|sweep. Settings come from built-in defaults, a
// --config file, SCFC_* environment variables and flags, later sources
// winning.

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "scfc/scfc.h"

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kUsage = 2, kNumeric = 3, kFingerprint = 4 };

int exit_code(scfc_status status) {
  switch (status) {
    case SCFC_OK: return kOk;
    case SCFC_NUMERIC: return kNumeric;
    case SCFC_FINGERPRINT: return kFingerprint;
    case SCFC_INTERNAL: return kInternal;
    default: return kUsage;
  }
}

int report(scfc_status status) {
  if (status != SCFC_OK) std::fprintf(stderr, "scfc: error: %s\n", scfc_last_error());
  return exit_code(status);
}

struct Flags {
  std::string config;
  std::optional<std::string> seed, beam, max_len, round, init_checkpoint, out;
  std::vector<std::string> sets;
  std::string hypotheses, references;
};

class ConfigHandle {
 public:
  ~ConfigHandle() { scfc_config_destroy(cfg_); }
  scfc_config* get() { return cfg_; }
  scfc_config** out() { return &cfg_; }

 private:
  scfc_config* cfg_ = nullptr;
};

scfc_status build_config(const Flags& flags, ConfigHandle& cfg) {
  scfc_status s = scfc_config_create(cfg.out());
  if (s != SCFC_OK) return s;
  std::string config_path = flags.config;
  if (config_path.empty()) {
    if (const char* env = std::getenv("SCFC_CONFIG")) config_path = env;
  }
  if (!config_path.empty() && (s = scfc_config_load_file(cfg.get(), config_path.c_str())) != SCFC_OK) return s;
  if ((s = scfc_config_apply_env(cfg.get())) != SCFC_OK) return s;
  const std::pair<const char*, const std::optional<std::string>*> direct[] = {
      {"seed", &flags.seed},   {"beam", &flags.beam},
      {"max_len", &flags.max_len}, {"round", &flags.round},
      {"init_checkpoint", &flags.init_checkpoint}, {"out", &flags.out}};
  for (const auto& [key, value] : direct) {
    if (*value && (s = scfc_config_set(cfg.get(), key, (*value)->c_str())) != SCFC_OK) return s;
  }
  for (const auto& kv : flags.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "scfc: error: --set expects key=value, got '%s'\n", kv.c_str());
      return SCFC_INVALID_ARGUMENT;
    }
    const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    if ((s = scfc_config_set(cfg.get(), key.c_str(), value.c_str())) != SCFC_OK) return s;
  }
  if (!flags.hypotheses.empty() && (s = scfc_config_set(cfg.get(), "hypotheses", flags.hypotheses.c_str())) != SCFC_OK)
    return s;
  if (!flags.references.empty() && (s = scfc_config_set(cfg.get(), "references", flags.references.c_str())) != SCFC_OK)
    return s;
  return SCFC_OK;
}

void add_common(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--config", flags.config, "key = value configuration file");
  cmd->add_option("--seed", flags.seed, "random seed");
  cmd->add_option("--out", flags.out, "output file");
  cmd->add_option("--set", flags.sets, "override any configuration key (key=value)");
}

bool out_is_set(ConfigHandle& cfg) {
  char* out = nullptr;
  if (scfc_config_get(cfg.get(), "out", &out) != SCFC_OK) return false;
  const bool set = out && out[0] != '\0';
  scfc_free_string(out);
  return set;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Image captioning with stacked cross-modal feature consolidation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", scfc_version());
  Flags flags;

  CLI::App* train = app.add_subcommand("train", "train a model and write a checkpoint");
  add_common(train, flags);
  train->add_option("--round", flags.round, "xe or rl")->check(CLI::IsMember({"xe", "rl"}));
  train->add_option("--init-checkpoint", flags.init_checkpoint, "checkpoint to start from (required for rl)");
  train->add_option("--max-len", flags.max_len, "maximum sampled caption length (rl)");

  CLI::App* caption = app.add_subcommand("caption", "caption every feature file of a directory");
  add_common(caption, flags);
  caption->add_option("--beam", flags.beam, "beam size (1 = greedy)");
  caption->add_option("--max-len", flags.max_len, "maximum caption length in tokens, end token included");

  CLI::App* eval = app.add_subcommand("eval", "score hypotheses against references");
  add_common(eval, flags);
  eval->add_option("hypotheses", flags.hypotheses, "captions document with one caption per image");
  eval->add_option("references", flags.references, "captions document with the references");

  CLI::App* sweep = app.add_subcommand("sweep", "run the S and beam ablation sweeps");
  add_common(sweep, flags);
  sweep->add_option("--beam", flags.beam, "beam size used during the S sweep");
  sweep->add_option("--max-len", flags.max_len, "maximum caption length");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  ConfigHandle cfg;
  if (const scfc_status s = build_config(flags, cfg); s != SCFC_OK) return report(s);

  char* output = nullptr;
  scfc_status status = SCFC_OK;
  bool print = true;
  if (train->parsed()) {
    status = scfc_train(cfg.get(), &output);
  } else if (caption->parsed()) {
    status = scfc_caption(cfg.get(), &output);
    print = !out_is_set(cfg);
  } else if (eval->parsed()) {
    scfc_metric_report metrics{};
    status = scfc_eval(cfg.get(), &metrics, &output);
  } else if (sweep->parsed()) {
    status = scfc_sweep(cfg.get(), &output);
    print = !out_is_set(cfg);
  }
  if (status == SCFC_OK && output && print) std::fputs(output, stdout);
  scfc_free_string(output);
  return report(status);
}
