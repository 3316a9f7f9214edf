// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "scfc/scfc.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "scfc/config.hpp"
#include "scfc/error.hpp"
#include "scfc/pipeline.hpp"

struct scfc_config {
  scfc::RunConfig run;
};

namespace {

thread_local std::string last_error;

scfc_status status_for(scfc::ErrorKind kind) {
  using scfc::ErrorKind;
  switch (kind) {
    case ErrorKind::Io: return SCFC_IO;
    case ErrorKind::BadMagic:
    case ErrorKind::Truncated:
    case ErrorKind::SizeMismatch:
    case ErrorKind::Version:
    case ErrorKind::MissingParameter:
    case ErrorKind::ShapeMismatch:
    case ErrorKind::Parse: return SCFC_FORMAT;
    case ErrorKind::Fingerprint: return SCFC_FINGERPRINT;
    case ErrorKind::Numeric: return SCFC_NUMERIC;
    case ErrorKind::Precondition: return SCFC_PRECONDITION;
    case ErrorKind::IdMismatch: return SCFC_ID_MISMATCH;
    case ErrorKind::Contract:
    case ErrorKind::Dimension:
    case ErrorKind::Usage: return SCFC_INVALID_ARGUMENT;
    case ErrorKind::Internal: return SCFC_INTERNAL;
  }
  return SCFC_INTERNAL;
}

template <class F>
scfc_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return SCFC_OK;
  } catch (const scfc::Error& e) {
    last_error = std::string(scfc::to_string(e.kind())) + ": " + e.what();
    return status_for(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return SCFC_INTERNAL;
  } catch (const std::exception& e) {
    last_error = std::string("internal: ") + e.what();
    return SCFC_INTERNAL;
  }
}

scfc_status invalid(const char* what) {
  last_error = std::string("usage: ") + what;
  return SCFC_INVALID_ARGUMENT;
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void hand_out(const std::string& s, char** output) {
  if (output) *output = copy_string(s);
}

}  // namespace

extern "C" {

const char* scfc_version(void) { return "0.1.0"; }

const char* scfc_last_error(void) { return last_error.c_str(); }

const char* scfc_status_name(scfc_status status) {
  switch (status) {
    case SCFC_OK: return "ok";
    case SCFC_INVALID_ARGUMENT: return "invalid argument";
    case SCFC_IO: return "io";
    case SCFC_FORMAT: return "format";
    case SCFC_FINGERPRINT: return "fingerprint";
    case SCFC_NUMERIC: return "numeric";
    case SCFC_PRECONDITION: return "precondition";
    case SCFC_ID_MISMATCH: return "id mismatch";
    case SCFC_INTERNAL: return "internal";
  }
  return "unknown";
}

scfc_status scfc_config_create(scfc_config** out) {
  if (!out) return invalid("scfc_config_create: null output pointer");
  return guarded([&] { *out = new scfc_config(); });
}

void scfc_config_destroy(scfc_config* config) { delete config; }

scfc_status scfc_config_load_file(scfc_config* config, const char* path) {
  if (!config || !path) return invalid("scfc_config_load_file: null argument");
  return guarded([&] { scfc::apply_config_file(config->run, path); });
}

scfc_status scfc_config_apply_env(scfc_config* config) {
  if (!config) return invalid("scfc_config_apply_env: null config");
  return guarded([&] { scfc::apply_environment(config->run, [](const char* name) { return std::getenv(name); }); });
}

scfc_status scfc_config_set(scfc_config* config, const char* key, const char* value) {
  if (!config || !key || !value) return invalid("scfc_config_set: null argument");
  return guarded([&] { scfc::set_option(config->run, key, value); });
}

scfc_status scfc_config_get(const scfc_config* config, const char* key, char** value) {
  if (!config || !key || !value) return invalid("scfc_config_get: null argument");
  return guarded([&] { *value = copy_string(scfc::get_option(config->run, key)); });
}

scfc_status scfc_train(const scfc_config* config, char** output) {
  if (!config) return invalid("scfc_train: null config");
  return guarded([&] { hand_out(scfc::run_train(config->run), output); });
}

scfc_status scfc_caption(const scfc_config* config, char** output) {
  if (!config) return invalid("scfc_caption: null config");
  return guarded([&] { hand_out(scfc::run_caption(config->run), output); });
}

scfc_status scfc_sweep(const scfc_config* config, char** output) {
  if (!config) return invalid("scfc_sweep: null config");
  return guarded([&] { hand_out(scfc::run_sweep(config->run), output); });
}

scfc_status scfc_eval(const scfc_config* config, scfc_metric_report* report, char** output) {
  if (!config) return invalid("scfc_eval: null config");
  return guarded([&] {
    const scfc::MetricReport r = scfc::run_eval(config->run);
    if (report) {
      for (int i = 0; i < 4; ++i) report->bleu[i] = r.bleu[static_cast<std::size_t>(i)];
      report->rouge_l = r.rouge_l;
      report->cider_d = r.cider_d;
      report->images = r.images;
    }
    const std::string text = scfc::metric_report_json(r);
    if (!config->run.out.empty()) scfc::write_file_atomic(config->run.out, text);
    hand_out(text, output);
  });
}

void scfc_free_string(char* s) { std::free(s); }

}  // extern "C"
