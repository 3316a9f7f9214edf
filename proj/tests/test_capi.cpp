// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

// Exercises the shared library through its C interface only.

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "scfc/scfc.h"

namespace fs = std::filesystem;

namespace {

struct Config {
  scfc_config* cfg = nullptr;
  Config() { REQUIRE(scfc_config_create(&cfg) == SCFC_OK); }
  ~Config() { scfc_config_destroy(cfg); }
  void set(const char* key, const std::string& value) { REQUIRE(scfc_config_set(cfg, key, value.c_str()) == SCFC_OK); }
};

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("scfc_capi_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

void use_toy(Config& c, const fs::path& dir, const char* epochs) {
  REQUIRE(scfc_config_load_file(c.cfg, SCFC_TOY_DIR "/toy.conf") == SCFC_OK);
  c.set("features", SCFC_TOY_DIR "/features");
  c.set("captions", SCFC_TOY_DIR "/captions.json");
  c.set("checkpoint", (dir / "model.ckpt").string());
  c.set("epochs", epochs);
}

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::strcmp(scfc_status_name(SCFC_OK), "ok") == 0);
  CHECK(std::strlen(scfc_version()) > 0);
  CHECK(scfc_config_create(nullptr) == SCFC_INVALID_ARGUMENT);
  CHECK(scfc_train(nullptr, nullptr) == SCFC_INVALID_ARGUMENT);
  scfc_free_string(nullptr);
}

TEST_CASE("options can be set and read back") {
  Config c;
  c.set("layers", "2");
  char* value = nullptr;
  REQUIRE(scfc_config_get(c.cfg, "layers", &value) == SCFC_OK);
  CHECK(std::string(value) == "2");
  scfc_free_string(value);
  CHECK(scfc_config_set(c.cfg, "bogus", "1") == SCFC_INVALID_ARGUMENT);
  CHECK(std::string(scfc_last_error()).find("bogus") != std::string::npos);
  CHECK(scfc_config_set(c.cfg, "layers", "x") == SCFC_INVALID_ARGUMENT);
  CHECK(scfc_config_load_file(c.cfg, "/nonexistent.conf") == SCFC_IO);
}

TEST_CASE("train then caption through the C interface") {
  const fs::path dir = scratch("train");
  Config c;
  use_toy(c, dir, "20");
  char* log = nullptr;
  REQUIRE(scfc_train(c.cfg, &log) == SCFC_OK);
  CHECK(std::string(log).find("\"epoch\":20") != std::string::npos);
  scfc_free_string(log);
  CHECK(fs::exists(dir / "model.ckpt"));
  CHECK(fs::exists(dir / "model.ckpt.vocab"));

  char* caps = nullptr;
  REQUIRE(scfc_caption(c.cfg, &caps) == SCFC_OK);
  CHECK(std::string(caps).find("toy_08") != std::string::npos);
  scfc_free_string(caps);

  SUBCASE("a checkpoint for another depth is a fingerprint error") {
    c.set("layers", "2");
    char* out = nullptr;
    CHECK(scfc_caption(c.cfg, &out) == SCFC_FINGERPRINT);
    CHECK(out == nullptr);
  }
  SUBCASE("a corrupt checkpoint is a format error") {
    write_text(dir / "model.ckpt", "SCKPgarbage");
    char* out = nullptr;
    CHECK(scfc_caption(c.cfg, &out) == SCFC_FORMAT);
  }
  SUBCASE("a missing feature directory is an io error") {
    c.set("features", (dir / "nope").string());
    char* out = nullptr;
    CHECK(scfc_caption(c.cfg, &out) == SCFC_IO);
  }
}

TEST_CASE("the RL round needs an initial checkpoint") {
  const fs::path dir = scratch("rl");
  Config c;
  use_toy(c, dir, "1");
  c.set("round", "rl");
  char* out = nullptr;
  CHECK(scfc_train(c.cfg, &out) == SCFC_PRECONDITION);
  CHECK_FALSE(fs::exists(dir / "model.ckpt"));
}

TEST_CASE("eval reports metrics and id mismatches") {
  const fs::path dir = scratch("eval");
  write_text(dir / "hyp.json", R"({"a": ["a dog runs"], "b": ["a cat"]})");
  write_text(dir / "ref.json", R"({"a": ["a dog runs"], "b": ["a cat sleeps", "the cat"]})");
  write_text(dir / "bad.json", R"({"a": ["a dog runs"]})");
  Config c;
  c.set("hypotheses", (dir / "hyp.json").string());
  c.set("references", (dir / "ref.json").string());
  scfc_metric_report report{};
  char* out = nullptr;
  REQUIRE(scfc_eval(c.cfg, &report, &out) == SCFC_OK);
  CHECK(report.images == 2);
  CHECK(report.bleu[0] > 0.5);
  CHECK(std::string(out).find("cider_d") != std::string::npos);
  scfc_free_string(out);

  c.set("hypotheses", (dir / "bad.json").string());
  CHECK(scfc_eval(c.cfg, &report, nullptr) == SCFC_ID_MISMATCH);
  write_text(dir / "broken.json", "{\"a\": [");
  c.set("hypotheses", (dir / "broken.json").string());
  CHECK(scfc_eval(c.cfg, &report, nullptr) == SCFC_FORMAT);
}
