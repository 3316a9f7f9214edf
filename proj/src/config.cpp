// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "scfc/config.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "scfc/corpus.hpp"
#include "scfc/error.hpp"

namespace scfc {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  fail(ErrorKind::Usage, "option '" + key + "': '" + value + "' is not " + expected);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (value.empty() || ec != std::errc() || ptr != end) bad_value(key, value, "a non-negative integer");
  return out;
}

std::size_t parse_positive(const std::string& key, const std::string& value) {
  const auto v = parse_u64(key, value);
  if (v == 0) bad_value(key, value, "a positive integer");
  return static_cast<std::size_t>(v);
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (value.empty() || ec != std::errc() || ptr != end || !std::isfinite(out)) bad_value(key, value, "a finite number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value, "a boolean");
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

struct Option {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Option path_option(std::string T::*field) {
  return {[field](RunConfig& c, const std::string&, const std::string& v) { c.*field = v; },
          [field](const RunConfig& c) { return c.*field; }};
}

Option size_option(std::size_t RunConfig::*field) {
  return {[field](RunConfig& c, const std::string& k, const std::string& v) { c.*field = parse_positive(k, v); },
          [field](const RunConfig& c) { return std::to_string(c.*field); }};
}

Option double_option(double RunConfig::*field) {
  return {[field](RunConfig& c, const std::string& k, const std::string& v) { c.*field = parse_double(k, v); },
          [field](const RunConfig& c) { return format_double(c.*field); }};
}

Option bool_option(bool RunConfig::*field) {
  return {[field](RunConfig& c, const std::string& k, const std::string& v) { c.*field = parse_bool(k, v); },
          [field](const RunConfig& c) { return std::string(c.*field ? "true" : "false"); }};
}

const std::map<std::string, Option>& options() {
  static const std::map<std::string, Option> table = [] {
    std::map<std::string, Option> t;
    t["features"] = path_option(&RunConfig::features);
    t["captions"] = path_option(&RunConfig::captions);
    t["vocab"] = path_option(&RunConfig::vocab);
    t["checkpoint"] = path_option(&RunConfig::checkpoint);
    t["init_checkpoint"] = path_option(&RunConfig::init_checkpoint);
    t["out"] = path_option(&RunConfig::out);
    t["log"] = path_option(&RunConfig::log);
    t["hypotheses"] = path_option(&RunConfig::hypotheses);
    t["references"] = path_option(&RunConfig::references);
    t["embed_dim"] = size_option(&RunConfig::embed_dim);
    t["region_dim"] = size_option(&RunConfig::region_dim);
    t["joint_dim"] = size_option(&RunConfig::joint_dim);
    t["attention_hidden"] = size_option(&RunConfig::attention_hidden);
    t["decoder_hidden"] = size_option(&RunConfig::decoder_hidden);
    t["layers"] = size_option(&RunConfig::layers);
    t["attributes"] = size_option(&RunConfig::attributes);
    t["regions"] = size_option(&RunConfig::regions);
    t["min_count"] = size_option(&RunConfig::min_count);
    t["dropout"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                      const double d = parse_double(k, v);
                      if (d < 0.0 || d >= 1.0) bad_value(k, v, "a rate in [0, 1)");
                      c.dropout = d;
                    },
                    [](const RunConfig& c) { return format_double(c.dropout); }};
    t["use_caa"] = bool_option(&RunConfig::use_caa);
    t["inject_consolidated"] = bool_option(&RunConfig::inject_consolidated);
    t["seed"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.seed = parse_u64(k, v); },
                 [](const RunConfig& c) { return std::to_string(c.seed); }};
    t["beam"] = size_option(&RunConfig::beam);
    t["max_len"] = size_option(&RunConfig::max_len);
    t["round"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                    if (v != "xe" && v != "rl") bad_value(k, v, "one of xe, rl");
                    c.round = v;
                  },
                  [](const RunConfig& c) { return c.round; }};
    t["epochs"] = size_option(&RunConfig::epochs);
    t["batch_size"] = size_option(&RunConfig::batch_size);
    t["learning_rate"] = double_option(&RunConfig::learning_rate);
    t["clip_norm"] = double_option(&RunConfig::clip_norm);
    t["include_frontend"] = bool_option(&RunConfig::include_frontend);
    t["sweep_layers"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                           parse_size_list(v, k);
                           c.sweep_layers = v;
                         },
                         [](const RunConfig& c) { return c.sweep_layers; }};
    t["sweep_beams"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                          parse_size_list(v, k);
                          c.sweep_beams = v;
                        },
                        [](const RunConfig& c) { return c.sweep_beams; }};
    for (const char* key : {"learning_rate", "clip_norm"}) {
      auto inner = t[key].set;
      t[key].set = [inner](RunConfig& c, const std::string& k, const std::string& v) {
        if (!(parse_double(k, v) > 0.0)) bad_value(k, v, "a positive number");
        inner(c, k, v);
      };
    }
    return t;
  }();
  return table;
}

const Option& lookup(const std::string& key) {
  const auto it = options().find(key);
  if (it == options().end()) fail(ErrorKind::Usage, "unknown option '" + key + "'");
  return it->second;
}

}  // namespace

std::vector<std::string> option_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : options()) keys.push_back(k);
  return keys;
}

void set_option(RunConfig& config, const std::string& key, const std::string& value) {
  lookup(key).set(config, key, trim(value));
}

std::string get_option(const RunConfig& config, const std::string& key) { return lookup(key).get(config); }

void apply_config_text(RunConfig& config, std::string_view text, const std::string& source) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::Usage, source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(content).substr(0, eq));
    try {
      set_option(config, key, content.substr(eq + 1));
    } catch (const Error& e) {
      fail(e.kind(), source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& config, const std::string& path) {
  apply_config_text(config, read_file(path), path);
}

std::string environment_name(const std::string& key) {
  std::string out = "SCFC_";
  for (char c : key) out.push_back(c >= 'a' && c <= 'z' ? static_cast<char>(c - 'a' + 'A') : c);
  return out;
}

void apply_environment(RunConfig& config, const EnvLookup& lookup_env) {
  for (const auto& key : option_keys()) {
    const std::string name = environment_name(key);
    if (const char* value = lookup_env(name.c_str())) {
      try {
        set_option(config, key, value);
      } catch (const Error& e) {
        fail(e.kind(), "environment " + name + ": " + e.what());
      }
    }
  }
}

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& key) {
  std::vector<std::size_t> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_positive(key, trim(item)));
  if (out.empty()) bad_value(key, text, "a comma-separated list of positive integers");
  return out;
}

}  // namespace scfc
