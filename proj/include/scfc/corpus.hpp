// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "scfc/metrics.hpp"
#include "scfc/tensor.hpp"

namespace scfc {

class ScfcModel;
struct ModelConfig;

// Splits on ASCII whitespace and lowercases ASCII letters; other bytes pass
// through untouched.
std::vector<std::string> tokenize_caption(std::string_view caption);
std::string join_tokens(const std::vector<std::string>& tokens);

inline constexpr const char* kUnknownToken = "<unk>";
inline constexpr const char* kStartToken = "<bos>";
inline constexpr const char* kEndToken = "<eos>";

class Vocabulary {
 public:
  Vocabulary() = default;
  // Specials are appended if absent.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  // Unknown words map to the unknown token.
  std::size_t id(const std::string& token) const;
  const std::string& token(std::size_t id) const;

  std::size_t unk_id() const { return unk_; }
  std::size_t bos_id() const { return bos_; }
  std::size_t eos_id() const { return eos_; }

  // Word ids followed by the end token.
  std::vector<std::size_t> encode(const std::vector<std::string>& words) const;
  // Stops at the end token; start/end tokens are dropped.
  std::vector<std::string> decode(const std::vector<std::size_t>& ids) const;

  // FNV-1a over the token list, one NUL after every token.
  std::uint64_t hash() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t unk_ = 0, bos_ = 0, eos_ = 0;
};

// Words seen at least `min_count` times, most frequent first (ties in byte
// order), then <unk>, <bos>, <eos>.
Vocabulary build_vocabulary(const CaptionSet& captions, std::size_t min_count);

void write_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary read_vocabulary(const std::filesystem::path& path);

struct AttributeCatalog {
  std::vector<std::string> words;
  std::vector<std::size_t> ids;  // vocabulary ids

  std::size_t size() const { return words.size(); }
  // One-hot selection matrix A, {|vocab|, c}.
  Tensor selection_matrix(std::size_t vocab_size) const;
};

// The `count` most frequent in-vocabulary words (same ordering rule as the
// vocabulary), specials excluded.
AttributeCatalog build_attribute_catalog(const CaptionSet& captions, const Vocabulary& vocab, std::size_t count);

// 1 where the attribute word occurs in any caption of the image.
std::vector<int> attribute_targets(const std::vector<std::string>& captions, const AttributeCatalog& catalog);

// Region feature file: "SCFC", u32 version, u32 n, u32 h, then n*h
// little-endian float32 values, row-major.
inline constexpr std::uint32_t kFeatureFormatVersion = 1;
void write_region_features(const std::filesystem::path& path, const Tensor& regions);
Tensor read_region_features(const std::filesystem::path& path);
Tensor parse_region_features(std::string_view bytes, const std::string& source = "<memory>");
std::string encode_region_features(const Tensor& regions);

// Checkpoint: "SCKP", u32 version, u32 fingerprint length, fingerprint bytes,
// u32 parameter count, then per parameter u32 name length, name, u32 rank,
// rank x u32 dims and float64 little-endian values.
inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

// Everything that has to match for a checkpoint to fit a model.
std::string model_fingerprint(const ModelConfig& config);

void save_checkpoint(const std::filesystem::path& path, const ScfcModel& model);
std::string encode_checkpoint(const ScfcModel& model);
// Verifies the fingerprint against the model, then copies every parameter.
void load_checkpoint(const std::filesystem::path& path, ScfcModel& model);
void decode_checkpoint_into(std::string_view bytes, ScfcModel& model, const std::string& source = "<memory>");

// {"image_id": ["caption", ...], ...}
CaptionSet read_captions(const std::filesystem::path& path);
CaptionSet parse_captions(std::string_view text, const std::string& source = "<memory>");
void write_captions(const std::filesystem::path& path, const CaptionSet& captions);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace scfc
