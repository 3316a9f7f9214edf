// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "scfc/corpus.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "scfc/error.hpp"
#include "scfc/model.hpp"

namespace scfc {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Counts every token of every caption; returns (word, count) most frequent
// first, ties in byte order.
std::vector<std::pair<std::string, std::size_t>> ranked_words(const CaptionSet& captions) {
  std::map<std::string, std::size_t> counts;
  for (const auto& [_, list] : captions)
    for (const auto& c : list)
      for (auto& w : tokenize_caption(c)) ++counts[w];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return ranked;
}

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::string_view s) { out_.append(s); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  ByteReader(std::string_view data, std::string source) : data_(data), source_(std::move(source)) {}

  std::size_t remaining() const { return data_.size() - pos_; }

  std::string_view take(std::size_t n, const char* what) {
    if (remaining() < n) {
      fail(ErrorKind::Truncated, source_ + ": file ends inside " + what + " (need " + std::to_string(n) +
                                     " bytes, " + std::to_string(remaining()) + " left)");
    }
    std::string_view out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint32_t u32(const char* what) {
    const auto b = take(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[static_cast<std::size_t>(i)]);
    return v;
  }
  std::uint64_t u64(const char* what) {
    const auto b = take(8, what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[static_cast<std::size_t>(i)]);
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

  const std::string& source() const { return source_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
  std::string source_;
};

void expect_magic(ByteReader& in, std::string_view magic) {
  // A cut-off magic is truncation; anything else is the wrong file type.
  const std::size_t have = std::min(in.remaining(), magic.size());
  const std::string_view head = in.take(have, "magic");
  if (head != magic.substr(0, have) || have == 0) {
    fail(ErrorKind::BadMagic, in.source() + ": not a " + std::string(magic) + " file");
  }
  if (have < magic.size()) in.take(magic.size() - have, "magic");
}

}  // namespace

std::vector<std::string> tokenize_caption(std::string_view caption) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : caption) {
    if (is_space(ch)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch >= 'A' && ch <= 'Z' ? static_cast<char>(ch - 'A' + 'a') : ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (const char* special : {kUnknownToken, kStartToken, kEndToken}) {
    if (std::find(tokens_.begin(), tokens_.end(), special) == tokens_.end()) tokens_.emplace_back(special);
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) fail(ErrorKind::Parse, "vocabulary: empty token at line " + std::to_string(i + 1));
    if (!index_.emplace(tokens_[i], i).second) fail(ErrorKind::Parse, "vocabulary: duplicate token '" + tokens_[i] + "'");
  }
  unk_ = index_.at(kUnknownToken);
  bos_ = index_.at(kStartToken);
  eos_ = index_.at(kEndToken);
}

std::size_t Vocabulary::id(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? unk_ : it->second;
}

const std::string& Vocabulary::token(std::size_t id) const {
  require(id < tokens_.size(), "vocabulary: id " + std::to_string(id) + " outside vocabulary of size " +
                                   std::to_string(tokens_.size()));
  return tokens_[id];
}

std::vector<std::size_t> Vocabulary::encode(const std::vector<std::string>& words) const {
  std::vector<std::size_t> out;
  out.reserve(words.size() + 1);
  for (const auto& w : words) out.push_back(id(w));
  out.push_back(eos_);
  return out;
}

std::vector<std::string> Vocabulary::decode(const std::vector<std::size_t>& ids) const {
  std::vector<std::string> out;
  for (std::size_t id : ids) {
    if (id == eos_) break;
    if (id == bos_) continue;
    out.push_back(token(id));
  }
  return out;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& t : tokens_) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h *= 1099511628211ull;  // NUL separator
  }
  return h;
}

Vocabulary build_vocabulary(const CaptionSet& captions, std::size_t min_count) {
  require(min_count >= 1, "build_vocabulary: min_count must be at least 1");
  std::vector<std::string> tokens;
  for (auto& [w, n] : ranked_words(captions)) {
    if (n >= min_count && w != kUnknownToken && w != kStartToken && w != kEndToken) tokens.push_back(w);
  }
  return Vocabulary(std::move(tokens));
}

void write_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::string text;
  for (const auto& t : vocab.tokens()) text += t + "\n";
  write_file_atomic(path, text);
}

Vocabulary read_vocabulary(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    tokens.push_back(line);
  }
  if (tokens.empty()) fail(ErrorKind::Parse, path.string() + ": vocabulary file is empty");
  return Vocabulary(std::move(tokens));
}

Tensor AttributeCatalog::selection_matrix(std::size_t vocab_size) const {
  std::vector<double> a(vocab_size * ids.size(), 0.0);
  for (std::size_t j = 0; j < ids.size(); ++j) {
    require(ids[j] < vocab_size, "selection_matrix: attribute id outside vocabulary");
    a[ids[j] * ids.size() + j] = 1.0;
  }
  return Tensor::from({vocab_size, ids.size()}, std::move(a));
}

AttributeCatalog build_attribute_catalog(const CaptionSet& captions, const Vocabulary& vocab, std::size_t count) {
  require(count >= 1, "build_attribute_catalog: need at least one attribute");
  AttributeCatalog catalog;
  for (auto& [w, _] : ranked_words(captions)) {
    if (catalog.size() == count) break;
    if (!vocab.contains(w) || w == kUnknownToken || w == kStartToken || w == kEndToken) continue;
    catalog.ids.push_back(vocab.id(w));
    catalog.words.push_back(w);
  }
  if (catalog.size() < count) {
    fail(ErrorKind::Usage, "attribute catalog: asked for " + std::to_string(count) + " attributes but the corpus has only " +
                               std::to_string(catalog.size()) + " distinct words");
  }
  return catalog;
}

std::vector<int> attribute_targets(const std::vector<std::string>& captions, const AttributeCatalog& catalog) {
  std::set<std::string> present;
  for (const auto& c : captions)
    for (auto& w : tokenize_caption(c)) present.insert(w);
  std::vector<int> out(catalog.size(), 0);
  for (std::size_t j = 0; j < catalog.size(); ++j) out[j] = present.count(catalog.words[j]) ? 1 : 0;
  return out;
}

std::string encode_region_features(const Tensor& regions) {
  require(regions.defined() && regions.rank() == 2, "region features must be an {n, h} matrix");
  ByteWriter out;
  out.bytes("SCFC");
  out.u32(kFeatureFormatVersion);
  out.u32(static_cast<std::uint32_t>(regions.dim(0)));
  out.u32(static_cast<std::uint32_t>(regions.dim(1)));
  for (double v : regions.data()) out.f32(static_cast<float>(v));
  return out.take();
}

void write_region_features(const std::filesystem::path& path, const Tensor& regions) {
  write_file_atomic(path, encode_region_features(regions));
}

Tensor parse_region_features(std::string_view bytes, const std::string& source) {
  ByteReader in(bytes, source);
  expect_magic(in, "SCFC");
  const std::uint32_t version = in.u32("header");
  if (version != kFeatureFormatVersion) {
    fail(ErrorKind::Version, source + ": unsupported feature file version " + std::to_string(version));
  }
  const std::uint64_t n = in.u32("header");
  const std::uint64_t h = in.u32("header");
  if (n == 0 || h == 0) {
    fail(ErrorKind::SizeMismatch, source + ": header declares an empty " + std::to_string(n) + " x " +
                                      std::to_string(h) + " region matrix");
  }
  if (in.remaining() % 4 != 0) {
    fail(ErrorKind::Truncated, source + ": payload of " + std::to_string(in.remaining()) +
                                   " bytes ends inside a float32 value");
  }
  const std::uint64_t have = in.remaining() / 4;
  if (have != n * h) {
    fail(ErrorKind::SizeMismatch, source + ": header declares " + std::to_string(n) + " x " + std::to_string(h) +
                                      " values but the payload holds " + std::to_string(have));
  }
  std::vector<double> values(n * h);
  for (auto& v : values) {
    v = in.f32("payload");
    if (!std::isfinite(v)) fail(ErrorKind::Numeric, source + ": non-finite value in region features");
  }
  return Tensor::from({static_cast<std::size_t>(n), static_cast<std::size_t>(h)}, std::move(values));
}

Tensor read_region_features(const std::filesystem::path& path) {
  return parse_region_features(read_file(path), path.string());
}

std::string model_fingerprint(const ModelConfig& c) {
  std::ostringstream out;
  out << "vocab_size=" << c.vocab_size << ";vocab_hash=" << c.vocab_hash << ";embed_dim=" << c.embed_dim
      << ";region_dim=" << c.region_dim << ";joint_dim=" << c.joint_dim << ";attention_hidden=" << c.attention_hidden
      << ";decoder_hidden=" << c.decoder_hidden << ";layers=" << c.layers << ";bos=" << c.bos_id
      << ";eos=" << c.eos_id << ";use_caa=" << c.use_caa << ";inject=" << c.inject_consolidated
      << ";use_detector=" << c.use_detector;
  if (c.use_detector) {
    out << ";map_channels=" << c.map_channels << ";rpn_hidden=" << c.rpn_hidden
        << ";pool_size=" << c.proposals.pool_size
        << ";anchors=" << c.anchors.scales.size() * c.anchors.ratios.size();
  }
  out << ";attributes=";
  for (std::size_t i = 0; i < c.attribute_ids.size(); ++i) out << (i ? "," : "") << c.attribute_ids[i];
  return out.str();
}

namespace {

std::string first_difference(const std::string& expected, const std::string& found) {
  const auto split = [](const std::string& s) {
    std::map<std::string, std::string> kv;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ';')) {
      const auto eq = item.find('=');
      kv[item.substr(0, eq)] = eq == std::string::npos ? "" : item.substr(eq + 1);
    }
    return kv;
  };
  const auto a = split(expected), b = split(found);
  for (const auto& [k, v] : a) {
    const auto it = b.find(k);
    if (it == b.end()) return k + " (absent in checkpoint)";
    if (it->second != v) return k + " (model " + v + ", checkpoint " + it->second + ")";
  }
  for (const auto& [k, _] : b)
    if (!a.count(k)) return k + " (absent in model)";
  return "encoding";
}

}  // namespace

std::string encode_checkpoint(const ScfcModel& model) {
  ByteWriter out;
  out.bytes("SCKP");
  out.u32(kCheckpointFormatVersion);
  const std::string fp = model_fingerprint(model.config());
  out.u32(static_cast<std::uint32_t>(fp.size()));
  out.bytes(fp);
  const auto& entries = model.parameters().entries();
  out.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, t] : entries) {
    out.u32(static_cast<std::uint32_t>(name.size()));
    out.bytes(name);
    out.u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) out.u32(static_cast<std::uint32_t>(d));
    for (double v : t.data()) out.f64(v);
  }
  return out.take();
}

void save_checkpoint(const std::filesystem::path& path, const ScfcModel& model) {
  write_file_atomic(path, encode_checkpoint(model));
}

void decode_checkpoint_into(std::string_view bytes, ScfcModel& model, const std::string& source) {
  ByteReader in(bytes, source);
  expect_magic(in, "SCKP");
  const std::uint32_t version = in.u32("header");
  if (version != kCheckpointFormatVersion) {
    fail(ErrorKind::Version, source + ": unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t fp_len = in.u32("header");
  const std::string found(in.take(fp_len, "fingerprint"));
  const std::string expected = model_fingerprint(model.config());
  if (found != expected) {
    fail(ErrorKind::Fingerprint, source + ": checkpoint was built for a different model; first difference: " +
                                     first_difference(expected, found));
  }
  const std::uint32_t count = in.u32("parameter table");
  std::map<std::string, std::vector<double>> values;
  std::map<std::string, Shape> shapes;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t name_len = in.u32("parameter name");
    std::string name(in.take(name_len, "parameter name"));
    const std::uint32_t rank = in.u32("parameter shape");
    if (rank > 4) fail(ErrorKind::ShapeMismatch, source + ": parameter '" + name + "' has rank " + std::to_string(rank));
    Shape shape;
    std::uint64_t size = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      shape.push_back(in.u32("parameter shape"));
      size *= shape.back();
    }
    if (size * 8 > in.remaining()) {
      fail(ErrorKind::Truncated, source + ": parameter '" + name + "' payload is cut off");
    }
    std::vector<double> v(size);
    for (auto& x : v) x = in.f64("parameter payload");
    shapes[name] = shape;
    values[name] = std::move(v);
  }
  if (in.remaining() != 0) fail(ErrorKind::SizeMismatch, source + ": trailing bytes after the parameter table");
  for (const auto& [name, t] : model.parameters().entries()) {
    const auto it = values.find(name);
    if (it == values.end()) fail(ErrorKind::MissingParameter, source + ": checkpoint has no parameter '" + name + "'");
    if (shapes[name] != t.shape()) {
      fail(ErrorKind::ShapeMismatch, source + ": parameter '" + name + "' has shape " + shape_string(shapes[name]) +
                                         ", model expects " + shape_string(t.shape()));
    }
  }
  for (auto& [name, t] : model.parameters().entries()) {
    const auto& v = values[name];
    std::copy(v.begin(), v.end(), t.mutable_data().begin());
  }
}

void load_checkpoint(const std::filesystem::path& path, ScfcModel& model) {
  decode_checkpoint_into(read_file(path), model, path.string());
}

CaptionSet parse_captions(std::string_view text, const std::string& source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Parse, source + ": " + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::Parse, source + ": expected an object mapping image ids to caption lists");
  CaptionSet out;
  for (const auto& [id, list] : doc.items()) {
    if (!list.is_array()) fail(ErrorKind::Parse, source + ": captions of '" + id + "' must be a list");
    auto& captions = out[id];
    for (const auto& c : list) {
      if (!c.is_string()) fail(ErrorKind::Parse, source + ": captions of '" + id + "' must be strings");
      captions.push_back(c.get<std::string>());
    }
  }
  return out;
}

CaptionSet read_captions(const std::filesystem::path& path) { return parse_captions(read_file(path), path.string()); }

void write_captions(const std::filesystem::path& path, const CaptionSet& captions) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [id, list] : captions) doc[id] = list;
  write_file_atomic(path, doc.dump(2) + "\n");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, path.string() + ": cannot open for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) fail(ErrorKind::Io, path.string() + ": read failed");
  return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, tmp.string() + ": cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) fail(ErrorKind::Io, tmp.string() + ": write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorKind::Io, path.string() + ": cannot move finished file into place");
  }
}

}  // namespace scfc
