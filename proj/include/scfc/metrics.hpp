// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

// Caption metrics with the conventions of the COCO caption evaluation toolkit,
// so scores are comparable with published numbers.

#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace scfc {

using Sentence = std::vector<std::string>;

struct BleuScores {
  std::array<double, 4> corpus{};                   // BLEU-1..4 over the whole set
  std::vector<std::array<double, 4>> per_image;     // sentence-level BLEU-1..4
};

// Clipped n-gram precision with the closest reference length for the brevity
// penalty (shorter reference on ties). Counts get the toolkit's 1e-15 / 1e-9
// guards, so a zero match count yields a tiny positive score, not exactly 0.
BleuScores bleu(const std::vector<Sentence>& hypotheses, const std::vector<std::vector<Sentence>>& references);

std::size_t lcs_length(const Sentence& a, const Sentence& b);

// F-measure with β = 1.2 built from the best precision and the best recall
// over the references.
double rouge_l(const Sentence& hypothesis, const std::vector<Sentence>& references);

// CIDEr-D: tf-idf n-gram vectors (n = 1..4) with document frequencies taken
// from a reference corpus, clipped hypothesis weights, and a Gaussian length
// penalty (σ = 6). The length fed to the penalty is the bigram count, matching
// the toolkit.
class CiderD {
 public:
  // One entry per image: that image's reference sentences.
  explicit CiderD(const std::vector<std::vector<Sentence>>& reference_corpus);

  double score(const Sentence& hypothesis, const std::vector<Sentence>& references) const;

  std::size_t corpus_size() const { return images_; }

 private:
  std::map<std::vector<std::string>, double> document_frequency_;
  double log_corpus_size_ = 0.0;
  std::size_t images_ = 0;
};

// Per-image CIDEr-D with document frequencies from the evaluated references.
std::vector<double> cider_d(const std::vector<Sentence>& hypotheses,
                            const std::vector<std::vector<Sentence>>& references);

// image id -> captions.
using CaptionSet = std::map<std::string, std::vector<std::string>>;

struct MetricReport {
  std::array<double, 4> bleu{};
  double rouge_l = 0.0;
  double cider_d = 0.0;
  std::size_t images = 0;
};

// Every hypothesis entry holds exactly one caption; the id sets must agree.
MetricReport evaluate_captions(const CaptionSet& hypotheses, const CaptionSet& references);

}  // namespace scfc
