// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "scfc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

#include "scfc/corpus.hpp"
#include "scfc/error.hpp"

namespace scfc {
namespace {

constexpr std::size_t kMaxOrder = 4;
constexpr double kTiny = 1e-15;
constexpr double kSmall = 1e-9;
constexpr double kSigma = 6.0;

using NgramCounts = std::map<std::vector<std::string>, double>;

NgramCounts count_ngrams(const Sentence& words) {
  NgramCounts counts;
  for (std::size_t k = 1; k <= kMaxOrder; ++k) {
    for (std::size_t i = 0; i + k <= words.size(); ++i) {
      counts[std::vector<std::string>(words.begin() + static_cast<std::ptrdiff_t>(i),
                                      words.begin() + static_cast<std::ptrdiff_t>(i + k))] += 1.0;
    }
  }
  return counts;
}

struct BleuStats {
  double test_len = 0;
  double ref_len = 0;
  std::array<double, kMaxOrder> guess{};
  std::array<double, kMaxOrder> correct{};
};

BleuStats bleu_stats(const Sentence& hyp, const std::vector<Sentence>& refs) {
  require(!refs.empty(), "bleu: every image needs at least one reference");
  NgramCounts max_ref;
  for (const auto& ref : refs) {
    for (const auto& [ngram, count] : count_ngrams(ref)) max_ref[ngram] = std::max(max_ref[ngram], count);
  }
  BleuStats s;
  s.test_len = static_cast<double>(hyp.size());
  // Closest reference length; the shorter one when two are equally close.
  std::pair<double, double> best{1e300, 0.0};
  for (const auto& ref : refs) {
    const double len = static_cast<double>(ref.size());
    best = std::min(best, std::make_pair(std::abs(len - s.test_len), len));
  }
  s.ref_len = best.second;
  for (std::size_t k = 0; k < kMaxOrder; ++k) {
    s.guess[k] = std::max(0.0, s.test_len - static_cast<double>(k));
  }
  for (const auto& [ngram, count] : count_ngrams(hyp)) {
    const auto it = max_ref.find(ngram);
    if (it != max_ref.end()) s.correct[ngram.size() - 1] += std::min(it->second, count);
  }
  return s;
}

std::array<double, kMaxOrder> bleu_from_stats(const BleuStats& s) {
  std::array<double, kMaxOrder> out{};
  double product = 1.0;
  for (std::size_t k = 0; k < kMaxOrder; ++k) {
    product *= (s.correct[k] + kTiny) / (s.guess[k] + kSmall);
    out[k] = std::pow(product, 1.0 / static_cast<double>(k + 1));
  }
  const double ratio = (s.test_len + kTiny) / (s.ref_len + kSmall);
  if (ratio < 1.0) {
    for (double& v : out) v *= std::exp(1.0 - 1.0 / ratio);
  }
  return out;
}

struct TfIdf {
  std::array<std::map<std::vector<std::string>, double>, kMaxOrder> vec;
  std::array<double, kMaxOrder> norm{};
  double length = 0;
};

}  // namespace

BleuScores bleu(const std::vector<Sentence>& hypotheses, const std::vector<std::vector<Sentence>>& references) {
  require(hypotheses.size() == references.size(), "bleu: one reference set per hypothesis");
  BleuScores out;
  BleuStats total;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const BleuStats s = bleu_stats(hypotheses[i], references[i]);
    out.per_image.push_back(bleu_from_stats(s));
    total.test_len += s.test_len;
    total.ref_len += s.ref_len;
    for (std::size_t k = 0; k < kMaxOrder; ++k) {
      total.guess[k] += s.guess[k];
      total.correct[k] += s.correct[k];
    }
  }
  out.corpus = bleu_from_stats(total);
  return out;
}

std::size_t lcs_length(const Sentence& a, const Sentence& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const Sentence& hypothesis, const std::vector<Sentence>& references) {
  require(!references.empty(), "rouge_l: at least one reference is required");
  constexpr double beta = 1.2;
  if (hypothesis.empty()) return 0.0;
  double best_precision = 0.0, best_recall = 0.0;
  for (const auto& ref : references) {
    if (ref.empty()) continue;
    const double lcs = static_cast<double>(lcs_length(ref, hypothesis));
    best_precision = std::max(best_precision, lcs / static_cast<double>(hypothesis.size()));
    best_recall = std::max(best_recall, lcs / static_cast<double>(ref.size()));
  }
  if (best_precision == 0.0 || best_recall == 0.0) return 0.0;
  return (1.0 + beta * beta) * best_precision * best_recall / (best_recall + beta * beta * best_precision);
}

CiderD::CiderD(const std::vector<std::vector<Sentence>>& reference_corpus) : images_(reference_corpus.size()) {
  require(!reference_corpus.empty(), "CiderD: the reference corpus is empty");
  for (const auto& refs : reference_corpus) {
    std::set<std::vector<std::string>> seen;
    for (const auto& ref : refs) {
      for (const auto& [ngram, _] : count_ngrams(ref)) seen.insert(ngram);
    }
    for (const auto& ngram : seen) document_frequency_[ngram] += 1.0;
  }
  log_corpus_size_ = std::log(static_cast<double>(images_));
}

double CiderD::score(const Sentence& hypothesis, const std::vector<Sentence>& references) const {
  require(!references.empty(), "CiderD: at least one reference is required");
  const auto vectorize = [&](const Sentence& words) {
    TfIdf out;
    for (const auto& [ngram, tf] : count_ngrams(words)) {
      const auto it = document_frequency_.find(ngram);
      const double df = std::log(std::max(1.0, it == document_frequency_.end() ? 0.0 : it->second));
      const std::size_t n = ngram.size() - 1;
      const double w = tf * (log_corpus_size_ - df);
      out.vec[n][ngram] = w;
      out.norm[n] += w * w;
      if (n == 1) out.length += tf;
    }
    for (double& v : out.norm) v = std::sqrt(v);
    return out;
  };
  const TfIdf hyp = vectorize(hypothesis);
  std::array<double, kMaxOrder> total{};
  for (const auto& ref_words : references) {
    const TfIdf ref = vectorize(ref_words);
    const double delta = hyp.length - ref.length;
    const double penalty = std::exp(-(delta * delta) / (2.0 * kSigma * kSigma));
    for (std::size_t n = 0; n < kMaxOrder; ++n) {
      double val = 0.0;
      for (const auto& [ngram, w] : hyp.vec[n]) {
        const auto it = ref.vec[n].find(ngram);
        if (it != ref.vec[n].end()) val += std::min(w, it->second) * it->second;
      }
      if (hyp.norm[n] != 0.0 && ref.norm[n] != 0.0) val /= hyp.norm[n] * ref.norm[n];
      total[n] += val * penalty;
    }
  }
  double mean = 0.0;
  for (double v : total) mean += v;
  mean /= static_cast<double>(kMaxOrder);
  return mean / static_cast<double>(references.size()) * 10.0;
}

std::vector<double> cider_d(const std::vector<Sentence>& hypotheses,
                            const std::vector<std::vector<Sentence>>& references) {
  require(hypotheses.size() == references.size(), "cider_d: one reference set per hypothesis");
  const CiderD scorer(references);
  std::vector<double> out;
  out.reserve(hypotheses.size());
  for (std::size_t i = 0; i < hypotheses.size(); ++i) out.push_back(scorer.score(hypotheses[i], references[i]));
  return out;
}

MetricReport evaluate_captions(const CaptionSet& hypotheses, const CaptionSet& references) {
  std::vector<std::string> missing, extra;
  for (const auto& [id, _] : references)
    if (!hypotheses.count(id)) missing.push_back(id);
  for (const auto& [id, _] : hypotheses)
    if (!references.count(id)) extra.push_back(id);
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "hypothesis and reference image ids differ:";
    if (!missing.empty()) msg += " missing hypothesis for '" + missing.front() + "'";
    if (!extra.empty()) msg += " no references for '" + extra.front() + "'";
    msg += " (" + std::to_string(missing.size() + extra.size()) + " ids in total)";
    fail(ErrorKind::IdMismatch, msg);
  }
  if (references.empty()) fail(ErrorKind::Usage, "evaluate: no images to score");

  std::vector<Sentence> hyps;
  std::vector<std::vector<Sentence>> refs;
  for (const auto& [id, captions] : hypotheses) {
    if (captions.size() != 1) {
      fail(ErrorKind::Usage, "evaluate: image '" + id + "' must have exactly one hypothesis caption");
    }
    hyps.push_back(tokenize_caption(captions.front()));
    std::vector<Sentence> r;
    for (const auto& c : references.at(id)) r.push_back(tokenize_caption(c));
    if (r.empty()) fail(ErrorKind::Usage, "evaluate: image '" + id + "' has no reference captions");
    refs.push_back(std::move(r));
  }
  MetricReport report;
  report.images = hyps.size();
  report.bleu = bleu(hyps, refs).corpus;
  double rouge_total = 0.0;
  for (std::size_t i = 0; i < hyps.size(); ++i) rouge_total += rouge_l(hyps[i], refs[i]);
  report.rouge_l = rouge_total / static_cast<double>(hyps.size());
  double cider_total = 0.0;
  for (double v : cider_d(hyps, refs)) cider_total += v;
  report.cider_d = cider_total / static_cast<double>(hyps.size());
  return report;
}

}  // namespace scfc
