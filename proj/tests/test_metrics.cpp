// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "scfc/corpus.hpp"
#include "scfc/error.hpp"
#include "scfc/metrics.hpp"

using namespace scfc;

namespace {

constexpr double kGoldenTolerance = 1e-6;

nlohmann::json load_fixtures() {
  std::ifstream in(SCFC_METRIC_FIXTURES);
  REQUIRE(in.good());
  return nlohmann::json::parse(in);
}

struct FixtureSet {
  std::vector<std::string> ids;
  CaptionSet hyps, refs;
  std::vector<Sentence> hyp_tokens;
  std::vector<std::vector<Sentence>> ref_tokens;
};

FixtureSet fixture_set(const nlohmann::json& group) {
  FixtureSet s;
  for (const auto& item : group["items"]) {
    const std::string id = item["id"];
    s.ids.push_back(id);
    s.hyps[id] = {item["hypothesis"].get<std::string>()};
    s.hyp_tokens.push_back(tokenize_caption(item["hypothesis"].get<std::string>()));
    std::vector<Sentence> refs;
    for (const auto& r : item["references"]) {
      s.refs[id].push_back(r.get<std::string>());
      refs.push_back(tokenize_caption(r.get<std::string>()));
    }
    s.ref_tokens.push_back(std::move(refs));
  }
  return s;
}

void check_group(const nlohmann::json& group) {
  const FixtureSet s = fixture_set(group);
  const MetricReport report = evaluate_captions(s.hyps, s.refs);
  const auto& corpus = group["corpus"];
  for (int n = 0; n < 4; ++n) CHECK(std::abs(report.bleu[n] - corpus["bleu"][n].get<double>()) < kGoldenTolerance);
  CHECK(std::abs(report.rouge_l - corpus["rouge_l"].get<double>()) < kGoldenTolerance);
  CHECK(std::abs(report.cider_d - corpus["cider_d"].get<double>()) < kGoldenTolerance);
  CHECK(report.images == s.ids.size());

  // evaluate_captions works in id order; per-image values are keyed by id.
  const BleuScores b = bleu(s.hyp_tokens, s.ref_tokens);
  const std::vector<double> c = cider_d(s.hyp_tokens, s.ref_tokens);
  for (std::size_t i = 0; i < s.ids.size(); ++i) {
    INFO("image ", s.ids[i]);
    const auto& want = group["per_image"][s.ids[i]];
    for (int n = 0; n < 4; ++n) CHECK(std::abs(b.per_image[i][n] - want["bleu"][n].get<double>()) < kGoldenTolerance);
    CHECK(std::abs(rouge_l(s.hyp_tokens[i], s.ref_tokens[i]) - want["rouge_l"].get<double>()) < kGoldenTolerance);
    CHECK(std::abs(c[i] - want["cider_d"].get<double>()) < kGoldenTolerance);
  }
}

}  // namespace

TEST_CASE("longest common subsequence") {
  CHECK(lcs_length({"a", "b", "c", "d"}, {"a", "c", "e", "d"}) == 3);
  CHECK(lcs_length({}, {"a"}) == 0);
  CHECK(lcs_length({"x", "y"}, {"y", "x"}) == 1);
}

TEST_CASE("ROUGE-L combines the best precision and recall") {
  const double p = 2.0 / 4.0, r = 2.0 / 3.0, b2 = 1.2 * 1.2;
  const double f = (1 + b2) * p * r / (r + b2 * p);
  CHECK(rouge_l({"a", "b", "c", "d"}, {{"a", "c", "e"}}) == doctest::Approx(f).epsilon(1e-14));
  CHECK(rouge_l({"a", "b"}, {{"a", "b"}, {"z"}}) == doctest::Approx(1.0));
  CHECK(rouge_l({"q"}, {{"a"}}) == 0.0);
}

TEST_CASE("BLEU on hand examples") {
  const BleuScores same = bleu({{"a", "b", "c", "d"}}, {{{"a", "b", "c", "d"}}});
  for (double v : same.corpus) CHECK(v == doctest::Approx(1.0).epsilon(1e-8));
  // clipped unigram precision 1/4, no brevity penalty
  const BleuScores rep = bleu({{"the", "the", "the", "the"}}, {{{"the", "cat"}}});
  CHECK(rep.corpus[0] == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(rep.corpus[1] > 0.0);
  CHECK(rep.corpus[1] < 1e-6);
  // brevity penalty exp(1 - 4/2) on a perfect-precision short hypothesis
  const BleuScores brief = bleu({{"a", "b"}}, {{{"a", "b", "c", "d"}}});
  CHECK(brief.corpus[0] == doctest::Approx(std::exp(1.0 - 2.0)).epsilon(1e-8));
}

TEST_CASE("CIDEr-D on hand examples") {
  const std::vector<std::vector<Sentence>> refs{{{"a", "dog", "runs"}}, {{"a", "cat", "sleeps"}}};
  const auto c = cider_d({{"a", "dog", "runs"}, {"x"}}, refs);
  CHECK(c[1] == 0.0);
  CHECK(c[0] > 0.0);
  // a sentence only the own image contains scores 10 against itself in isolation of shared words
  const auto solo = cider_d({{"p", "q", "r", "s"}, {"t", "u", "v", "w"}}, {{{"p", "q", "r", "s"}}, {{"t", "u", "v", "w"}}});
  CHECK(solo[0] == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("golden toolkit values: varied fixtures") { check_group(load_fixtures()["fixtures"]); }

TEST_CASE("golden toolkit values: identical hypotheses") { check_group(load_fixtures()["identical"]); }

TEST_CASE("evaluation requires matching id sets and single hypotheses") {
  const CaptionSet refs{{"a", {"x y"}}, {"b", {"z"}}};
  try {
    evaluate_captions({{"a", {"x y"}}, {"c", {"z"}}}, refs);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::IdMismatch);
    CHECK(std::string(e.what()).find("b") != std::string::npos);
    CHECK(std::string(e.what()).find("c") != std::string::npos);
  }
  CHECK_THROWS_AS(evaluate_captions({{"a", {"x", "y"}}, {"b", {"z"}}}, refs), Error);
  const MetricReport r = evaluate_captions({{"a", {"X Y"}}, {"b", {"z"}}}, refs);
  CHECK(r.rouge_l == doctest::Approx(1.0));
}
