// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

// Regenerates the bundled toy corpus: eight images whose four region
// features are noisy copies of per-word prototype vectors, so every caption
// word is visually grounded.
//
//   make_toy_corpus <output dir>

#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "scfc/corpus.hpp"
#include "scfc/error.hpp"
#include "scfc/random.hpp"

namespace {

constexpr std::size_t kRegionDim = 8;
constexpr std::size_t kRegions = 4;
constexpr double kNoise = 0.05;

struct ToyImage {
  const char* id;
  const char* caption;
  std::vector<const char*> grounded;  // one word per region
};

const std::vector<ToyImage> kImages = {
    {"toy_01", "a red dog on the grass", {"red", "dog", "grass", "on"}},
    {"toy_02", "a blue cat on the sofa", {"blue", "cat", "sofa", "on"}},
    {"toy_03", "a green bird on the tree", {"green", "bird", "tree", "on"}},
    {"toy_04", "a red cat sits", {"red", "cat", "sits", "a"}},
    {"toy_05", "a blue dog on the sofa", {"blue", "dog", "sofa", "on"}},
    {"toy_06", "a green dog sits on grass", {"green", "dog", "grass", "sits"}},
    {"toy_07", "the red bird sits", {"red", "bird", "sits", "the"}},
    {"toy_08", "a blue bird on the grass", {"blue", "bird", "grass", "on"}},
};

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: make_toy_corpus <output dir>\n");
    return 2;
  }
  try {
    const std::filesystem::path root = argv[1];
    std::filesystem::create_directories(root / "features");
    scfc::Rng rng(20260101);
    std::map<std::string, std::vector<double>> prototypes;
    const auto prototype = [&](const std::string& word) -> const std::vector<double>& {
      auto it = prototypes.find(word);
      if (it == prototypes.end()) {
        std::vector<double> v(kRegionDim);
        for (double& x : v) x = rng.normal();
        it = prototypes.emplace(word, std::move(v)).first;
      }
      return it->second;
    };
    for (const char* word : {"a", "the", "on", "sits", "red", "blue", "green", "dog", "cat", "bird", "grass", "sofa", "tree"})
      prototype(word);

    scfc::CaptionSet captions;
    for (const auto& image : kImages) {
      std::vector<double> values;
      for (std::size_t r = 0; r < kRegions; ++r) {
        for (double x : prototype(image.grounded[r])) values.push_back(x + kNoise * rng.normal());
      }
      scfc::write_region_features(root / "features" / (std::string(image.id) + ".feat"),
                                  scfc::Tensor::from({kRegions, kRegionDim}, std::move(values)));
      captions[image.id] = {image.caption};
    }
    scfc::write_captions(root / "captions.json", captions);
  } catch (const scfc::Error& e) {
    std::fprintf(stderr, "make_toy_corpus: %s\n", e.what());
    return 1;
  }
  return 0;
}
