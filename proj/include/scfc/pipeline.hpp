// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end commands over files on disk.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "scfc/config.hpp"
#include "scfc/corpus.hpp"
#include "scfc/model.hpp"
#include "scfc/training.hpp"

namespace scfc {

ModelConfig model_config(const RunConfig& run, const Vocabulary& vocab, const AttributeCatalog& catalog);
TrainConfig train_config(const RunConfig& run);

// The vocabulary is ordered by frequency, so the c most frequent caption
// words are its first c regular tokens.
AttributeCatalog catalog_from_vocabulary(const Vocabulary& vocab, std::size_t count);

// <image_id>.feat files of a directory, sorted by id.
std::vector<std::pair<std::string, Tensor>> load_feature_directory(const std::string& dir);

std::vector<TrainingSample> build_samples(const CaptionSet& captions, const Vocabulary& vocab,
                                          const AttributeCatalog& catalog, const std::string& features_dir);

// Trains and writes the checkpoint, its vocabulary and the epoch log.
// Returns the log as JSON lines.
std::string run_train(const RunConfig& run);

// Returns the captions document.
std::string run_caption(const RunConfig& run);

MetricReport run_eval(const RunConfig& run);
std::string metric_report_json(const MetricReport& report);

// S sweep (fresh XE training per S) and beam sweep (on the model trained with
// the configured S), both scored against the training captions.
std::string run_sweep(const RunConfig& run);

}  // namespace scfc
