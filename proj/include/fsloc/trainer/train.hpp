// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fsloc/dataio/io.hpp"
#include "fsloc/episodes/episode.hpp"
#include "fsloc/trainer/model.hpp"

namespace fsloc::trainer {

struct TrainConfig {
    int episodes = 10000;
    episodes::EpisodeConfig episode;
    double learning_rate = 1e-4;
    double lr_decay = 0.5;
    /// Episodes after this one run at learning_rate * lr_decay.
    int lr_decay_episode = 1000;
    double weight_decay = 5e-4;
    std::uint64_t seed = 0;
    ModelOptions model;
    /// 0 disables intermediate checkpoints.
    int checkpoint_every = 1000;

    void validate() const;
    /// Learning rate used for 1-based episode `e`.
    [[nodiscard]] double learning_rate_at(int e) const;
};

/// key=value pairs, one per line; blank lines and '#' comments are ignored.
using ConfigEntries = std::map<std::string, std::string>;

ConfigEntries parse_config_text(const std::string& text);
/// Applies entries on top of `cfg`. Unknown keys and unparsable values throw ValidationError.
void apply_config(TrainConfig& cfg, const ConfigEntries& entries);
/// Every field as key=value lines in a fixed order; round-trips through parse/apply.
std::string config_to_text(const TrainConfig& cfg);
std::vector<std::string> config_keys();

struct TrainLogRow {
    int episode = 0;
    double loss = 0.0;
    double learning_rate = 0.0;
    /// Fraction of the episode's queries whose top class is a positive label.
    double top1 = 0.0;
};

std::string format_train_log(const std::vector<TrainLogRow>& rows);

struct TrainResult {
    Model model;
    std::vector<TrainLogRow> log;
};

struct TrainOutputs {
    /// When set: checkpoint_<episode>.fslp every checkpoint_every episodes,
    /// model.fslp at the end and train_log.csv.
    std::optional<std::filesystem::path> directory;
    std::function<void(const TrainLogRow&)> on_episode;
};

/// Episodic training. Throws NumericError naming the episode and its seed
/// when the loss stops being finite.
TrainResult train(const dataio::DatasetManifest& manifest, const dataio::FeatureStore& store,
                  const TrainConfig& cfg, const TrainOutputs& outputs = {});

/// Per-episode random stream; the sampler and dropout draw from named splits of it.
numkit::RngStream episode_stream(std::uint64_t seed, int episode);

}  // namespace fsloc::trainer
