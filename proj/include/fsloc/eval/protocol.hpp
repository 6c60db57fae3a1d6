// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "fsloc/dataio/io.hpp"
#include "fsloc/episodes/episode.hpp"
#include "fsloc/eval/metrics.hpp"
#include "fsloc/locclass/locclass.hpp"
#include "fsloc/trainer/model.hpp"

namespace fsloc::eval {

enum class Aggregation : std::uint8_t { kPooled, kPerEpisode };

std::string_view to_string(Aggregation a);
Aggregation parse_aggregation(std::string_view name);

struct ProtocolConfig {
    episodes::EpisodeConfig episode{5, 1, 1};
    int episodes = 50;
    int repetitions = 3;
    std::uint64_t seed = 0;
    /// Only the kind (and the fixed value) is read; length-matched references
    /// come from each class's sample set.
    locclass::ThresholdPolicy threshold;
    Aggregation aggregation = Aggregation::kPooled;
    /// Multiply each detection score by the class probability of its query.
    bool multiply_class_score = false;
    int workers = 1;

    void validate() const;
};

/// Detections for one query over all episode classes, in class order.
struct QueryDetections {
    std::vector<locclass::ActionPrediction> predictions;
    std::vector<bool> threshold_fell_back;  // per class
};

QueryDetections detect_query(const trainer::QueryOutput& query, const episodes::Episode& episode,
                             const dataio::FeatureStore& store, const locclass::ThresholdPolicy& policy,
                             bool multiply_class_score);

/// Mean snippet count of the class's sample-set videos.
double sample_reference_length(const episodes::Episode& episode, std::size_t class_index,
                               const dataio::FeatureStore& store);

/// When `predictions` is given it receives the first repetition's detections
/// (snippet units, end exclusive) in episode order.
MetricsReport run_protocol(const dataio::DatasetManifest& manifest, const dataio::FeatureStore& store,
                           const trainer::Model& model, const ProtocolConfig& cfg,
                           std::vector<dataio::PredictionRecord>* predictions = nullptr);

/// Median; the mean of the two middle values for even counts.
double median(std::vector<double> values);

}  // namespace fsloc::eval
