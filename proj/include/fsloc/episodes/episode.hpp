// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fsloc/dataio/types.hpp"
#include "fsloc/numkit/rng.hpp"

namespace fsloc::episodes {

using dataio::ClassId;

struct EpisodeConfig {
    int ways = 5;               // C
    int shots = 1;              // K
    int queries_per_class = 8;

    void validate() const;
};

struct SampleEntry {
    ClassId class_id = 0;
    std::string video_id;
};

struct QueryEntry {
    std::string video_id;
    /// Multi-hot over the episode classes (local index order).
    std::vector<double> labels;
};

/// One C-way K-shot task. sample_set[c] holds the K trimmed references of
/// local class c, whose global id is classes[c].
struct Episode {
    std::vector<ClassId> classes;
    std::vector<std::vector<SampleEntry>> sample_set;
    std::vector<QueryEntry> queries;

    [[nodiscard]] std::size_t ways() const { return classes.size(); }
    [[nodiscard]] std::size_t shots() const { return sample_set.empty() ? 0 : sample_set.front().size(); }
};

/// Draws C classes uniformly without replacement from the split, K distinct
/// trimmed videos per class for the sample set, and up to queries_per_class
/// untrimmed videos containing each class for the query set. Throws
/// EpisodeError naming the class when it lacks videos.
Episode sample_episode(const dataio::DatasetManifest& manifest, dataio::Split split, const EpisodeConfig& cfg,
                       numkit::RngStream& rng);

inline Episode sample_train_episode(const dataio::DatasetManifest& manifest, const EpisodeConfig& cfg,
                                    numkit::RngStream& rng) {
    return sample_episode(manifest, dataio::Split::kTrain, cfg, rng);
}

inline Episode sample_test_episode(const dataio::DatasetManifest& manifest, const EpisodeConfig& cfg,
                                   numkit::RngStream& rng) {
    return sample_episode(manifest, dataio::Split::kTest, cfg, rng);
}

}  // namespace fsloc::episodes
