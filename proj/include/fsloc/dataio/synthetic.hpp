// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fsloc/dataio/types.hpp"

namespace fsloc::dataio {

/// Parameters of the synthetic two-stream feature generator.
///
/// Every class owns one unit-norm prototype per stream. Prototypes (and the
/// background modes) are drawn inside a random `signal_rank`-dimensional
/// subspace of the 1024-d feature space shared by all classes, so structure
/// learned on training classes transfers to held-out ones. A snippet is
/// `separation * prototype + noise * eps` with eps ~ N(0, I).
struct SyntheticSpec {
    int classes = 15;
    int train_classes = 10;
    int trimmed_per_class = 20;
    int untrimmed_per_class = 60;
    int min_snippets = 12;
    int max_snippets = 16;
    int min_instances = 1;
    int max_instances = 2;
    int min_action_length = 2;
    int max_action_length = 5;
    /// Length range of trimmed videos; 0 reuses the action length range.
    int min_trimmed_snippets = 8;
    int max_trimmed_snippets = 12;
    double separation = 4.0;
    double noise = 1.0;
    int signal_rank = 6;
    int background_modes = 1;
    /// Background modes live in their own subspace of this rank, orthogonal
    /// to the class subspace; 0 puts them in the class subspace.
    int background_rank = 0;
    double fps = 32.0;
    std::uint64_t seed = 7;

    /// Throws SpecError for non-positive counts, separation <= 0, or a
    /// packing that cannot fit max_instances actions into min_snippets.
    void validate() const;
};

SyntheticSpec parse_synthetic_spec(const std::string& json_text);
std::string synthetic_spec_to_json(const SyntheticSpec& spec);

struct SyntheticDataset {
    DatasetManifest manifest;
    std::vector<SnippetFeatureSet> features;  // same order as manifest.videos
    /// Prototype per class per stream (row c = class c), for oracle checks.
    std::array<Matrix, 2> prototypes;
};

/// Pure function of the spec: identical specs give identical datasets.
SyntheticDataset gen_synthetic(const SyntheticSpec& spec);

/// Writes <out_dir>/manifest.json and <out_dir>/features/<video_id>.fsl.
void write_synthetic(const std::filesystem::path& out_dir, const SyntheticDataset& dataset);

}  // namespace fsloc::dataio
