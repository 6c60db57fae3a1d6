// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "fsloc/dataio/types.hpp"

namespace fsloc::dataio {

// ---------------------------------------------------------------------------
// Manifest (JSON)
// ---------------------------------------------------------------------------

DatasetManifest parse_manifest(const std::string& text);
DatasetManifest load_manifest(const std::filesystem::path& path);
std::string manifest_to_json(const DatasetManifest& manifest);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

// ---------------------------------------------------------------------------
// .fsl feature files
//
// Little endian: "FSL1", u32 version = 1, u32 stream count = 2, then per
// stream: u8 tag (0 = RGB, 1 = FLOW), u32 N, u32 dim = 1024, N * dim float32
// values, row-major.
// ---------------------------------------------------------------------------

std::vector<unsigned char> encode_features(const SnippetFeatureSet& features);
SnippetFeatureSet decode_features(const std::vector<unsigned char>& bytes, const std::string& video_id);
void save_features(const std::filesystem::path& path, const SnippetFeatureSet& features);
SnippetFeatureSet load_features(const std::filesystem::path& path, const std::string& video_id);

/// Rounds every entry to the nearest float32, the precision features have on disk.
void round_to_storage_precision(SnippetFeatureSet& features);

/// Thread-safe, lazily populated feature lookup keyed by video id.
class FeatureStore {
public:
    FeatureStore() = default;
    explicit FeatureStore(std::filesystem::path directory);

    void insert(SnippetFeatureSet features);
    /// Loads <directory>/<video_id>.fsl on first use. Throws ValidationError
    /// naming the video when the file is missing.
    const SnippetFeatureSet& get(const std::string& video_id) const;
    [[nodiscard]] bool contains(const std::string& video_id) const;

private:
    std::filesystem::path directory_;
    mutable std::mutex mutex_;
    mutable std::map<std::string, std::unique_ptr<SnippetFeatureSet>> cache_;
};

/// Resolves the feature directory of a manifest stored at manifest_path.
std::filesystem::path feature_directory(const DatasetManifest& manifest,
                                        const std::filesystem::path& manifest_path);

// ---------------------------------------------------------------------------
// Prediction CSV
// ---------------------------------------------------------------------------

enum class TimeUnit : std::uint8_t { kSeconds, kSnippets };

struct PredictionRecord {
    std::string video_id;
    ClassId class_id = 0;
    double start = 0.0;
    double end = 0.0;
    double score = 0.0;
};

/// Sorts by (video id, class id, descending score, start) with a stable tie
/// rule and writes `video_id,class_id,start_<unit>,end_<unit>,score` rows with
/// six decimals. Throws ValidationError for a class id outside known_classes.
void write_predictions(const std::filesystem::path& path, std::vector<PredictionRecord> predictions,
                       const std::set<ClassId>& known_classes, TimeUnit unit);
std::string format_predictions(std::vector<PredictionRecord> predictions, const std::set<ClassId>& known_classes,
                               TimeUnit unit);

struct PredictionFile {
    TimeUnit unit = TimeUnit::kSeconds;
    std::vector<PredictionRecord> records;
};

PredictionFile read_predictions(const std::filesystem::path& path);
PredictionFile parse_predictions(const std::string& text);

/// Whole-file helpers.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace fsloc::dataio
