// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fsloc/numkit/matrix.hpp"

namespace fsloc::dataio {

using numkit::Matrix;

/// Snippet feature width per stream.
inline constexpr std::size_t kFeatureDim = 1024;
/// Frames per snippet; snippet i covers seconds [i * 16 / fps, (i + 1) * 16 / fps).
inline constexpr double kFramesPerSnippet = 16.0;

enum class StreamKind : std::uint8_t { kRgb = 0, kFlow = 1 };
inline constexpr std::array<StreamKind, 2> kStreams = {StreamKind::kRgb, StreamKind::kFlow};

std::string_view to_string(StreamKind s);
inline std::size_t index_of(StreamKind s) { return static_cast<std::size_t>(s); }

using ClassId = std::int32_t;

/// Per-video snippet features, one N x 1024 matrix per stream.
struct SnippetFeatureSet {
    std::string video_id;
    std::array<Matrix, 2> streams;

    [[nodiscard]] const Matrix& stream(StreamKind s) const { return streams[index_of(s)]; }
    Matrix& stream(StreamKind s) { return streams[index_of(s)]; }
    [[nodiscard]] std::size_t snippets() const { return streams[0].rows(); }

    /// Throws FormatError when streams disagree on N, the width is not 1024,
    /// N is zero, or any entry is non-finite.
    void validate() const;
};

/// Ground-truth segment in snippet units, [start, end) on the real line.
struct SegmentAnnotation {
    ClassId class_id = 0;
    double start = 0.0;
    double end = 0.0;
};

struct VideoRecord {
    std::string video_id;
    bool trimmed = false;
    std::vector<ClassId> labels;  // sorted, unique
    std::optional<double> fps;
    std::vector<SegmentAnnotation> segments;  // snippet units; evaluation only

    [[nodiscard]] bool has_label(ClassId c) const;
};

enum class Split : std::uint8_t { kTrain, kTest };

struct ClassInfo {
    ClassId id = 0;
    std::string name;
};

struct DatasetManifest {
    std::vector<ClassInfo> classes;
    std::vector<ClassId> train_classes;  // sorted
    std::vector<ClassId> test_classes;   // sorted
    std::vector<VideoRecord> videos;
    /// Directory holding <video_id>.fsl files; empty means "same directory as the manifest".
    std::string feature_dir;

    [[nodiscard]] const std::vector<ClassId>& split_classes(Split s) const {
        return s == Split::kTrain ? train_classes : test_classes;
    }
    [[nodiscard]] const VideoRecord* find_video(std::string_view id) const;
    [[nodiscard]] const ClassInfo* find_class(ClassId id) const;
    [[nodiscard]] std::set<ClassId> class_ids() const;

    /// Throws ValidationError naming the offending record.
    void validate() const;
};

}  // namespace fsloc::dataio
