// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsloc/dataio/types.hpp"

#include <algorithm>

#include "fsloc/errors.hpp"

namespace fsloc::dataio {

std::string_view to_string(StreamKind s) { return s == StreamKind::kRgb ? "rgb" : "flow"; }

void SnippetFeatureSet::validate() const {
    const std::size_t n = streams[0].rows();
    if (n == 0) {
        throw FormatError("video '" + video_id + "': no snippets");
    }
    for (const StreamKind s : kStreams) {
        const Matrix& m = stream(s);
        if (m.rows() != n) {
            throw FormatError("video '" + video_id + "': stream " + std::string(to_string(s)) + " has " +
                              std::to_string(m.rows()) + " snippets, expected " + std::to_string(n));
        }
        if (m.cols() != kFeatureDim) {
            throw FormatError("video '" + video_id + "': feature dimension " + std::to_string(m.cols()) +
                              " != " + std::to_string(kFeatureDim));
        }
        if (!m.all_finite()) {
            throw FormatError("video '" + video_id + "': non-finite feature value in stream " +
                              std::string(to_string(s)));
        }
    }
}

bool VideoRecord::has_label(ClassId c) const { return std::binary_search(labels.begin(), labels.end(), c); }

const VideoRecord* DatasetManifest::find_video(std::string_view id) const {
    for (const auto& v : videos) {
        if (v.video_id == id) {
            return &v;
        }
    }
    return nullptr;
}

const ClassInfo* DatasetManifest::find_class(ClassId id) const {
    for (const auto& c : classes) {
        if (c.id == id) {
            return &c;
        }
    }
    return nullptr;
}

std::set<ClassId> DatasetManifest::class_ids() const {
    std::set<ClassId> ids;
    for (const auto& c : classes) {
        ids.insert(c.id);
    }
    return ids;
}

void DatasetManifest::validate() const {
    std::set<ClassId> ids;
    for (const auto& c : classes) {
        if (!ids.insert(c.id).second) {
            throw ValidationError("class " + std::to_string(c.id) + ": duplicate class id");
        }
    }
    for (const auto* split : {&train_classes, &test_classes}) {
        for (const ClassId c : *split) {
            if (!ids.contains(c)) {
                throw ValidationError("split: unknown class id " + std::to_string(c));
            }
        }
    }
    for (const ClassId c : train_classes) {
        if (std::find(test_classes.begin(), test_classes.end(), c) != test_classes.end()) {
            throw ValidationError("split: class " + std::to_string(c) + " appears in both train and test");
        }
    }
    if (videos.empty()) {
        throw ValidationError("manifest: no videos");
    }
    std::set<std::string> seen;
    for (const auto& v : videos) {
        const std::string where = "video '" + v.video_id + "'";
        if (v.video_id.empty()) {
            throw ValidationError("video with empty id");
        }
        if (!seen.insert(v.video_id).second) {
            throw ValidationError(where + ": duplicate video id");
        }
        if (v.labels.empty()) {
            throw ValidationError(where + ": labels must be non-empty");
        }
        if (v.trimmed && v.labels.size() != 1) {
            throw ValidationError(where + ": trimmed video must carry exactly one label");
        }
        for (const ClassId c : v.labels) {
            if (!ids.contains(c)) {
                throw ValidationError(where + ": unknown class id " + std::to_string(c));
            }
        }
        if (v.fps && !(*v.fps > 0.0)) {
            throw ValidationError(where + ": fps must be positive");
        }
        for (const auto& seg : v.segments) {
            if (!(seg.start < seg.end)) {
                throw ValidationError(where + ": segment start must precede end");
            }
            if (!ids.contains(seg.class_id)) {
                throw ValidationError(where + ": segment has unknown class id " + std::to_string(seg.class_id));
            }
        }
    }
}

}  // namespace fsloc::dataio
