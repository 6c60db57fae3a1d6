// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fsloc/eval/metrics.hpp"

namespace fsloc::cli {

struct ClassTrack {
    std::string label;
    std::vector<double> attention;  // raw TCAM column
    double threshold = 0.0;
    std::vector<eval::Interval> predictions;
    std::vector<eval::Interval> ground_truth;
};

struct LocalizationFigure {
    std::string title;
    std::size_t snippets = 0;
    /// Seconds per snippet for the axis labels; snippet indices when absent.
    std::optional<double> seconds_per_snippet;
    /// false hides the ground-truth band entirely (query without annotations).
    bool has_ground_truth = false;
    std::vector<ClassTrack> tracks;
};

/// Deterministic SVG: per class a heat strip of the attention, its curve with
/// the threshold line, predicted segments and (optionally) ground truth.
std::string render_localization_svg(const LocalizationFigure& figure);

}  // namespace fsloc::cli
