// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fsloc/numkit/matrix.hpp"

namespace fsloc::locclass {

using numkit::Matrix;

// ---------------------------------------------------------------------------
// Localization
// ---------------------------------------------------------------------------

enum class ThresholdKind : std::uint8_t { kMidrange, kLengthMatched, kFixed };

std::string_view to_string(ThresholdKind k);
ThresholdKind parse_threshold_kind(std::string_view name);

struct ThresholdPolicy {
    ThresholdKind kind = ThresholdKind::kMidrange;
    double fixed = 0.0;
    /// kLengthMatched: target mean segment length in snippets (> 0).
    double reference_length = 0.0;
    double tolerance = 0.1;  // fraction of reference_length
    int max_iterations = 50;

    static ThresholdPolicy midrange() { return {}; }
    static ThresholdPolicy fixed_at(double delta) { return {ThresholdKind::kFixed, delta}; }
    static ThresholdPolicy length_matched(double reference_length) {
        return {ThresholdKind::kLengthMatched, 0.0, reference_length};
    }
};

struct ThresholdResult {
    double delta = 0.0;
    /// kLengthMatched found no threshold that yields any segment and used the midrange.
    bool fell_back = false;
};

ThresholdResult resolve_threshold(std::span<const double> attention, const ThresholdPolicy& policy);

/// Detection (s, e, p) over query snippets, with e inclusive.
struct ActionPrediction {
    std::size_t class_index = 0;
    std::size_t start = 0;
    std::size_t end = 0;
    double score = 0.0;

    bool operator==(const ActionPrediction&) const = default;
};

/// Maximal runs of snippets with attention strictly above delta; each run is
/// scored by the mean attention over its snippets. Runs are ordered by start.
std::vector<ActionPrediction> localize(std::span<const double> attention, double delta, std::size_t class_index = 0);

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

/// Row c = sum_i normalized(i, c) * embedding(i, :). embedding is N_q x D
/// (streams already concatenated).
Matrix query_class_repr(const Matrix& normalized_tcam, const Matrix& embedding);

/// Temporal mean of a reference embedding (N_v x D) -> D.
std::vector<double> sample_repr(const Matrix& embedding);

/// prototypes[c][k] is the D-dim representation of shot k of class c.
using Prototypes = std::vector<std::vector<std::vector<double>>>;

struct ClassScores {
    std::vector<double> distances;  // d_c: mean over shots of squared distance
    std::vector<double> probs;      // softmax(-d)
};

ClassScores classify(const Matrix& query_repr, const Prototypes& prototypes);

struct ClassLoss {
    double loss = 0.0;
    /// dLoss/d distances.
    std::vector<double> d_distances;
};

/// Cross-entropy against labels normalized to sum to one.
ClassLoss class_loss(const ClassScores& scores, std::span<const double> labels);

struct ClassifyGrad {
    Matrix d_query_repr;     // C x D
    Prototypes d_prototypes;  // same layout as prototypes
};

ClassifyGrad classify_backward(const Matrix& query_repr, const Prototypes& prototypes,
                               std::span<const double> d_distances);

}  // namespace fsloc::locclass
