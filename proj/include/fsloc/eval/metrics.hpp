// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fsloc/dataio/types.hpp"

namespace fsloc::eval {

using dataio::ClassId;

/// Half-open interval [start, end) on the real line (snippet units).
struct Interval {
    double start = 0.0;
    double end = 0.0;
};

/// Intersection over union; 0 for disjoint intervals or when either is degenerate.
double tiou(const Interval& a, const Interval& b);

struct Detection {
    std::size_t instance = 0;  // which (episode, query) the detection belongs to
    Interval segment;
    double score = 0.0;
};

struct GroundTruthSegment {
    std::size_t instance = 0;
    Interval segment;
};

struct ApResult {
    double ap = 0.0;
    /// No ground truth was given; ap is 0 by convention.
    bool no_ground_truth = false;
};

/// Per-class AP. Detections are ranked by descending score (ties keep input
/// order); each one matches its best-tIoU unmatched ground truth in the same
/// instance and counts as a true positive when that tIoU >= threshold. AP is
/// the area under the precision-envelope / recall step curve.
ApResult average_precision(std::span<const Detection> detections, std::span<const GroundTruthSegment> truths,
                           double threshold);

struct ScoreRow {
    std::vector<double> scores;  // one per class
    std::vector<double> labels;  // multi-hot, same length
};

/// Fraction of rows whose k highest-scored classes (ties to the lower index)
/// contain a positive label.
double topk_accuracy(std::span<const ScoreRow> rows, std::size_t k);

/// Classes ranked by descending score, ties broken by lower index.
std::vector<std::size_t> rank_classes(std::span<const double> scores);

/// Thresholds are handled as integer hundredths so grids compare exactly.
std::vector<int> map_grid_percent();      // 10, 20, ..., 90
std::vector<int> average_grid_percent();  // 50, 55, ..., 95
double percent_to_threshold(int percent);

struct ProtocolMeta {
    int ways = 0;
    int shots = 0;
    int queries_per_class = 0;
    int episodes = 0;
    int repetitions = 0;
    std::uint64_t seed = 0;
    std::string threshold_policy;
    std::string aggregation;
    bool multiply_class_score = false;
    std::string model;
};

struct ClassAp {
    ClassId class_id = 0;
    std::vector<double> ap;  // aligned with map_grid
};

struct MetricsReport {
    std::vector<int> map_grid;       // percent
    std::vector<double> map;         // mAP per map_grid entry
    std::vector<int> average_grid;   // percent
    std::vector<double> average_map_terms;  // mAP per average_grid entry
    double average_map = 0.0;       // mean of average_map_terms
    double top1 = 0.0;
    double top3 = 0.0;
    std::size_t top3_k = 3;          // min(3, ways)
    std::vector<ClassAp> per_class;
    std::size_t classes_without_gt = 0;
    ProtocolMeta meta;

    /// mAP at a grid threshold given in hundredths; throws if not on either grid.
    [[nodiscard]] double map_at(int percent) const;
};

/// CSV with header metric,threshold,value.
std::string report_to_csv(const MetricsReport& report);
/// Human-readable table: one row of mAP over the grid, then the average and top-k.
std::string report_summary(const MetricsReport& report);

}  // namespace fsloc::eval
