// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsloc/eval/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "fsloc/errors.hpp"

namespace fsloc::eval {

double tiou(const Interval& a, const Interval& b) {
    const double la = a.end - a.start;
    const double lb = b.end - b.start;
    if (!(la > 0.0) || !(lb > 0.0)) {
        return 0.0;
    }
    const double inter = std::min(a.end, b.end) - std::max(a.start, b.start);
    if (inter <= 0.0) {
        return 0.0;
    }
    return inter / (la + lb - inter);
}

ApResult average_precision(std::span<const Detection> detections, std::span<const GroundTruthSegment> truths,
                           double threshold) {
    ApResult r;
    if (truths.empty()) {
        r.no_ground_truth = true;
        return r;
    }
    std::vector<std::size_t> order(detections.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return detections[a].score > detections[b].score; });

    std::vector<bool> matched(truths.size(), false);
    std::vector<double> precision;
    std::vector<double> recall;
    std::size_t tp = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const auto& d = detections[order[rank]];
        double best = -1.0;
        std::size_t best_gt = 0;
        for (std::size_t g = 0; g < truths.size(); ++g) {
            if (matched[g] || truths[g].instance != d.instance) {
                continue;
            }
            const double t = tiou(d.segment, truths[g].segment);
            if (t > best) {
                best = t;
                best_gt = g;
            }
        }
        if (best >= threshold && best > 0.0) {
            matched[best_gt] = true;
            ++tp;
        }
        precision.push_back(static_cast<double>(tp) / static_cast<double>(rank + 1));
        recall.push_back(static_cast<double>(tp) / static_cast<double>(truths.size()));
    }
    for (std::size_t i = precision.size(); i-- > 1;) {
        precision[i - 1] = std::max(precision[i - 1], precision[i]);
    }
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < recall.size(); ++i) {
        r.ap += (recall[i] - prev_recall) * precision[i];
        prev_recall = recall[i];
    }
    return r;
}

std::vector<std::size_t> rank_classes(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

double topk_accuracy(std::span<const ScoreRow> rows, std::size_t k) {
    if (rows.empty()) {
        throw ProtocolError("topk_accuracy: no rows");
    }
    std::size_t hits = 0;
    for (const auto& row : rows) {
        if (row.scores.size() != row.labels.size()) {
            throw ShapeError("topk_accuracy: scores and labels differ in length");
        }
        if (k == 0 || k > row.scores.size()) {
            throw ValidationError("topk_accuracy: k=" + std::to_string(k) + " outside [1, " +
                                  std::to_string(row.scores.size()) + "]");
        }
        const auto order = rank_classes(row.scores);
        for (std::size_t i = 0; i < k; ++i) {
            if (row.labels[order[i]] > 0.0) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(rows.size());
}

std::vector<int> map_grid_percent() {
    std::vector<int> out;
    for (int p = 10; p <= 90; p += 10) {
        out.push_back(p);
    }
    return out;
}

std::vector<int> average_grid_percent() {
    std::vector<int> out;
    for (int p = 50; p <= 95; p += 5) {
        out.push_back(p);
    }
    return out;
}

double percent_to_threshold(int percent) { return static_cast<double>(percent) / 100.0; }

double MetricsReport::map_at(int percent) const {
    for (std::size_t i = 0; i < map_grid.size(); ++i) {
        if (map_grid[i] == percent) {
            return map[i];
        }
    }
    for (std::size_t i = 0; i < average_grid.size(); ++i) {
        if (average_grid[i] == percent) {
            return average_map_terms[i];
        }
    }
    throw ValidationError("no mAP recorded at tIoU " + std::to_string(percent) + "/100");
}

namespace {

std::string pct(int percent) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.2f", percent_to_threshold(percent));
    return buf;
}

std::string val(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

std::string report_to_csv(const MetricsReport& report) {
    std::string out = "metric,threshold,value\n";
    const auto& m = report.meta;
    out += "meta.ways,," + std::to_string(m.ways) + "\n";
    out += "meta.shots,," + std::to_string(m.shots) + "\n";
    out += "meta.queries_per_class,," + std::to_string(m.queries_per_class) + "\n";
    out += "meta.episodes,," + std::to_string(m.episodes) + "\n";
    out += "meta.repetitions,," + std::to_string(m.repetitions) + "\n";
    out += "meta.seed,," + std::to_string(m.seed) + "\n";
    out += "meta.threshold_policy,," + m.threshold_policy + "\n";
    out += "meta.aggregation,," + m.aggregation + "\n";
    out += "meta.multiply_class_score,," + std::string(m.multiply_class_score ? "true" : "false") + "\n";
    out += "meta.model,," + m.model + "\n";
    for (std::size_t i = 0; i < report.map_grid.size(); ++i) {
        out += "mAP," + pct(report.map_grid[i]) + "," + val(report.map[i]) + "\n";
    }
    out += "avg_mAP," + pct(report.average_grid.front()) + ":0.05:" + pct(report.average_grid.back()) + "," +
           val(report.average_map) + "\n";
    out += "top1,," + val(report.top1) + "\n";
    out += "top" + std::to_string(report.top3_k) + ",," + val(report.top3) + "\n";
    out += "classes_without_gt,," + std::to_string(report.classes_without_gt) + "\n";
    for (const auto& c : report.per_class) {
        for (std::size_t i = 0; i < report.map_grid.size(); ++i) {
            out += "ap.class" + std::to_string(c.class_id) + "," + pct(report.map_grid[i]) + "," + val(c.ap[i]) +
                   "\n";
        }
    }
    return out;
}

std::string report_summary(const MetricsReport& report) {
    const auto& m = report.meta;
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%d-way %d-shot, %d episodes x %d repetitions (median), seed %llu, model %s\n",
                  m.ways, m.shots, m.episodes, m.repetitions, static_cast<unsigned long long>(m.seed),
                  m.model.c_str());
    out += buf;
    out += "tIoU    ";
    for (const int p : report.map_grid) {
        std::snprintf(buf, sizeof buf, " %6.1f", percent_to_threshold(p));
        out += buf;
    }
    out += "    avg\nmAP(%)  ";
    for (const double v : report.map) {
        std::snprintf(buf, sizeof buf, " %6.2f", 100.0 * v);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, " %6.2f\n", 100.0 * report.average_map);
    out += buf;
    std::snprintf(buf, sizeof buf, "top-1 %.2f%%  top-%zu %.2f%%\n", 100.0 * report.top1, report.top3_k,
                  100.0 * report.top3);
    out += buf;
    return out;
}

}  // namespace fsloc::eval
