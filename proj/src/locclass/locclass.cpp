// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsloc/locclass/locclass.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fsloc/errors.hpp"
#include "fsloc/numkit/ops.hpp"

namespace fsloc::locclass {

std::string_view to_string(ThresholdKind k) {
    switch (k) {
        case ThresholdKind::kMidrange:
            return "midrange";
        case ThresholdKind::kLengthMatched:
            return "length";
        case ThresholdKind::kFixed:
            return "fixed";
    }
    return "?";
}

ThresholdKind parse_threshold_kind(std::string_view name) {
    if (name == "midrange") {
        return ThresholdKind::kMidrange;
    }
    if (name == "length" || name == "length_matched") {
        return ThresholdKind::kLengthMatched;
    }
    if (name == "fixed") {
        return ThresholdKind::kFixed;
    }
    throw ValidationError("unknown threshold policy '" + std::string(name) + "'");
}

namespace {

double midrange(std::span<const double> a) {
    const auto [lo, hi] = std::minmax_element(a.begin(), a.end());
    return (*hi + *lo) / 2.0;
}

double mean_length(const std::vector<ActionPrediction>& segments) {
    double total = 0.0;
    for (const auto& s : segments) {
        total += static_cast<double>(s.end - s.start + 1);
    }
    return total / static_cast<double>(segments.size());
}

}  // namespace

ThresholdResult resolve_threshold(std::span<const double> attention, const ThresholdPolicy& policy) {
    if (attention.empty()) {
        throw ShapeError("resolve_threshold: empty attention");
    }
    switch (policy.kind) {
        case ThresholdKind::kFixed:
            return {policy.fixed, false};
        case ThresholdKind::kMidrange:
            return {midrange(attention), false};
        case ThresholdKind::kLengthMatched:
            break;
    }
    if (!(policy.reference_length > 0.0)) {
        throw ValidationError("length-matched threshold needs a positive reference length");
    }
    const auto [lo_it, hi_it] = std::minmax_element(attention.begin(), attention.end());
    double lo = *lo_it;
    double hi = *hi_it;
    const double target = policy.reference_length;
    bool found = false;
    double best_delta = 0.0;
    double best_gap = 0.0;
    for (int it = 0; it < policy.max_iterations; ++it) {
        const double delta = (lo + hi) / 2.0;
        const auto segments = localize(attention, delta);
        if (segments.empty()) {
            hi = delta;
            continue;
        }
        const double len = mean_length(segments);
        const double gap = std::abs(len - target);
        if (!found || gap < best_gap) {
            found = true;
            best_gap = gap;
            best_delta = delta;
        }
        if (gap <= policy.tolerance * target) {
            break;
        }
        if (len > target) {
            lo = delta;
        } else {
            hi = delta;
        }
    }
    if (!found) {
        return {midrange(attention), true};
    }
    return {best_delta, false};
}

std::vector<ActionPrediction> localize(std::span<const double> attention, double delta, std::size_t class_index) {
    std::vector<ActionPrediction> out;
    std::size_t i = 0;
    while (i < attention.size()) {
        if (!(attention[i] > delta)) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        double sum = 0.0;
        while (i < attention.size() && attention[i] > delta) {
            sum += attention[i];
            ++i;
        }
        out.push_back({class_index, start, i - 1, sum / static_cast<double>(i - start)});
    }
    return out;
}

Matrix query_class_repr(const Matrix& normalized_tcam, const Matrix& embedding) {
    if (normalized_tcam.rows() != embedding.rows()) {
        throw ShapeError("query_class_repr: attention " + normalized_tcam.shape_str() + " vs embedding " +
                         embedding.shape_str());
    }
    return numkit::matmul_tn(normalized_tcam, embedding);
}

std::vector<double> sample_repr(const Matrix& embedding) {
    if (embedding.rows() == 0) {
        throw ShapeError("sample_repr: empty reference video");
    }
    return numkit::column_means(embedding);
}

ClassScores classify(const Matrix& query_repr, const Prototypes& prototypes) {
    const std::size_t classes = query_repr.rows();
    if (classes == 0 || prototypes.size() != classes) {
        throw ShapeError("classify: " + std::to_string(query_repr.rows()) + " class rows vs " +
                         std::to_string(prototypes.size()) + " prototype groups");
    }
    ClassScores s;
    s.distances.resize(classes);
    for (std::size_t c = 0; c < classes; ++c) {
        const auto& shots = prototypes[c];
        if (shots.empty()) {
            throw ShapeError("classify: class " + std::to_string(c) + " has no prototypes");
        }
        const auto row = query_repr.row(c);
        double total = 0.0;
        for (const auto& p : shots) {
            if (p.size() != row.size()) {
                throw ShapeError("classify: prototype width " + std::to_string(p.size()) + " vs representation " +
                                 std::to_string(row.size()));
            }
            double d = 0.0;
            for (std::size_t k = 0; k < row.size(); ++k) {
                d += (row[k] - p[k]) * (row[k] - p[k]);
            }
            total += d;
        }
        s.distances[c] = total / static_cast<double>(shots.size());
    }
    std::vector<double> logits(classes);
    for (std::size_t c = 0; c < classes; ++c) {
        logits[c] = -s.distances[c];
    }
    s.probs = numkit::softmax(logits);
    return s;
}

ClassLoss class_loss(const ClassScores& scores, std::span<const double> labels) {
    const std::size_t classes = scores.probs.size();
    if (labels.size() != classes) {
        throw ShapeError("class_loss: " + std::to_string(labels.size()) + " labels for " + std::to_string(classes) +
                         " classes");
    }
    double positives = 0.0;
    for (const double y : labels) {
        positives += y;
    }
    if (!(positives > 0.0)) {
        throw ValidationError("class_loss: label vector has no positive class");
    }
    // log softmax from the distances directly keeps the loss finite when a
    // probability underflows.
    double peak = -scores.distances[0];
    for (const double d : scores.distances) {
        peak = std::max(peak, -d);
    }
    double log_norm = 0.0;
    for (const double d : scores.distances) {
        log_norm += std::exp(-d - peak);
    }
    log_norm = std::log(log_norm) + peak;
    ClassLoss out;
    out.d_distances.resize(classes);
    for (std::size_t c = 0; c < classes; ++c) {
        const double target = labels[c] / positives;
        out.loss -= target * (-scores.distances[c] - log_norm);
        // dL/dlogit = p - target, logit = -d.
        out.d_distances[c] = target - scores.probs[c];
    }
    return out;
}

ClassifyGrad classify_backward(const Matrix& query_repr, const Prototypes& prototypes,
                               std::span<const double> d_distances) {
    ClassifyGrad g;
    g.d_query_repr = Matrix(query_repr.rows(), query_repr.cols());
    g.d_prototypes.resize(prototypes.size());
    for (std::size_t c = 0; c < prototypes.size(); ++c) {
        const auto& shots = prototypes[c];
        const double scale = 2.0 * d_distances[c] / static_cast<double>(shots.size());
        const auto row = query_repr.row(c);
        auto d_row = g.d_query_repr.row(c);
        g.d_prototypes[c].resize(shots.size());
        for (std::size_t k = 0; k < shots.size(); ++k) {
            auto& dp = g.d_prototypes[c][k];
            dp.resize(row.size());
            for (std::size_t j = 0; j < row.size(); ++j) {
                const double diff = scale * (row[j] - shots[k][j]);
                d_row[j] += diff;
                dp[j] = -diff;
            }
        }
    }
    return g;
}

}  // namespace fsloc::locclass
