// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fsloc/dataio/types.hpp"
#include "fsloc/numkit/matrix.hpp"

namespace fsloc::tsm {

using dataio::StreamKind;
using numkit::Matrix;

/// Euclidean is the ablation metric, used as -||a - b|| so that larger is
/// more similar.
enum class SimilarityMetric : std::uint8_t { kCosine = 0, kDot = 1, kEuclidean = 2 };

std::string_view to_string(SimilarityMetric m);
SimilarityMetric parse_metric(std::string_view name);

double similarity(std::span<const double> a, std::span<const double> b, SimilarityMetric metric);

/// Temporal similarity matrix: entry (i, j) = f(query_i, reference_j).
struct Tsm {
    Matrix values;  // N_q x N_v
    SimilarityMetric metric = SimilarityMetric::kCosine;
    StreamKind stream = StreamKind::kRgb;
    std::size_t class_index = 0;
};

/// Cosine similarity with a zero vector is 0.
Tsm compute_tsm(const Matrix& query, const Matrix& reference, SimilarityMetric metric,
                StreamKind stream = StreamKind::kRgb, std::size_t class_index = 0);

/// Row-wise maximum of a TSM: how well each query snippet matches the reference.
struct SimilarityVector {
    std::vector<double> values;
    std::vector<std::size_t> argmax;  // first maximizing column per row
    SimilarityMetric metric = SimilarityMetric::kCosine;
    StreamKind stream = StreamKind::kRgb;
    std::size_t class_index = 0;
};

SimilarityVector maxpool_rows(const Tsm& tsm);

/// The four channels (cos-RGB, cos-FLOW, dot-RGB, dot-FLOW), in that order.
inline constexpr std::size_t kBundleChannels = 4;
struct SimilarityBundle {
    std::array<SimilarityVector, kBundleChannels> channels;
    [[nodiscard]] std::size_t length() const { return channels[0].values.size(); }
};

/// Canonical (metric, stream) of bundle channel k.
SimilarityMetric bundle_metric(std::size_t channel);
StreamKind bundle_stream(std::size_t channel);

/// query/reference are per-stream embeddings indexed by StreamKind.
SimilarityBundle similarity_bundle(const std::array<const Matrix*, 2>& query,
                                   const std::array<const Matrix*, 2>& reference, std::size_t class_index = 0);

/// Back-propagates dLoss/dvalues of a max-pooled similarity vector into the
/// query and reference embeddings (accumulating). Only the argmax entry of
/// each row receives gradient.
void similarity_backward(const Matrix& query, const Matrix& reference, const SimilarityVector& pooled,
                         std::span<const double> upstream, Matrix& d_query, Matrix& d_reference);

}  // namespace fsloc::tsm
