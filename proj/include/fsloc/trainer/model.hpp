// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fsloc/dataio/io.hpp"
#include "fsloc/encoder/encoder.hpp"
#include "fsloc/episodes/episode.hpp"
#include "fsloc/locclass/locclass.hpp"
#include "fsloc/tcam/tcam.hpp"
#include "fsloc/tsm/tsm.hpp"

namespace fsloc::trainer {

using numkit::Matrix;
using numkit::ParamTensor;
using tsm::SimilarityMetric;

enum class PoolingMode : std::uint8_t { kWeighted, kAverage };

std::string_view to_string(PoolingMode p);
PoolingMode parse_pooling(std::string_view name);

struct ModelOptions {
    /// false: raw 1024-d features feed the similarity matrices directly.
    bool learn_phi = true;
    /// false: attention is the plain mean of the enabled similarity vectors.
    bool learn_psi = true;
    std::vector<SimilarityMetric> metrics{SimilarityMetric::kCosine, SimilarityMetric::kDot};
    PoolingMode pooling = PoolingMode::kWeighted;
    double dropout = encoder::kDefaultDropout;

    /// Throws ValidationError: no metric, duplicate metric, Euclidean with the
    /// learned generator, or a dropout rate outside [0, 1).
    void validate() const;
    [[nodiscard]] bool uses_metric(SimilarityMetric m) const;
    /// Width of one stream's embedding (128, or 1024 without the encoder).
    [[nodiscard]] std::size_t stream_dim() const;
};

std::string metrics_to_string(const std::vector<SimilarityMetric>& metrics);
std::vector<SimilarityMetric> parse_metrics(std::string_view list);

struct Model {
    ModelOptions options;
    encoder::EncoderParams encoder;
    tcam::GeneratorParams generator;

    /// Tensors updated by the optimizer under the current flags.
    std::vector<ParamTensor*> trainable();
    std::vector<const ParamTensor*> trainable() const;
};

Model init_model(const ModelOptions& options, std::uint64_t seed);

/// Model with both learnable parts disabled.
Model no_learn_model(std::vector<SimilarityMetric> metrics, PoolingMode pooling);

/// One similarity input to the attention: a metric applied to one stream.
struct Channel {
    SimilarityMetric metric = SimilarityMetric::kCosine;
    dataio::StreamKind stream = dataio::StreamKind::kRgb;
    /// false for generator slots whose metric is disabled (fed zeros).
    bool active = true;
};

/// Generator mode: the four canonical slots. Mean mode: enabled metrics x streams.
std::vector<Channel> attention_channels(const ModelOptions& options);

struct QueryOutput {
    std::string video_id;
    Matrix raw_tcam;         // N_q x C, K-shot averaged
    Matrix normalized_tcam;  // column softmax of raw_tcam
    Matrix class_repr;       // C x D
    locclass::ClassScores scores;
    /// 0 when the query carries no positive label.
    double loss = 0.0;
    bool has_loss = false;
    std::vector<double> d_distances;  // dloss/d distances for this query
};

/// Everything backward_episode needs; opaque to callers.
struct EpisodeCache {
    std::vector<std::size_t> video_offset;
    std::vector<std::size_t> video_length;
    std::size_t total_rows = 0;
    std::array<Matrix, 2> embedding;  // stacked over all episode videos
    std::array<encoder::EncoderCache, 2> encoder;
    std::vector<std::size_t> query_video;                  // per query
    std::vector<std::vector<std::size_t>> sample_video;    // [c][k]
    std::vector<Matrix> query_concat;                      // per query, N_q x D
    locclass::Prototypes prototypes;
    std::vector<Channel> channels;
    /// pooled[((q*C)+c)*K+k][channel]
    std::vector<std::vector<tsm::SimilarityVector>> pooled;
    /// First stacked row of each (q, c, k) attention block.
    std::vector<std::size_t> attention_offset;
    std::size_t attention_rows = 0;
    tcam::AttentionCache generator;
};

struct EpisodeForward {
    std::vector<QueryOutput> queries;
    /// Mean loss over the queries that carry labels.
    double loss = 0.0;
    std::size_t labelled_queries = 0;
    EpisodeCache cache;
};

/// Full forward pass over an episode. In training mode dropout masks come
/// from `dropout_rng` (copied, so repeated calls see the same masks) and the
/// generator normalizes with the statistics of every (query, class, shot) row
/// in the episode.
EpisodeForward forward_episode(const Model& model, const episodes::Episode& episode,
                               const dataio::FeatureStore& store, bool training,
                               const numkit::RngStream& dropout_rng = numkit::RngStream(0));

/// Accumulates dLoss/dparam (loss = EpisodeForward::loss) into the trainable
/// tensors of `model`.
void backward_episode(Model& model, const EpisodeForward& forward);

/// Folds the generator batch statistics of a training forward into the
/// running estimates.
void update_running_stats(Model& model, const EpisodeForward& forward);

}  // namespace fsloc::trainer
