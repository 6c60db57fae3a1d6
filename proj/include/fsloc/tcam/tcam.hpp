// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "fsloc/numkit/ops.hpp"
#include "fsloc/tsm/tsm.hpp"

namespace fsloc::tcam {

using numkit::Matrix;
using numkit::ParamTensor;

/// Attention generator: batch normalization over the four similarity
/// channels followed by a 4 -> 1 linear map. No output nonlinearity.
struct GeneratorParams {
    numkit::BatchNormParams bn;
    ParamTensor fc_w;  // 4 x 1
    ParamTensor fc_b;  // 1 x 1

    std::vector<ParamTensor*> tensors();
    std::vector<const ParamTensor*> tensors() const;
};

/// BN starts at identity (scale 1, shift 0, running mean 0, variance 1); the
/// fusion weights start at 1/4 each, i.e. the channel average.
GeneratorParams init_generator();

/// Stacks a bundle into an N_q x 4 matrix in canonical channel order.
Matrix stack_bundle(const tsm::SimilarityBundle& bundle);

struct AttentionCache {
    numkit::BatchNormCache bn;
};

struct AttentionResult {
    std::vector<double> attention;  // one raw value per input row
    AttentionCache cache;
};

/// Raw attention for every row of `stacked` (rows x 4). In training mode the
/// batch statistics of all rows are used, so callers stack every bundle of an
/// episode into one call. Running statistics are left untouched; apply
/// numkit::batchnorm_update_running(params.bn, result.cache.bn) to update.
AttentionResult generate_attention_rows(const Matrix& stacked, const GeneratorParams& params, bool training);

/// Single-bundle convenience wrapper.
std::vector<double> generate_attention(const tsm::SimilarityBundle& bundle, const GeneratorParams& params,
                                       bool training);

/// Accumulates generator gradients; returns dLoss/dstacked.
Matrix generate_attention_backward(GeneratorParams& params, const AttentionCache& cache,
                                   std::span<const double> upstream);

/// Column-wise softmax over the temporal axis: raw A_Q (N_q x C) -> normalized.
Matrix normalize_tcam(const Matrix& raw);

/// Backward of normalize_tcam given its output and dLoss/doutput.
Matrix normalize_tcam_backward(const Matrix& normalized, const Matrix& upstream);

/// Entrywise mean of K equally long attention vectors.
std::vector<double> kshot_average(std::span<const std::vector<double>> attentions);

}  // namespace fsloc::tcam
