// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

#include "fsloc/dataio/types.hpp"
#include "fsloc/numkit/matrix.hpp"
#include "fsloc/numkit/param.hpp"
#include "fsloc/numkit/rng.hpp"

namespace fsloc::encoder {

using dataio::StreamKind;
using numkit::Matrix;
using numkit::ParamTensor;

inline constexpr std::size_t kInputDim = dataio::kFeatureDim;
inline constexpr std::size_t kHiddenDim = 1024;
inline constexpr std::size_t kEmbedDim = 128;
inline constexpr double kDefaultDropout = 0.5;

/// Two fully-connected layers for one stream:
/// y = relu(dropout(relu(x W1 + b1)) W2 + b2).
struct StreamEncoder {
    ParamTensor w1;  // 1024 x 1024
    ParamTensor b1;  // 1 x 1024
    ParamTensor w2;  // 1024 x 128
    ParamTensor b2;  // 1 x 128
};

/// Independent encoders for the RGB and optical-flow streams.
struct EncoderParams {
    std::array<StreamEncoder, 2> streams;

    StreamEncoder& operator[](StreamKind s) { return streams[dataio::index_of(s)]; }
    const StreamEncoder& operator[](StreamKind s) const { return streams[dataio::index_of(s)]; }
    std::vector<ParamTensor*> tensors();
    std::vector<const ParamTensor*> tensors() const;
};

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
EncoderParams init_encoder(numkit::RngStream& rng);

struct EncoderCache {
    StreamKind stream = StreamKind::kRgb;
    Matrix input;
    Matrix pre1;
    Matrix dropout_mask;
    Matrix hidden;  // after ReLU and dropout
    Matrix pre2;
};

struct EncodeResult {
    Matrix embedding;  // N x 128, entrywise >= 0
    EncoderCache cache;
};

EncodeResult encode_forward(const EncoderParams& params, Matrix x, StreamKind stream, bool training,
                            numkit::RngStream& rng, double dropout_rate = kDefaultDropout);

/// Accumulates parameter gradients (+=) and returns dLoss/dx, or an empty
/// matrix when want_input_grad is false (the input gradient costs a full
/// 1024 x 1024 product and training never needs it).
Matrix encode_backward(EncoderParams& params, const EncoderCache& cache, const Matrix& upstream,
                       bool want_input_grad = true);

}  // namespace fsloc::encoder
