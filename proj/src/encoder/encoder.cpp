// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsloc/encoder/encoder.hpp"

#include <cmath>
#include <string>

#include "fsloc/errors.hpp"
#include "fsloc/numkit/ops.hpp"

namespace fsloc::encoder {

namespace nk = numkit;

namespace {

Matrix uniform_fan_in(std::size_t fan_in, std::size_t fan_out, nk::RngStream& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(fan_in, fan_out);
    for (double& x : w.values()) {
        x = rng.uniform(-bound, bound);
    }
    return w;
}

}  // namespace

std::vector<ParamTensor*> EncoderParams::tensors() {
    std::vector<ParamTensor*> out;
    for (auto& s : streams) {
        out.insert(out.end(), {&s.w1, &s.b1, &s.w2, &s.b2});
    }
    return out;
}

std::vector<const ParamTensor*> EncoderParams::tensors() const {
    std::vector<const ParamTensor*> out;
    for (const auto& s : streams) {
        out.insert(out.end(), {&s.w1, &s.b1, &s.w2, &s.b2});
    }
    return out;
}

EncoderParams init_encoder(nk::RngStream& rng) {
    EncoderParams p;
    for (const StreamKind s : dataio::kStreams) {
        nk::RngStream stream_rng = rng.split("encoder").split(dataio::index_of(s));
        const std::string prefix = "encoder." + std::string(dataio::to_string(s));
        auto& e = p[s];
        e.w1 = ParamTensor(prefix + ".w1", uniform_fan_in(kInputDim, kHiddenDim, stream_rng));
        e.b1 = ParamTensor(prefix + ".b1", Matrix(1, kHiddenDim));
        e.w2 = ParamTensor(prefix + ".w2", uniform_fan_in(kHiddenDim, kEmbedDim, stream_rng));
        e.b2 = ParamTensor(prefix + ".b2", Matrix(1, kEmbedDim));
    }
    return p;
}

EncodeResult encode_forward(const EncoderParams& params, Matrix x, StreamKind stream, bool training,
                            nk::RngStream& rng, double dropout_rate) {
    if (x.cols() != kInputDim) {
        throw ShapeError("encode_forward: input has " + std::to_string(x.cols()) + " columns, expected " +
                         std::to_string(kInputDim));
    }
    const auto& e = params[stream];
    EncodeResult r;
    r.cache.stream = stream;
    r.cache.pre1 = nk::matmul(x, e.w1.value);
    r.cache.input = std::move(x);
    nk::add_row_bias(r.cache.pre1, e.b1.value);
    auto dropped = nk::dropout_forward(nk::relu_forward(r.cache.pre1), dropout_rate, rng, training);
    r.cache.hidden = std::move(dropped.output);
    r.cache.dropout_mask = std::move(dropped.mask);
    r.cache.pre2 = nk::matmul(r.cache.hidden, e.w2.value);
    nk::add_row_bias(r.cache.pre2, e.b2.value);
    r.embedding = nk::relu_forward(r.cache.pre2);
    return r;
}

Matrix encode_backward(EncoderParams& params, const EncoderCache& cache, const Matrix& upstream,
                       bool want_input_grad) {
    if (upstream.rows() != cache.pre2.rows() || upstream.cols() != kEmbedDim) {
        throw ShapeError("encode_backward: upstream " + upstream.shape_str() + " does not match cached output " +
                         cache.pre2.shape_str());
    }
    auto& e = params[cache.stream];
    const Matrix d_pre2 = nk::relu_backward(cache.pre2, upstream);
    nk::matmul_tn_accumulate(cache.hidden, d_pre2, e.w2.grad);
    nk::accumulate_column_sums(d_pre2, e.b2.grad);
    const Matrix d_pre1 =
        nk::relu_backward(cache.pre1, nk::dropout_backward(cache.dropout_mask, nk::matmul_nt(d_pre2, e.w2.value)));
    nk::matmul_tn_accumulate(cache.input, d_pre1, e.w1.grad);
    nk::accumulate_column_sums(d_pre1, e.b1.grad);
    if (!want_input_grad) {
        return {};
    }
    return nk::matmul_nt(d_pre1, e.w1.value);
}

}  // namespace fsloc::encoder
