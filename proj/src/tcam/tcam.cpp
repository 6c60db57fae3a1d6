// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsloc/tcam/tcam.hpp"

#include <string>

#include "fsloc/errors.hpp"

namespace fsloc::tcam {

namespace nk = numkit;

std::vector<ParamTensor*> GeneratorParams::tensors() { return {&bn.scale, &bn.shift, &fc_w, &fc_b}; }

std::vector<const ParamTensor*> GeneratorParams::tensors() const { return {&bn.scale, &bn.shift, &fc_w, &fc_b}; }

GeneratorParams init_generator() {
    GeneratorParams p;
    p.bn = nk::BatchNormParams(tsm::kBundleChannels, "generator.bn");
    p.fc_w = ParamTensor("generator.fc_w", Matrix(tsm::kBundleChannels, 1, 1.0 / tsm::kBundleChannels));
    p.fc_b = ParamTensor("generator.fc_b", Matrix(1, 1, 0.0));
    return p;
}

Matrix stack_bundle(const tsm::SimilarityBundle& bundle) {
    const std::size_t n = bundle.length();
    Matrix out(n, tsm::kBundleChannels);
    for (std::size_t k = 0; k < tsm::kBundleChannels; ++k) {
        const auto& ch = bundle.channels[k];
        if (ch.values.size() != n) {
            throw ShapeError("stack_bundle: channel " + std::to_string(k) + " has length " +
                             std::to_string(ch.values.size()) + ", expected " + std::to_string(n));
        }
        if (ch.metric != tsm::bundle_metric(k) || ch.stream != tsm::bundle_stream(k)) {
            throw ShapeError("stack_bundle: channel " + std::to_string(k) + " is " +
                             std::string(tsm::to_string(ch.metric)) + "/" + std::string(dataio::to_string(ch.stream)) +
                             ", expected canonical order cos-rgb, cos-flow, dot-rgb, dot-flow");
        }
        out.set_column(k, ch.values);
    }
    return out;
}

AttentionResult generate_attention_rows(const Matrix& stacked, const GeneratorParams& params, bool training) {
    if (stacked.cols() != tsm::kBundleChannels) {
        throw ShapeError("generate_attention: expected 4 channels, got " + std::to_string(stacked.cols()));
    }
    auto bn = nk::batchnorm_forward(stacked, params.bn, training);
    AttentionResult r;
    r.attention.resize(stacked.rows());
    for (std::size_t i = 0; i < stacked.rows(); ++i) {
        double a = params.fc_b.value(0, 0);
        for (std::size_t k = 0; k < tsm::kBundleChannels; ++k) {
            a += bn.output(i, k) * params.fc_w.value(k, 0);
        }
        r.attention[i] = a;
    }
    r.cache.bn = std::move(bn.cache);
    return r;
}

std::vector<double> generate_attention(const tsm::SimilarityBundle& bundle, const GeneratorParams& params,
                                       bool training) {
    return generate_attention_rows(stack_bundle(bundle), params, training).attention;
}

Matrix generate_attention_backward(GeneratorParams& params, const AttentionCache& cache,
                                   std::span<const double> upstream) {
    const Matrix& xhat = cache.bn.normalized;
    if (upstream.size() != xhat.rows()) {
        throw ShapeError("generate_attention_backward: upstream length mismatch");
    }
    Matrix d_bn_out(xhat.rows(), tsm::kBundleChannels);
    for (std::size_t i = 0; i < xhat.rows(); ++i) {
        const double g = upstream[i];
        params.fc_b.grad(0, 0) += g;
        for (std::size_t k = 0; k < tsm::kBundleChannels; ++k) {
            const double bn_out = params.bn.scale.value(0, k) * xhat(i, k) + params.bn.shift.value(0, k);
            params.fc_w.grad(k, 0) += g * bn_out;
            d_bn_out(i, k) = g * params.fc_w.value(k, 0);
        }
    }
    return nk::batchnorm_backward(params.bn, cache.bn, d_bn_out);
}

Matrix normalize_tcam(const Matrix& raw) {
    if (raw.rows() == 0) {
        throw ShapeError("normalize_tcam: empty temporal axis");
    }
    Matrix out(raw.rows(), raw.cols());
    for (std::size_t c = 0; c < raw.cols(); ++c) {
        out.set_column(c, nk::softmax(raw.column(c)));
    }
    return out;
}

Matrix normalize_tcam_backward(const Matrix& normalized, const Matrix& upstream) {
    nk::require_same_shape(normalized, upstream, "normalize_tcam_backward");
    Matrix out(normalized.rows(), normalized.cols());
    for (std::size_t c = 0; c < normalized.cols(); ++c) {
        out.set_column(c, nk::softmax_backward(normalized.column(c), upstream.column(c)));
    }
    return out;
}

std::vector<double> kshot_average(std::span<const std::vector<double>> attentions) {
    if (attentions.empty()) {
        throw ShapeError("kshot_average: no attention vectors");
    }
    const std::size_t n = attentions.front().size();
    std::vector<double> out(n, 0.0);
    for (const auto& a : attentions) {
        if (a.size() != n) {
            throw ShapeError("kshot_average: length mismatch");
        }
        for (std::size_t i = 0; i < n; ++i) {
            out[i] += a[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(attentions.size());
    for (double& x : out) {
        x *= inv;
    }
    return out;
}

}  // namespace fsloc::tcam
