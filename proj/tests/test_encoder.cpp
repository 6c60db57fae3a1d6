// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "fsloc/encoder/encoder.hpp"
#include "fsloc/numkit/gradcheck.hpp"
#include "oracles.hpp"

namespace enc = fsloc::encoder;
using fsloc::dataio::StreamKind;
using fsloc::numkit::Matrix;
using fsloc::numkit::RngStream;

namespace {

Matrix input(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    return oracle::random_matrix(gen, n, enc::kInputDim, -2.0, 2.0);
}

}  // namespace

TEST(Encoder, InitShapesAndRanges) {
    RngStream rng(3);
    const auto p = enc::init_encoder(rng);
    const double bound1 = 1.0 / std::sqrt(1024.0);
    for (const auto s : fsloc::dataio::kStreams) {
        const auto& e = p[s];
        EXPECT_EQ(e.w1.value.rows(), 1024U);
        EXPECT_EQ(e.w1.value.cols(), 1024U);
        EXPECT_EQ(e.w2.value.cols(), 128U);
        for (const double v : e.w1.value.values()) {
            ASSERT_LE(std::abs(v), bound1);
        }
        for (const double v : e.b2.value.values()) {
            ASSERT_EQ(v, 0.0);
        }
    }
    EXPECT_NE(p[StreamKind::kRgb].w1.value, p[StreamKind::kFlow].w1.value);
    EXPECT_EQ(p.tensors().size(), 8U);
}

TEST(Encoder, OutputIsNonNegative128Wide) {
    RngStream rng(4);
    const auto p = enc::init_encoder(rng);
    const auto r = enc::encode_forward(p, input(9, 1), StreamKind::kFlow, true, rng);
    EXPECT_EQ(r.embedding.rows(), 9U);
    EXPECT_EQ(r.embedding.cols(), 128U);
    for (const double v : r.embedding.values()) {
        ASSERT_GE(v, 0.0);
    }
}

TEST(Encoder, InferenceIsDeterministicAndSkipsDropout) {
    RngStream init(5);
    const auto p = enc::init_encoder(init);
    RngStream a(1);
    RngStream b(2);
    const auto x = enc::encode_forward(p, input(6, 2), StreamKind::kRgb, false, a);
    const auto y = enc::encode_forward(p, input(6, 2), StreamKind::kRgb, false, b);
    EXPECT_EQ(x.embedding, y.embedding);
}

TEST(Encoder, TrainingDropoutDependsOnStream) {
    RngStream init(5);
    const auto p = enc::init_encoder(init);
    RngStream a(1);
    RngStream b(2);
    const auto x = enc::encode_forward(p, input(6, 2), StreamKind::kRgb, true, a);
    const auto y = enc::encode_forward(p, input(6, 2), StreamKind::kRgb, true, b);
    EXPECT_NE(x.embedding, y.embedding);
}

TEST(Encoder, ZeroRateMatchesInferencePath) {
    RngStream init(6);
    const auto p = enc::init_encoder(init);
    RngStream a(1);
    const auto x = enc::encode_forward(p, input(4, 3), StreamKind::kRgb, true, a, 0.0);
    const auto y = enc::encode_forward(p, input(4, 3), StreamKind::kRgb, false, a);
    EXPECT_EQ(x.embedding, y.embedding);
}

TEST(Encoder, GradientsMatchCentralDifferences) {
    RngStream init(7);
    auto p = enc::init_encoder(init);
    const Matrix x = input(3, 4);
    std::mt19937_64 gen(8);
    const Matrix weights = oracle::random_matrix(gen, 3, enc::kEmbedDim);
    // Fixed dropout pattern: every call uses the same stream.
    auto loss = [&] {
        RngStream r(11);
        const auto out = enc::encode_forward(p, x, StreamKind::kRgb, true, r);
        double s = 0.0;
        for (std::size_t i = 0; i < out.embedding.size(); ++i) {
            s += out.embedding.values()[i] * weights.values()[i];
        }
        return s;
    };
    for (auto* t : p.tensors()) {
        t->zero_grad();
    }
    RngStream r(11);
    const auto out = enc::encode_forward(p, x, StreamKind::kRgb, true, r);
    enc::encode_backward(p, out.cache, weights, false);
    auto& s = p[StreamKind::kRgb];
    std::vector<fsloc::numkit::ParamTensor*> params{&s.w1, &s.b1, &s.w2, &s.b2};
    fsloc::numkit::GradCheckOptions opt;
    opt.samples_per_tensor = 60;
    const auto res = fsloc::numkit::grad_check(loss, params, opt);
    EXPECT_LT(res.max_rel_error, 1e-5);
    EXPECT_GT(res.checked, 150U);
}

TEST(Encoder, InputGradientMatchesFiniteDifference) {
    RngStream init(9);
    auto p = enc::init_encoder(init);
    Matrix x = input(2, 5);
    RngStream r(0);
    const auto out = enc::encode_forward(p, x, StreamKind::kFlow, false, r);
    Matrix ones(out.embedding.rows(), out.embedding.cols(), 1.0);
    const Matrix dx = enc::encode_backward(p, out.cache, ones, true);
    ASSERT_EQ(dx.rows(), 2U);
    auto total = [&](const Matrix& in) {
        RngStream q(0);
        double s = 0.0;
        for (const double v : enc::encode_forward(p, in, StreamKind::kFlow, false, q).embedding.values()) {
            s += v;
        }
        return s;
    };
    const double h = 1e-6;
    for (const std::size_t k : {std::size_t{0}, std::size_t{17}, std::size_t{1023}, std::size_t{1500}}) {
        Matrix up = x;
        Matrix dn = x;
        up.values()[k] += h;
        dn.values()[k] -= h;
        const double numeric = (total(up) - total(dn)) / (2 * h);
        EXPECT_NEAR(dx.values()[k], numeric, 1e-6 * std::max(1.0, std::abs(numeric)));
    }
}

TEST(Encoder, ZeroParametersGiveZeroOutput) {
    RngStream init(1);
    auto p = enc::init_encoder(init);
    for (auto* t : p.tensors()) {
        t->value.fill(0.0);
    }
    RngStream r(2);
    const auto out = enc::encode_forward(p, input(3, 6), StreamKind::kRgb, true, r);
    for (const double v : out.embedding.values()) {
        ASSERT_EQ(v, 0.0);
    }
}

TEST(Encoder, ZeroUpstreamLeavesGradsZero) {
    RngStream init(1);
    auto p = enc::init_encoder(init);
    RngStream r(2);
    const auto out = enc::encode_forward(p, input(3, 7), StreamKind::kRgb, true, r);
    enc::encode_backward(p, out.cache, Matrix(3, enc::kEmbedDim), false);
    for (const auto* t : p.tensors()) {
        for (const double g : t->grad.values()) {
            ASSERT_EQ(g, 0.0) << t->name;
        }
    }
}

TEST(Encoder, BackwardAccumulates) {
    RngStream init(1);
    auto p = enc::init_encoder(init);
    RngStream r(2);
    const auto out = enc::encode_forward(p, input(3, 8), StreamKind::kFlow, true, r);
    const Matrix up(3, enc::kEmbedDim, 0.5);
    enc::encode_backward(p, out.cache, up, false);
    const Matrix once = p[StreamKind::kFlow].w1.grad;
    enc::encode_backward(p, out.cache, up, false);
    const Matrix& twice = p[StreamKind::kFlow].w1.grad;
    double norm = 0.0;
    for (std::size_t i = 0; i < once.size(); ++i) {
        ASSERT_EQ(twice.values()[i], 2.0 * once.values()[i]);
        norm += std::abs(once.values()[i]);
    }
    EXPECT_GT(norm, 0.0);
}

TEST(Encoder, InitIsSeeded) {
    RngStream a(10);
    RngStream b(10);
    RngStream c(11);
    const auto x = enc::init_encoder(a);
    const auto y = enc::init_encoder(b);
    const auto z = enc::init_encoder(c);
    EXPECT_EQ(x[StreamKind::kRgb].w1.value, y[StreamKind::kRgb].w1.value);
    EXPECT_EQ(x[StreamKind::kFlow].w2.value, y[StreamKind::kFlow].w2.value);
    EXPECT_NE(x[StreamKind::kRgb].w1.value, z[StreamKind::kRgb].w1.value);
}
