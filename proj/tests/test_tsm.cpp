// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "fsloc/errors.hpp"
#include "fsloc/tsm/tsm.hpp"
#include "oracles.hpp"

namespace tsm = fsloc::tsm;
using fsloc::dataio::StreamKind;
using fsloc::numkit::Matrix;
using tsm::SimilarityMetric;

TEST(Tsm, MatchesDoubleLoopOn100RandomCases) {
    std::mt19937_64 gen(2026);
    std::uniform_int_distribution<std::size_t> len(1, 20);
    std::uniform_int_distribution<std::size_t> dim(1, 64);
    double worst = 0.0;
    for (int c = 0; c < 100; ++c) {
        const std::size_t d = dim(gen);
        const Matrix q = oracle::random_matrix(gen, len(gen), d, -3.0, 3.0);
        const Matrix v = oracle::random_matrix(gen, len(gen), d, -3.0, 3.0);
        for (const auto m : {SimilarityMetric::kCosine, SimilarityMetric::kDot, SimilarityMetric::kEuclidean}) {
            const auto got = tsm::compute_tsm(q, v, m);
            const auto want = oracle::naive_tsm(q, v, m);
            ASSERT_TRUE(got.values.same_shape(want));
            for (std::size_t i = 0; i < want.size(); ++i) {
                worst = std::max(worst, std::abs(got.values.values()[i] - want.values()[i]));
            }
        }
    }
    EXPECT_LT(worst, 1e-12);
}

TEST(Tsm, CosineWithZeroVectorIsZero) {
    const Matrix q = Matrix::from_rows({{0.0, 0.0}, {1.0, 0.0}});
    const Matrix v = Matrix::from_rows({{1.0, 1.0}});
    const auto t = tsm::compute_tsm(q, v, SimilarityMetric::kCosine);
    EXPECT_EQ(t.values(0, 0), 0.0);
    EXPECT_NEAR(t.values(1, 0), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Tsm, KnownValues) {
    const std::vector<double> a{1.0, 2.0, 2.0};
    const std::vector<double> b{2.0, 0.0, 0.0};
    EXPECT_DOUBLE_EQ(tsm::similarity(a, b, SimilarityMetric::kDot), 2.0);
    EXPECT_DOUBLE_EQ(tsm::similarity(a, b, SimilarityMetric::kCosine), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(tsm::similarity(a, b, SimilarityMetric::kEuclidean), -3.0);
    EXPECT_DOUBLE_EQ(tsm::similarity(a, a, SimilarityMetric::kCosine), 1.0);
}

TEST(Tsm, DimensionMismatchThrows) {
    EXPECT_THROW(tsm::compute_tsm(Matrix(2, 3), Matrix(2, 4), SimilarityMetric::kDot), fsloc::ShapeError);
}

TEST(Tsm, MetricNamesRoundTrip) {
    for (const auto m : {SimilarityMetric::kCosine, SimilarityMetric::kDot, SimilarityMetric::kEuclidean}) {
        EXPECT_EQ(tsm::parse_metric(tsm::to_string(m)), m);
    }
    EXPECT_ANY_THROW(tsm::parse_metric("manhattan"));
}

TEST(Tsm, MaxPoolTakesFirstMaximum) {
    tsm::Tsm t;
    t.values = Matrix::from_rows({{0.1, 0.7, 0.7}, {-1.0, -2.0, -0.5}});
    t.class_index = 2;
    const auto p = tsm::maxpool_rows(t);
    EXPECT_EQ(p.values, (std::vector<double>{0.7, -0.5}));
    EXPECT_EQ(p.argmax, (std::vector<std::size_t>{1, 2}));
    EXPECT_EQ(p.class_index, 2U);
}

TEST(Tsm, BundleChannelOrder) {
    EXPECT_EQ(tsm::bundle_metric(0), SimilarityMetric::kCosine);
    EXPECT_EQ(tsm::bundle_stream(0), StreamKind::kRgb);
    EXPECT_EQ(tsm::bundle_metric(1), SimilarityMetric::kCosine);
    EXPECT_EQ(tsm::bundle_stream(1), StreamKind::kFlow);
    EXPECT_EQ(tsm::bundle_metric(2), SimilarityMetric::kDot);
    EXPECT_EQ(tsm::bundle_stream(3), StreamKind::kFlow);

    std::mt19937_64 gen(4);
    const Matrix qr = oracle::random_matrix(gen, 5, 8);
    const Matrix qf = oracle::random_matrix(gen, 5, 8);
    const Matrix vr = oracle::random_matrix(gen, 3, 8);
    const Matrix vf = oracle::random_matrix(gen, 3, 8);
    const auto b = tsm::similarity_bundle({&qr, &qf}, {&vr, &vf}, 1);
    EXPECT_EQ(b.length(), 5U);
    const auto dot_flow = tsm::maxpool_rows(tsm::compute_tsm(qf, vf, SimilarityMetric::kDot));
    EXPECT_EQ(b.channels[3].values, dot_flow.values);
    EXPECT_EQ(b.channels[3].class_index, 1U);
}

TEST(Tsm, BackwardMatchesFiniteDifferences) {
    std::mt19937_64 gen(12);
    for (const auto metric : {SimilarityMetric::kCosine, SimilarityMetric::kDot, SimilarityMetric::kEuclidean}) {
        Matrix q = oracle::random_matrix(gen, 4, 6);
        Matrix v = oracle::random_matrix(gen, 3, 6);
        const std::vector<double> up{0.3, -1.2, 0.8, 2.0};
        auto loss = [&](const Matrix& a, const Matrix& b) {
            const auto p = tsm::maxpool_rows(tsm::compute_tsm(a, b, metric));
            double s = 0.0;
            for (std::size_t i = 0; i < p.values.size(); ++i) {
                s += up[i] * p.values[i];
            }
            return s;
        };
        const auto pooled = tsm::maxpool_rows(tsm::compute_tsm(q, v, metric));
        Matrix dq(q.rows(), q.cols());
        Matrix dv(v.rows(), v.cols());
        tsm::similarity_backward(q, v, pooled, up, dq, dv);
        const double h = 1e-6;
        for (std::size_t k = 0; k < q.size(); ++k) {
            Matrix a = q;
            Matrix b = q;
            a.values()[k] += h;
            b.values()[k] -= h;
            EXPECT_NEAR(dq.values()[k], (loss(a, v) - loss(b, v)) / (2 * h), 1e-7) << tsm::to_string(metric);
        }
        for (std::size_t k = 0; k < v.size(); ++k) {
            Matrix a = v;
            Matrix b = v;
            a.values()[k] += h;
            b.values()[k] -= h;
            EXPECT_NEAR(dv.values()[k], (loss(q, a) - loss(q, b)) / (2 * h), 1e-7) << tsm::to_string(metric);
        }
    }
}

TEST(Tsm, HandExamples) {
    const Matrix u = Matrix::from_rows({{0.6, 0.8}});
    EXPECT_EQ(tsm::compute_tsm(u, u, SimilarityMetric::kCosine).values, Matrix::from_rows({{1.0}}));
    const auto dot = tsm::compute_tsm(Matrix::from_rows({{1.0, 2.0}}), Matrix::identity(2), SimilarityMetric::kDot);
    EXPECT_EQ(dot.values, Matrix::from_rows({{1.0, 2.0}}));

    tsm::Tsm t;
    t.values = Matrix::from_rows({{1.0, 3.0}, {2.0, 0.0}});
    EXPECT_EQ(tsm::maxpool_rows(t).values, (std::vector<double>{3.0, 2.0}));
    t.values = Matrix::from_rows({{0.5}, {-4.0}, {2.0}});
    EXPECT_EQ(tsm::maxpool_rows(t).values, (std::vector<double>{0.5, -4.0, 2.0}));
}

TEST(Tsm, MaxPoolMatchesRowScan) {
    std::mt19937_64 gen(77);
    tsm::Tsm t;
    t.values = oracle::random_matrix(gen, 9, 6);
    const auto p = tsm::maxpool_rows(t);
    for (std::size_t i = 0; i < 9; ++i) {
        bool found = false;
        for (std::size_t j = 0; j < 6; ++j) {
            EXPECT_GE(p.values[i], t.values(i, j));
            found = found || p.values[i] == t.values(i, j);
        }
        EXPECT_TRUE(found);
    }
}

TEST(Tsm, BundleOfIdenticalUnitSnippets) {
    const Matrix u = Matrix::from_rows({{0.0, 1.0, 0.0}});
    const auto b = tsm::similarity_bundle({&u, &u}, {&u, &u});
    EXPECT_EQ(b.channels[0].values, std::vector<double>{1.0});
    EXPECT_EQ(b.channels[1].values, std::vector<double>{1.0});
}

TEST(Tsm, ZeroFlowEmbeddingsGiveZeroFlowChannels) {
    std::mt19937_64 gen(5);
    const Matrix qr = oracle::random_matrix(gen, 4, 3);
    const Matrix vr = oracle::random_matrix(gen, 2, 3);
    const Matrix zq(4, 3);
    const Matrix zv(2, 3);
    const auto b = tsm::similarity_bundle({&qr, &zq}, {&vr, &zv});
    for (const std::size_t k : {std::size_t{1}, std::size_t{3}}) {
        for (const double v : b.channels[k].values) {
            EXPECT_EQ(v, 0.0);
        }
    }
}

TEST(Tsm, BundleTagsAreCanonical) {
    std::mt19937_64 gen(6);
    const Matrix a = oracle::random_matrix(gen, 3, 4);
    const Matrix b = oracle::random_matrix(gen, 3, 4);
    for (const auto& bundle : {tsm::similarity_bundle({&a, &b}, {&b, &a}), tsm::similarity_bundle({&b, &a}, {&a, &b})}) {
        for (std::size_t k = 0; k < tsm::kBundleChannels; ++k) {
            EXPECT_EQ(bundle.channels[k].metric, tsm::bundle_metric(k));
            EXPECT_EQ(bundle.channels[k].stream, tsm::bundle_stream(k));
        }
    }
}
