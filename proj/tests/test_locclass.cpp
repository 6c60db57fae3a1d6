// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "fsloc/errors.hpp"
#include "fsloc/locclass/locclass.hpp"
#include "fsloc/numkit/ops.hpp"
#include "oracles.hpp"

namespace lc = fsloc::locclass;
using fsloc::numkit::Matrix;

TEST(Threshold, Midrange) {
    const std::vector<double> a{0.0, 1.0};
    const auto r = lc::resolve_threshold(a, lc::ThresholdPolicy::midrange());
    EXPECT_EQ(r.delta, 0.5);
    EXPECT_FALSE(r.fell_back);
}

TEST(Threshold, ConstantAttentionYieldsNoSegments) {
    const std::vector<double> a(6, 0.3);
    const auto r = lc::resolve_threshold(a, lc::ThresholdPolicy::midrange());
    EXPECT_EQ(r.delta, 0.3);
    EXPECT_TRUE(lc::localize(a, r.delta).empty());
}

TEST(Threshold, FixedIsVerbatim) {
    const std::vector<double> a{5.0, -1.0};
    EXPECT_EQ(lc::resolve_threshold(a, lc::ThresholdPolicy::fixed_at(-0.25)).delta, -0.25);
}

TEST(Threshold, LengthMatchedIsolatesPlateau) {
    // Plateau of width 3 at [4, 6] on a ramp-free background with one short spike.
    const std::vector<double> a{0.1, 0.2, 0.15, 0.3, 0.8, 0.8, 0.8, 0.2, 0.1, 0.35, 0.1};
    const auto r = lc::resolve_threshold(a, lc::ThresholdPolicy::length_matched(3.0));
    EXPECT_FALSE(r.fell_back);
    // Sweep-all-delta oracle: every delta between the plateau and the next
    // highest value isolates exactly the plateau.
    EXPECT_GE(r.delta, 0.35);
    EXPECT_LT(r.delta, 0.8);
    const auto segs = lc::localize(a, r.delta);
    ASSERT_EQ(segs.size(), 1U);
    EXPECT_EQ(segs[0].start, 4U);
    EXPECT_EQ(segs[0].end, 6U);
}

TEST(Threshold, LengthMatchedFallsBackOnConstantInput) {
    const std::vector<double> a(5, 1.0);
    const auto r = lc::resolve_threshold(a, lc::ThresholdPolicy::length_matched(2.0));
    EXPECT_TRUE(r.fell_back);
    EXPECT_EQ(r.delta, 1.0);
}

TEST(Threshold, LengthMatchedNeedsPositiveReference) {
    const std::vector<double> a{0.0, 1.0};
    EXPECT_THROW(lc::resolve_threshold(a, lc::ThresholdPolicy::length_matched(0.0)), fsloc::ValidationError);
}

TEST(Threshold, KindNamesRoundTrip) {
    for (const auto k : {lc::ThresholdKind::kMidrange, lc::ThresholdKind::kLengthMatched, lc::ThresholdKind::kFixed}) {
        EXPECT_EQ(lc::parse_threshold_kind(lc::to_string(k)), k);
    }
}

TEST(Localize, HandExample) {
    const std::vector<double> a{0.1, 0.9, 0.8, 0.2, 0.7};
    const auto p = lc::localize(a, 0.5, 3);
    ASSERT_EQ(p.size(), 2U);
    EXPECT_EQ(p[0].class_index, 3U);
    EXPECT_EQ(p[0].start, 1U);
    EXPECT_EQ(p[0].end, 2U);
    EXPECT_NEAR(p[0].score, 0.85, 1e-15);
    EXPECT_EQ(p[1].start, 4U);
    EXPECT_EQ(p[1].end, 4U);
    EXPECT_EQ(p[1].score, 0.7);
}

TEST(Localize, AllBelowIsEmpty) {
    const std::vector<double> a{0.1, 0.2, 0.5};
    EXPECT_TRUE(lc::localize(a, 0.5).empty());
}

TEST(Localize, MatchesLinearScanOracle) {
    std::mt19937_64 gen(11);
    std::uniform_int_distribution<int> len(1, 40);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> a(static_cast<std::size_t>(len(gen)));
        for (double& v : a) {
            // Quantized values make ties with delta likely.
            v = std::round(u(gen) * 4.0) / 4.0;
        }
        const double delta = std::round(u(gen) * 4.0) / 4.0;
        EXPECT_EQ(lc::localize(a, delta, 2), oracle::scan_runs(a, delta, 2));
    }
}

TEST(ClassRepr, UniformWeightsGiveTemporalMean) {
    const Matrix emb = Matrix::from_rows({{1.0, 2.0}, {3.0, 6.0}, {5.0, 1.0}, {-1.0, 3.0}});
    const auto x = lc::query_class_repr(Matrix(4, 1, 0.25), emb);
    EXPECT_EQ(x, Matrix::from_rows({{2.0, 3.0}}));
}

TEST(ClassRepr, OneHotPicksSnippet) {
    const Matrix emb = Matrix::from_rows({{1.0, 2.0}, {3.0, 6.0}, {5.0, 1.0}});
    const Matrix w = Matrix::from_rows({{0.0, 1.0}, {1.0, 0.0}, {0.0, 0.0}});
    const auto x = lc::query_class_repr(w, emb);
    EXPECT_EQ(x, Matrix::from_rows({{3.0, 6.0}, {1.0, 2.0}}));
}

TEST(ClassRepr, MatchesDoubleLoop) {
    std::mt19937_64 gen(12);
    const Matrix w = oracle::random_matrix(gen, 9, 5, 0.0, 1.0);
    const Matrix emb = oracle::random_matrix(gen, 9, 16);
    const auto x = lc::query_class_repr(w, emb);
    for (std::size_t c = 0; c < 5; ++c) {
        for (std::size_t d = 0; d < 16; ++d) {
            double s = 0.0;
            for (std::size_t i = 0; i < 9; ++i) {
                s += w(i, c) * emb(i, d);
            }
            EXPECT_NEAR(x(c, d), s, 1e-12);
        }
    }
}

TEST(SampleRepr, Examples) {
    EXPECT_EQ(lc::sample_repr(Matrix::from_rows({{0.5, -1.0}})), (std::vector<double>{0.5, -1.0}));
    EXPECT_EQ(lc::sample_repr(Matrix::from_rows({{1.0, 4.0}, {3.0, 0.0}})), (std::vector<double>{2.0, 2.0}));
}

TEST(SampleRepr, MatchesPerCoordinateMean) {
    std::mt19937_64 gen(13);
    const Matrix emb = oracle::random_matrix(gen, 7, 10);
    const auto r = lc::sample_repr(emb);
    for (std::size_t d = 0; d < 10; ++d) {
        double s = 0.0;
        for (std::size_t i = 0; i < 7; ++i) {
            s += emb(i, d);
        }
        EXPECT_NEAR(r[d], s / 7.0, 1e-15);
    }
}

TEST(Classify, SingleClassIsCertain) {
    const auto s = lc::classify(Matrix::from_rows({{1.0, 2.0}}), {{{5.0, -3.0}}});
    EXPECT_EQ(s.probs, std::vector<double>{1.0});
}

TEST(Classify, ExactMatchAgainstUnitDistances) {
    const std::size_t c_count = 4;
    lc::Prototypes protos;
    Matrix q(c_count, 3);
    for (std::size_t c = 0; c < c_count; ++c) {
        std::vector<double> p{static_cast<double>(c), 1.0, -2.0};
        protos.push_back({p});
        for (std::size_t d = 0; d < 3; ++d) {
            q(c, d) = p[d];
        }
        if (c != 0) {
            q(c, 1) += 1.0;
        }
    }
    const auto s = lc::classify(q, protos);
    EXPECT_EQ(s.distances, (std::vector<double>{0.0, 1.0, 1.0, 1.0}));
    EXPECT_NEAR(s.probs[0], 1.0 / (1.0 + 3.0 * std::exp(-1.0)), 1e-15);
}

TEST(Classify, AveragesSquaredDistancesOverShots) {
    const auto s = lc::classify(Matrix::from_rows({{0.0, 0.0}}), {{{1.0, 0.0}, {0.0, 3.0}}});
    EXPECT_EQ(s.distances, std::vector<double>{5.0});
}

TEST(Classify, ShiftInvariantAndNormalized) {
    std::mt19937_64 gen(14);
    const Matrix q = oracle::random_matrix(gen, 5, 6);
    lc::Prototypes protos(5);
    for (auto& p : protos) {
        const Matrix r = oracle::random_matrix(gen, 1, 6);
        p.push_back(std::vector<double>(r.values().begin(), r.values().end()));
    }
    const auto a = lc::classify(q, protos);
    double sum = 0.0;
    for (const double p : a.probs) {
        sum += p;
        EXPECT_GT(p, 0.0);
        EXPECT_LT(p, 1.0);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    lc::ClassScores shifted = a;
    for (double& d : shifted.distances) {
        d += 3.0;
    }
    std::vector<double> neg(5);
    for (std::size_t c = 0; c < 5; ++c) {
        neg[c] = -shifted.distances[c];
    }
    const auto p2 = fsloc::numkit::softmax(neg);
    for (std::size_t c = 0; c < 5; ++c) {
        EXPECT_NEAR(p2[c], a.probs[c], 1e-12);
    }
}

TEST(ClassLoss, UniformFiveWayIsLogFive) {
    lc::ClassScores s;
    s.distances = std::vector<double>(5, 2.0);
    s.probs = std::vector<double>(5, 0.2);
    const std::vector<double> y{0.0, 0.0, 1.0, 0.0, 0.0};
    EXPECT_NEAR(lc::class_loss(s, y).loss, std::log(5.0), 1e-12);
}

TEST(ClassLoss, ConfidentCorrectIsNearZero) {
    const auto s = lc::classify(Matrix::from_rows({{0.0}, {0.0}}), {{{0.0}}, {{10.0}}});
    const std::vector<double> y{1.0, 0.0};
    EXPECT_LT(lc::class_loss(s, y).loss, 1e-30);
}

TEST(ClassLoss, GradientMatchesFiniteDifferences) {
    const std::vector<double> d{0.5, 1.5, 0.2, 3.0};
    const std::vector<double> y{1.0, 0.0, 1.0, 0.0};  // multi-label, normalized inside
    auto loss_at = [&](const std::vector<double>& dist) {
        lc::ClassScores s;
        s.distances = dist;
        std::vector<double> neg(dist.size());
        for (std::size_t i = 0; i < dist.size(); ++i) {
            neg[i] = -dist[i];
        }
        s.probs = fsloc::numkit::softmax(neg);
        return lc::class_loss(s, y);
    };
    const auto base = loss_at(d);
    EXPECT_NEAR(base.loss, -0.5 * std::log(std::exp(-0.5) / (std::exp(-0.5) + std::exp(-1.5) + std::exp(-0.2) + std::exp(-3.0))) -
                               0.5 * std::log(std::exp(-0.2) / (std::exp(-0.5) + std::exp(-1.5) + std::exp(-0.2) + std::exp(-3.0))),
                1e-12);
    const double h = 1e-6;
    for (std::size_t i = 0; i < d.size(); ++i) {
        auto p = d;
        auto m = d;
        p[i] += h;
        m[i] -= h;
        EXPECT_NEAR(base.d_distances[i], (loss_at(p).loss - loss_at(m).loss) / (2 * h), 1e-8);
    }
}

TEST(ClassifyBackward, MatchesFiniteDifferences) {
    std::mt19937_64 gen(15);
    Matrix q = oracle::random_matrix(gen, 3, 4);
    lc::Prototypes protos(3);
    for (auto& p : protos) {
        for (int k = 0; k < 2; ++k) {
            const Matrix r = oracle::random_matrix(gen, 1, 4);
            p.push_back(std::vector<double>(r.values().begin(), r.values().end()));
        }
    }
    const std::vector<double> up{0.7, -1.1, 0.4};
    auto loss = [&](const Matrix& qq, const lc::Prototypes& pp) {
        const auto s = lc::classify(qq, pp);
        double v = 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
            v += up[c] * s.distances[c];
        }
        return v;
    };
    const auto g = lc::classify_backward(q, protos, up);
    const double h = 1e-6;
    for (std::size_t k = 0; k < q.size(); ++k) {
        Matrix p = q;
        Matrix m = q;
        p.values()[k] += h;
        m.values()[k] -= h;
        EXPECT_NEAR(g.d_query_repr.values()[k], (loss(p, protos) - loss(m, protos)) / (2 * h), 1e-8);
    }
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t k = 0; k < 2; ++k) {
            for (std::size_t d = 0; d < 4; ++d) {
                auto p = protos;
                auto m = protos;
                p[c][k][d] += h;
                m[c][k][d] -= h;
                EXPECT_NEAR(g.d_prototypes[c][k][d], (loss(q, p) - loss(q, m)) / (2 * h), 1e-8);
            }
        }
    }
}
