// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "fsloc/numkit/gradcheck.hpp"
#include "fsloc/tcam/tcam.hpp"
#include "oracles.hpp"

namespace tcam = fsloc::tcam;
namespace tsm = fsloc::tsm;
using fsloc::numkit::Matrix;

namespace {

tsm::SimilarityBundle bundle_from(const Matrix& stacked) {
    tsm::SimilarityBundle b;
    for (std::size_t k = 0; k < tsm::kBundleChannels; ++k) {
        b.channels[k].values = stacked.column(k);
        b.channels[k].metric = tsm::bundle_metric(k);
        b.channels[k].stream = tsm::bundle_stream(k);
    }
    return b;
}

std::size_t argmax(const std::vector<double>& v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST(Generator, InitIsIdentityBnAndChannelAverage) {
    const auto g = tcam::init_generator();
    EXPECT_EQ(g.bn.scale.value, Matrix(1, 4, 1.0));
    EXPECT_EQ(g.bn.shift.value, Matrix(1, 4, 0.0));
    EXPECT_EQ(g.bn.running_mean, Matrix(1, 4, 0.0));
    EXPECT_EQ(g.bn.running_var, Matrix(1, 4, 1.0));
    EXPECT_EQ(g.fc_w.value, Matrix(4, 1, 0.25));
    EXPECT_EQ(g.fc_b.value, Matrix(1, 1, 0.0));
}

TEST(Generator, StackBundleUsesCanonicalOrder) {
    std::mt19937_64 gen(1);
    const Matrix m = oracle::random_matrix(gen, 6, 4);
    EXPECT_EQ(tcam::stack_bundle(bundle_from(m)), m);
}

TEST(Generator, ProjectionOntoCosRgb) {
    auto g = tcam::init_generator();
    g.fc_w.value = Matrix::from_rows({{1.0}, {0.0}, {0.0}, {0.0}});
    g.bn.running_var.fill(1.0 - fsloc::numkit::kBatchNormEpsilon);
    std::mt19937_64 gen(2);
    const Matrix m = oracle::random_matrix(gen, 7, 4);
    const auto a = tcam::generate_attention(bundle_from(m), g, false);
    ASSERT_EQ(a.size(), 7U);
    for (std::size_t i = 0; i < 7; ++i) {
        EXPECT_NEAR(a[i], m(i, 0), 1e-12);
    }
}

TEST(Generator, ConstantBundleGivesConstantOutput) {
    auto g = tcam::init_generator();
    g.fc_w.value = Matrix::from_rows({{0.3}, {-1.0}, {2.0}, {0.7}});
    const Matrix m(5, 4, 0.4);
    for (const bool training : {false, true}) {
        const auto a = tcam::generate_attention(bundle_from(m), g, training);
        for (const double v : a) {
            EXPECT_EQ(v, a[0]);
        }
    }
}

TEST(Generator, GradCheckThroughGenerator) {
    auto g = tcam::init_generator();
    g.fc_w.value = Matrix::from_rows({{0.3}, {-1.0}, {2.0}, {0.7}});
    g.bn.scale.value = Matrix::from_rows({{1.5, 0.5, -0.8, 1.1}});
    g.bn.shift.value = Matrix::from_rows({{0.1, -0.2, 0.3, 0.0}});
    std::mt19937_64 gen(3);
    const Matrix x = oracle::random_matrix(gen, 9, 4);
    const Matrix w = oracle::random_matrix(gen, 9, 1);
    // Squared weighting keeps the loss non-linear in the outputs.
    auto loss = [&] {
        const auto r = tcam::generate_attention_rows(x, g, true);
        double s = 0.0;
        for (std::size_t i = 0; i < r.attention.size(); ++i) {
            s += w(i, 0) * r.attention[i] + 0.5 * r.attention[i] * r.attention[i];
        }
        return s;
    };
    for (auto* t : g.tensors()) {
        t->zero_grad();
    }
    const auto r = tcam::generate_attention_rows(x, g, true);
    std::vector<double> up(9);
    for (std::size_t i = 0; i < 9; ++i) {
        up[i] = w(i, 0) + r.attention[i];
    }
    const Matrix dx = tcam::generate_attention_backward(g, r.cache, up);
    const auto params = g.tensors();
    const auto res = fsloc::numkit::grad_check(loss, params);
    EXPECT_LT(res.max_rel_error, 1e-4);
    EXPECT_EQ(res.checked, 13U);

    const double h = 1e-6;
    for (std::size_t k = 0; k < x.size(); ++k) {
        Matrix xp = x;
        Matrix xm = x;
        xp.values()[k] += h;
        xm.values()[k] -= h;
        auto eval = [&](const Matrix& in) {
            const auto a = tcam::generate_attention_rows(in, g, true).attention;
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                s += w(i, 0) * a[i] + 0.5 * a[i] * a[i];
            }
            return s;
        };
        EXPECT_NEAR(dx.values()[k], (eval(xp) - eval(xm)) / (2 * h), 1e-6);
    }
}

TEST(Normalize, SingleSnippetIsOne) {
    const auto n = tcam::normalize_tcam(Matrix::from_rows({{-3.0, 0.0, 42.0}}));
    EXPECT_EQ(n, Matrix(1, 3, 1.0));
}

TEST(Normalize, ConstantColumnIsUniform) {
    const auto n = tcam::normalize_tcam(Matrix(4, 2, 7.5));
    EXPECT_EQ(n, Matrix(4, 2, 0.25));
}

TEST(Normalize, ColumnsSumToOneAndKeepArgmax) {
    std::mt19937_64 gen(4);
    for (int t = 0; t < 100; ++t) {
        const Matrix raw = oracle::random_matrix(gen, 1 + t % 13, 1 + t % 5, -20.0, 20.0);
        const Matrix n = tcam::normalize_tcam(raw);
        for (std::size_t c = 0; c < raw.cols(); ++c) {
            const auto col = n.column(c);
            double s = 0.0;
            for (const double v : col) {
                s += v;
            }
            EXPECT_NEAR(s, 1.0, 1e-12);
            EXPECT_EQ(argmax(col), argmax(raw.column(c)));
        }
    }
}

TEST(Normalize, BackwardMatchesFiniteDifferences) {
    std::mt19937_64 gen(5);
    const Matrix raw = oracle::random_matrix(gen, 6, 3, -2.0, 2.0);
    const Matrix up = oracle::random_matrix(gen, 6, 3);
    auto loss = [&](const Matrix& r) {
        const Matrix n = tcam::normalize_tcam(r);
        double s = 0.0;
        for (std::size_t i = 0; i < n.size(); ++i) {
            s += n.values()[i] * up.values()[i];
        }
        return s;
    };
    const Matrix d = tcam::normalize_tcam_backward(tcam::normalize_tcam(raw), up);
    const double h = 1e-6;
    for (std::size_t k = 0; k < raw.size(); ++k) {
        Matrix p = raw;
        Matrix m = raw;
        p.values()[k] += h;
        m.values()[k] -= h;
        EXPECT_NEAR(d.values()[k], (loss(p) - loss(m)) / (2 * h), 1e-8);
    }
}

TEST(KShot, SingleShotIsIdentity) {
    const std::vector<std::vector<double>> one{{0.1, -2.0, 3.5}};
    EXPECT_EQ(tcam::kshot_average(one), one[0]);
}

TEST(KShot, OppositeVectorsCancel) {
    const std::vector<std::vector<double>> two{{0.1, -2.0, 3.5}, {-0.1, 2.0, -3.5}};
    EXPECT_EQ(tcam::kshot_average(two), (std::vector<double>{0.0, 0.0, 0.0}));
}

TEST(KShot, ThreeShotsMatchPerEntryMean) {
    std::mt19937_64 gen(6);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::vector<std::vector<double>> shots(3, std::vector<double>(11));
    for (auto& s : shots) {
        for (double& v : s) {
            v = u(gen);
        }
    }
    const auto avg = tcam::kshot_average(shots);
    for (std::size_t i = 0; i < 11; ++i) {
        EXPECT_NEAR(avg[i], (shots[0][i] + shots[1][i] + shots[2][i]) / 3.0, 1e-15);
    }
}

TEST(KShot, LengthMismatchThrows) {
    const std::vector<std::vector<double>> bad{{1.0, 2.0}, {1.0}};
    EXPECT_ANY_THROW(tcam::kshot_average(bad));
}
