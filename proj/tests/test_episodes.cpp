// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <map>
#include <set>

#include "fsloc/dataio/synthetic.hpp"
#include "fsloc/dataio/io.hpp"
#include "fsloc/episodes/episode.hpp"
#include "fsloc/errors.hpp"

namespace ep = fsloc::episodes;
namespace io = fsloc::dataio;
using fsloc::numkit::RngStream;

namespace {

const io::DatasetManifest& toy_manifest() {
    static const io::DatasetManifest m = [] {
        io::SyntheticSpec spec;
        spec.classes = 8;
        spec.train_classes = 5;
        spec.trimmed_per_class = 3;
        spec.untrimmed_per_class = 4;
        return io::gen_synthetic(spec).manifest;
    }();
    return m;
}

}  // namespace

TEST(Episodes, FiveWayOneShotStructure) {
    RngStream rng(1);
    const auto e = ep::sample_train_episode(toy_manifest(), {5, 1, 2}, rng);
    ASSERT_EQ(e.ways(), 5U);
    EXPECT_EQ(e.shots(), 1U);
    EXPECT_EQ(std::set<io::ClassId>(e.classes.begin(), e.classes.end()).size(), 5U);
    for (std::size_t c = 0; c < e.ways(); ++c) {
        ASSERT_EQ(e.sample_set[c].size(), 1U);
        const auto* v = toy_manifest().find_video(e.sample_set[c][0].video_id);
        ASSERT_NE(v, nullptr);
        EXPECT_TRUE(v->trimmed);
        EXPECT_TRUE(v->has_label(e.classes[c]));
    }
    EXPECT_EQ(e.queries.size(), 10U);
}

TEST(Episodes, ClassesComeFromRequestedSplit) {
    const auto& m = toy_manifest();
    const std::set<io::ClassId> test(m.test_classes.begin(), m.test_classes.end());
    for (std::uint64_t s = 0; s < 50; ++s) {
        RngStream rng(s);
        const auto e = ep::sample_test_episode(m, {3, 2, 1}, rng);
        for (const auto c : e.classes) {
            EXPECT_TRUE(test.contains(c));
        }
    }
}

TEST(Episodes, QueriesAreUntrimmedDistinctAndLabelledMultiHot) {
    for (std::uint64_t s = 0; s < 30; ++s) {
        RngStream rng(s);
        const auto e = ep::sample_train_episode(toy_manifest(), {4, 2, 3}, rng);
        std::set<std::string> seen;
        for (const auto& shots : e.sample_set) {
            for (const auto& x : shots) {
                seen.insert(x.video_id);
            }
        }
        std::vector<int> positives(e.ways(), 0);
        for (const auto& q : e.queries) {
            EXPECT_TRUE(seen.insert(q.video_id).second) << "video reused: " << q.video_id;
            const auto* v = toy_manifest().find_video(q.video_id);
            EXPECT_FALSE(v->trimmed);
            ASSERT_EQ(q.labels.size(), e.ways());
            for (std::size_t c = 0; c < e.ways(); ++c) {
                EXPECT_EQ(q.labels[c], v->has_label(e.classes[c]) ? 1.0 : 0.0);
                positives[c] += q.labels[c] > 0.0 ? 1 : 0;
            }
        }
        for (const int p : positives) {
            EXPECT_GE(p, 1);
        }
    }
}

TEST(Episodes, SameSeedSameEpisode) {
    RngStream a(99);
    RngStream b(99);
    const auto x = ep::sample_train_episode(toy_manifest(), {5, 1, 4}, a);
    const auto y = ep::sample_train_episode(toy_manifest(), {5, 1, 4}, b);
    EXPECT_EQ(x.classes, y.classes);
    ASSERT_EQ(x.queries.size(), y.queries.size());
    for (std::size_t i = 0; i < x.queries.size(); ++i) {
        EXPECT_EQ(x.queries[i].video_id, y.queries[i].video_id);
    }
}

TEST(Episodes, ClassSelectionIsRoughlyUniform) {
    std::map<io::ClassId, int> counts;
    RngStream root(5);
    const int trials = 4000;
    for (int t = 0; t < trials; ++t) {
        auto rng = root.split(static_cast<std::uint64_t>(t));
        for (const auto c : ep::sample_train_episode(toy_manifest(), {2, 1, 1}, rng).classes) {
            ++counts[c];
        }
    }
    ASSERT_EQ(counts.size(), 5U);
    // Each of 5 classes is expected 1600 times; 5 sigma is about 150.
    for (const auto& [c, n] : counts) {
        EXPECT_NEAR(n, 1600, 160) << "class " << c;
    }
}

TEST(Episodes, TooManyWaysNamesTheShortfall) {
    RngStream rng(0);
    try {
        ep::sample_train_episode(toy_manifest(), {6, 1, 1}, rng);
        FAIL() << "expected EpisodeError";
    } catch (const fsloc::EpisodeError& e) {
        EXPECT_NE(std::string(e.what()).find("only 5"), std::string::npos);
    }
}

TEST(Episodes, TooManyShotsNamesTheClass) {
    RngStream rng(0);
    EXPECT_THROW(ep::sample_train_episode(toy_manifest(), {1, 4, 1}, rng), fsloc::EpisodeError);
}

TEST(Episodes, ZeroWaysRejected) {
    RngStream rng(0);
    EXPECT_THROW(ep::sample_train_episode(toy_manifest(), {0, 1, 1}, rng), fsloc::ValidationError);
}

TEST(Episodes, MinimalOneClassManifest) {
    const auto m = io::parse_manifest(R"({"classes":[{"id":3,"name":"jump"}],"split":{"train":[3],"test":[]},
        "videos":[{"id":"t","trimmed":true,"labels":[3]},{"id":"u","trimmed":false,"labels":[3]}]})");
    RngStream rng(0);
    const auto e = ep::sample_train_episode(m, {1, 1, 8}, rng);
    ASSERT_EQ(e.sample_set.size(), 1U);
    EXPECT_EQ(e.sample_set[0][0].video_id, "t");
    ASSERT_EQ(e.queries.size(), 1U);
    EXPECT_EQ(e.queries[0].video_id, "u");
    EXPECT_EQ(e.queries[0].labels, std::vector<double>{1.0});
}

TEST(Episodes, TrainingShapeFiveWayOneShotEightQueries) {
    io::SyntheticSpec spec;
    const auto m = io::gen_synthetic(spec).manifest;
    RngStream rng(1);
    const auto e = ep::sample_train_episode(m, {5, 1, 8}, rng);
    EXPECT_EQ(e.ways(), 5U);
    EXPECT_EQ(e.shots(), 1U);
    EXPECT_EQ(e.queries.size(), 40U);
}
