// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "fsloc/dataio/io.hpp"
#include "fsloc/dataio/synthetic.hpp"
#include "fsloc/errors.hpp"
#include "fsloc/trainer/checkpoint.hpp"
#include "fsloc/trainer/gradcheck_suite.hpp"
#include "fsloc/trainer/model.hpp"
#include "fsloc/trainer/train.hpp"
#include "oracles.hpp"

namespace tr = fsloc::trainer;
namespace io = fsloc::dataio;
using fsloc::tsm::SimilarityMetric;

namespace {

struct SmallData {
    io::SyntheticDataset data;
    io::FeatureStore store;

    explicit SmallData(io::SyntheticSpec spec) {
        data = io::gen_synthetic(spec);
        for (const auto& f : data.features) {
            store.insert(f);
        }
    }
};

io::SyntheticSpec small_spec() {
    io::SyntheticSpec spec;
    spec.classes = 8;
    spec.train_classes = 5;
    spec.trimmed_per_class = 2;
    spec.untrimmed_per_class = 3;
    return spec;
}

tr::TrainConfig quick_config(int episodes) {
    tr::TrainConfig cfg;
    cfg.episodes = episodes;
    cfg.episode = {3, 1, 2};
    cfg.checkpoint_every = 0;
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST(Model, OptionsValidation) {
    tr::ModelOptions o;
    o.metrics = {SimilarityMetric::kEuclidean};
    EXPECT_THROW(o.validate(), fsloc::ValidationError);
    o.learn_psi = false;
    EXPECT_NO_THROW(o.validate());
    o.metrics = {};
    EXPECT_THROW(o.validate(), fsloc::ValidationError);
    o.metrics = {SimilarityMetric::kDot, SimilarityMetric::kDot};
    EXPECT_THROW(o.validate(), fsloc::ValidationError);
    o.metrics = {SimilarityMetric::kDot};
    o.dropout = 1.0;
    EXPECT_THROW(o.validate(), fsloc::ValidationError);
}

TEST(Model, StreamDimension) {
    tr::ModelOptions o;
    EXPECT_EQ(o.stream_dim(), 128U);
    o.learn_phi = false;
    EXPECT_EQ(o.stream_dim(), 1024U);
}

TEST(Model, MetricListRoundTrip) {
    const auto m = tr::parse_metrics("cos,dot,euclid");
    EXPECT_EQ(m.size(), 3U);
    EXPECT_EQ(tr::parse_metrics(tr::metrics_to_string(m)), m);
    EXPECT_ANY_THROW(tr::parse_metrics("cos,hamming"));
}

TEST(Model, NoLearnCosineSelfMatchIsOne) {
    const SmallData d(small_spec());
    const auto& v = d.data.manifest.videos.front();
    fsloc::episodes::Episode e;
    e.classes = {v.labels[0]};
    e.sample_set = {{{v.labels[0], v.video_id}}};
    e.queries = {{v.video_id, {1.0}}};
    const auto model = tr::no_learn_model({SimilarityMetric::kCosine}, tr::PoolingMode::kWeighted);
    const auto f = tr::forward_episode(model, e, d.store, false);
    ASSERT_EQ(f.queries.size(), 1U);
    const auto& raw = f.queries[0].raw_tcam;
    ASSERT_EQ(raw.cols(), 1U);
    for (std::size_t i = 0; i < raw.rows(); ++i) {
        EXPECT_NEAR(raw(i, 0), 1.0, 1e-12);
    }
    EXPECT_EQ(f.queries[0].scores.probs, std::vector<double>{1.0});
}

TEST(Model, DotWeightedNoLearnUsesTwoChannels) {
    const auto model = tr::no_learn_model({SimilarityMetric::kDot}, tr::PoolingMode::kWeighted);
    EXPECT_FALSE(model.options.learn_phi);
    EXPECT_FALSE(model.options.learn_psi);
    const auto ch = tr::attention_channels(model.options);
    ASSERT_EQ(ch.size(), 2U);
    for (const auto& c : ch) {
        EXPECT_EQ(c.metric, SimilarityMetric::kDot);
    }
    EXPECT_TRUE(model.trainable().empty());
}

TEST(Model, ForwardOutputsAreNormalized) {
    const SmallData d(small_spec());
    const auto model = tr::init_model({}, 3);
    fsloc::numkit::RngStream root(8);
    for (int t = 0; t < 5; ++t) {
        auto rng = root.split(static_cast<std::uint64_t>(t));
        const auto e = fsloc::episodes::sample_train_episode(d.data.manifest, {3, 1, 2}, rng);
        const auto f = tr::forward_episode(model, e, d.store, true, rng);
        for (const auto& q : f.queries) {
            for (std::size_t c = 0; c < q.normalized_tcam.cols(); ++c) {
                double s = 0.0;
                for (const double v : q.normalized_tcam.column(c)) {
                    s += v;
                }
                EXPECT_NEAR(s, 1.0, 1e-9);
            }
            double p = 0.0;
            for (const double v : q.scores.probs) {
                p += v;
            }
            EXPECT_NEAR(p, 1.0, 1e-9);
        }
    }
}

TEST(GradCheck, FullModelBelowTolerance) {
    fsloc::numkit::GradCheckOptions opt;
    opt.samples_per_tensor = 20;
    const auto r = tr::check_full_model(7, opt);
    EXPECT_LT(r.result.max_rel_error, 1e-4);
    EXPECT_GT(r.result.checked, 50U);
}

TEST(GradCheck, ToySpecIsSmall) {
    const auto spec = tr::toy_spec(1);
    EXPECT_LE(spec.max_snippets, 12);
    EXPECT_NO_THROW(spec.validate());
}

TEST(TrainConfig, LearningRateSchedule) {
    tr::TrainConfig cfg;
    EXPECT_EQ(cfg.episodes, 10000);
    EXPECT_EQ(cfg.episode.ways, 5);
    EXPECT_EQ(cfg.episode.shots, 1);
    EXPECT_EQ(cfg.episode.queries_per_class, 8);
    EXPECT_EQ(cfg.learning_rate_at(1), 1e-4);
    EXPECT_EQ(cfg.learning_rate_at(1000), 1e-4);
    EXPECT_EQ(cfg.learning_rate_at(1001), 5e-5);
    EXPECT_EQ(cfg.learning_rate_at(10000), 5e-5);
}

TEST(TrainConfig, TextRoundTrip) {
    tr::TrainConfig cfg;
    cfg.episodes = 123;
    cfg.learning_rate = 3e-4;
    cfg.seed = 77;
    cfg.model.learn_phi = false;
    cfg.model.metrics = {SimilarityMetric::kDot};
    cfg.model.pooling = tr::PoolingMode::kAverage;
    const std::string text = tr::config_to_text(cfg);
    tr::TrainConfig back;
    tr::apply_config(back, tr::parse_config_text(text));
    EXPECT_EQ(tr::config_to_text(back), text);
    EXPECT_EQ(back.episodes, 123);
    EXPECT_FALSE(back.model.learn_phi);
}

TEST(TrainConfig, CommentsAndUnknownKeys) {
    const auto e = tr::parse_config_text("# comment\n\nepisodes = 7\n");
    EXPECT_EQ(e.at("episodes"), "7");
    tr::TrainConfig cfg;
    EXPECT_THROW(tr::apply_config(cfg, {{"episdoes", "7"}}), fsloc::ValidationError);
    EXPECT_THROW(tr::apply_config(cfg, {{"episodes", "seven"}}), fsloc::ValidationError);
}

TEST(Train, NoLearnLeavesParametersUntouched) {
    const SmallData d(small_spec());
    auto cfg = quick_config(5);
    cfg.model.learn_phi = false;
    cfg.model.learn_psi = false;
    const auto fresh = tr::init_model(cfg.model, cfg.seed);
    const auto r = tr::train(d.data.manifest, d.store, cfg);
    EXPECT_EQ(tr::encode_checkpoint(r.model), tr::encode_checkpoint(fresh));
    EXPECT_EQ(r.log.size(), 5U);
}

TEST(Train, PsiOnlyKeepsEncoderFixed) {
    const SmallData d(small_spec());
    auto cfg = quick_config(4);
    cfg.model.learn_phi = false;
    const auto fresh = tr::init_model(cfg.model, cfg.seed);
    const auto r = tr::train(d.data.manifest, d.store, cfg);
    EXPECT_EQ(r.model.encoder[io::StreamKind::kRgb].w1.value, fresh.encoder[io::StreamKind::kRgb].w1.value);
    EXPECT_NE(r.model.generator.fc_w.value, fresh.generator.fc_w.value);
}

TEST(Train, SameSeedGivesIdenticalCheckpoints) {
    const SmallData d(small_spec());
    const auto cfg = quick_config(3);
    const auto a = tr::train(d.data.manifest, d.store, cfg);
    const auto b = tr::train(d.data.manifest, d.store, cfg);
    EXPECT_EQ(tr::encode_checkpoint(a.model), tr::encode_checkpoint(b.model));
    EXPECT_EQ(tr::format_train_log(a.log), tr::format_train_log(b.log));
}

TEST(Train, WritesCheckpointsAndLog) {
    const SmallData d(small_spec());
    auto cfg = quick_config(4);
    cfg.checkpoint_every = 2;
    const auto dir = oracle::scratch_dir("train_out");
    int seen = 0;
    tr::TrainOutputs out{dir, [&](const tr::TrainLogRow&) { ++seen; }};
    const auto r = tr::train(d.data.manifest, d.store, cfg, out);
    EXPECT_EQ(seen, 4);
    EXPECT_TRUE(std::filesystem::exists(dir / "checkpoint_2.fslp"));
    EXPECT_TRUE(std::filesystem::exists(dir / "checkpoint_4.fslp"));
    EXPECT_TRUE(std::filesystem::exists(dir / "train_log.csv"));
    const auto loaded = tr::load_checkpoint(dir / "model.fslp");
    EXPECT_EQ(tr::encode_checkpoint(loaded.model), tr::encode_checkpoint(r.model));
}

TEST(Train, LossDecreasesOnSyntheticDefaults) {
    const SmallData d(io::SyntheticSpec{});
    auto cfg = quick_config(150);
    cfg.episode = {};
    const auto r = tr::train(d.data.manifest, d.store, cfg);
    double first = 0.0;
    double last = 0.0;
    for (int i = 0; i < 50; ++i) {
        first += r.log[static_cast<std::size_t>(i)].loss;
        last += r.log[r.log.size() - 50 + static_cast<std::size_t>(i)].loss;
    }
    EXPECT_GT(first, last);
}

TEST(Train, EuclideanAblationRunsEndToEnd) {
    const SmallData d(small_spec());
    auto cfg = quick_config(2);
    cfg.model.learn_psi = false;
    cfg.model.metrics = {SimilarityMetric::kEuclidean};
    const auto r = tr::train(d.data.manifest, d.store, cfg);
    for (const auto& row : r.log) {
        EXPECT_TRUE(std::isfinite(row.loss));
    }
}

TEST(Checkpoint, RoundTripIsBitExact) {
    auto m = tr::init_model({}, 4);
    m.generator.bn.running_mean = fsloc::numkit::Matrix::from_rows({{0.1, 0.2, 0.3, 0.4}});
    const auto bytes = tr::encode_checkpoint(m, {{"episodes", "12"}});
    const auto back = tr::decode_checkpoint(bytes);
    EXPECT_EQ(tr::encode_checkpoint(back.model, {{"episodes", "12"}}), bytes);
    EXPECT_EQ(back.meta.at("episodes"), "12");
    EXPECT_EQ(back.model.generator.bn.running_mean, m.generator.bn.running_mean);
}

TEST(Checkpoint, CorruptInputRejected) {
    auto bytes = tr::encode_checkpoint(tr::init_model({}, 4));
    auto truncated = bytes;
    truncated.resize(bytes.size() / 2);
    EXPECT_THROW(tr::decode_checkpoint(truncated), fsloc::FormatError);
    bytes[0] = 'X';
    EXPECT_THROW(tr::decode_checkpoint(bytes), fsloc::FormatError);
}

TEST(Checkpoint, NoLearnModelKeepsOptions) {
    const auto m = tr::no_learn_model({SimilarityMetric::kDot}, tr::PoolingMode::kAverage);
    const auto back = tr::decode_checkpoint(tr::encode_checkpoint(m));
    EXPECT_FALSE(back.model.options.learn_phi);
    EXPECT_EQ(back.model.options.pooling, tr::PoolingMode::kAverage);
    EXPECT_EQ(back.model.options.metrics, m.options.metrics);
}
