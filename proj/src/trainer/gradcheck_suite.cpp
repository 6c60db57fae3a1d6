// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsloc/trainer/gradcheck_suite.hpp"

#include "fsloc/numkit/ops.hpp"
#include "fsloc/trainer/model.hpp"

namespace fsloc::trainer {

namespace nk = numkit;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, nk::RngStream& rng, double scale = 1.0) {
    Matrix m(r, c);
    for (double& x : m.values()) {
        x = scale * rng.normal();
    }
    return m;
}

std::vector<double> random_vector(std::size_t n, nk::RngStream& rng) {
    std::vector<double> v(n);
    for (double& x : v) {
        x = rng.normal();
    }
    return v;
}

double weighted_sum(std::span<const double> a, std::span<const double> w) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * w[i];
    }
    return s;
}

ModuleCheck check_encoder(std::uint64_t seed, const nk::GradCheckOptions& options) {
    nk::RngStream rng(seed);
    auto init_rng = rng.split("init");
    auto params = encoder::init_encoder(init_rng);
    auto data_rng = rng.split("data");
    const Matrix x = random_matrix(6, encoder::kInputDim, data_rng);
    const Matrix w = random_matrix(6, encoder::kEmbedDim, data_rng);
    const auto dropout_rng = rng.split("dropout");
    auto loss = [&] {
        auto r = dropout_rng;
        const auto out = encoder::encode_forward(params, x, dataio::StreamKind::kFlow, true, r);
        return weighted_sum(out.embedding.values(), w.values());
    };
    for (auto* t : params.tensors()) {
        t->zero_grad();
    }
    {
        auto r = dropout_rng;
        const auto out = encoder::encode_forward(params, x, dataio::StreamKind::kFlow, true, r);
        encoder::encode_backward(params, out.cache, w);
    }
    std::vector<ParamTensor*> flow;
    for (auto* t : params.tensors()) {
        if (t->name.find(".flow.") != std::string::npos) {
            flow.push_back(t);
        }
    }
    return {"encoder", nk::grad_check(loss, flow, options)};
}

ModuleCheck check_tsm(std::uint64_t seed, const nk::GradCheckOptions& options) {
    nk::RngStream rng(seed);
    ParamTensor q("tsm.query", random_matrix(7, 5, rng));
    ParamTensor v("tsm.reference", random_matrix(4, 5, rng));
    const auto w = random_vector(7, rng);
    const std::array metrics = {tsm::SimilarityMetric::kCosine, tsm::SimilarityMetric::kDot,
                                tsm::SimilarityMetric::kEuclidean};
    auto loss = [&] {
        double s = 0.0;
        for (const auto m : metrics) {
            s += weighted_sum(tsm::maxpool_rows(tsm::compute_tsm(q.value, v.value, m)).values, w);
        }
        return s;
    };
    q.zero_grad();
    v.zero_grad();
    for (const auto m : metrics) {
        const auto pooled = tsm::maxpool_rows(tsm::compute_tsm(q.value, v.value, m));
        tsm::similarity_backward(q.value, v.value, pooled, w, q.grad, v.grad);
    }
    std::array<ParamTensor*, 2> ps = {&q, &v};
    return {"tsm", nk::grad_check(loss, ps, options)};
}

ModuleCheck check_tcam(std::uint64_t seed, const nk::GradCheckOptions& options) {
    nk::RngStream rng(seed);
    auto gen = tcam::init_generator();
    // Move away from the identity initialization so every term is exercised.
    for (auto* t : gen.tensors()) {
        for (double& x : t->value.values()) {
            x += 0.3 * rng.normal();
        }
    }
    ParamTensor stacked("tcam.similarities", random_matrix(10, tsm::kBundleChannels, rng));
    const std::size_t classes = 2;
    const Matrix w = random_matrix(5, classes, rng);
    // Rows 0-4 feed class 0, rows 5-9 class 1; the result is column-softmaxed.
    auto forward = [&](tcam::AttentionResult& out) {
        out = tcam::generate_attention_rows(stacked.value, gen, true);
        Matrix raw(5, classes);
        for (std::size_t i = 0; i < 10; ++i) {
            raw(i % 5, i / 5) = out.attention[i];
        }
        return tcam::normalize_tcam(raw);
    };
    auto loss = [&] {
        tcam::AttentionResult r;
        return weighted_sum(forward(r).values(), w.values());
    };
    for (auto* t : gen.tensors()) {
        t->zero_grad();
    }
    stacked.zero_grad();
    {
        tcam::AttentionResult r;
        const Matrix norm = forward(r);
        const Matrix d_raw = tcam::normalize_tcam_backward(norm, w);
        std::vector<double> up(10);
        for (std::size_t i = 0; i < 10; ++i) {
            up[i] = d_raw(i % 5, i / 5);
        }
        stacked.grad = tcam::generate_attention_backward(gen, r.cache, up);
    }
    std::vector<ParamTensor*> ps = gen.tensors();
    ps.push_back(&stacked);
    return {"tcam", nk::grad_check(loss, ps, options)};
}

ModuleCheck check_locclass(std::uint64_t seed, const nk::GradCheckOptions& options) {
    nk::RngStream rng(seed);
    const std::size_t classes = 4;
    const std::size_t shots = 2;
    const std::size_t dim = 6;
    ParamTensor tcam_raw("locclass.tcam", random_matrix(5, classes, rng));
    ParamTensor emb("locclass.embedding", random_matrix(5, dim, rng, 0.5));
    ParamTensor protos("locclass.prototypes", random_matrix(classes * shots, dim, rng, 0.5));
    const std::vector<double> labels = {0.0, 1.0, 0.0, 1.0};
    auto unpack = [&] {
        locclass::Prototypes p(classes);
        for (std::size_t c = 0; c < classes; ++c) {
            for (std::size_t k = 0; k < shots; ++k) {
                const auto row = protos.value.row(c * shots + k);
                p[c].emplace_back(row.begin(), row.end());
            }
        }
        return p;
    };
    auto loss = [&] {
        const Matrix xq = locclass::query_class_repr(tcam::normalize_tcam(tcam_raw.value), emb.value);
        return locclass::class_loss(locclass::classify(xq, unpack()), labels).loss;
    };
    tcam_raw.zero_grad();
    emb.zero_grad();
    protos.zero_grad();
    {
        const Matrix norm = tcam::normalize_tcam(tcam_raw.value);
        const Matrix xq = locclass::query_class_repr(norm, emb.value);
        const auto p = unpack();
        const auto scores = locclass::classify(xq, p);
        const auto cl = locclass::class_loss(scores, labels);
        const auto g = locclass::classify_backward(xq, p, cl.d_distances);
        for (std::size_t c = 0; c < classes; ++c) {
            for (std::size_t k = 0; k < shots; ++k) {
                auto dst = protos.grad.row(c * shots + k);
                std::copy(g.d_prototypes[c][k].begin(), g.d_prototypes[c][k].end(), dst.begin());
            }
        }
        emb.grad = nk::matmul(norm, g.d_query_repr);
        tcam_raw.grad = tcam::normalize_tcam_backward(norm, nk::matmul_nt(emb.value, g.d_query_repr));
    }
    std::array<ParamTensor*, 3> ps = {&tcam_raw, &emb, &protos};
    return {"locclass", nk::grad_check(loss, ps, options)};
}

}  // namespace

dataio::SyntheticSpec toy_spec(std::uint64_t seed) {
    dataio::SyntheticSpec s;
    s.classes = 5;
    s.train_classes = 3;
    s.trimmed_per_class = 2;
    s.untrimmed_per_class = 2;
    s.min_snippets = 9;
    s.max_snippets = 12;
    s.min_action_length = 2;
    s.max_action_length = 4;
    s.seed = seed;
    return s;
}

ModuleCheck check_full_model(std::uint64_t seed, const nk::GradCheckOptions& options) {
    const auto data = dataio::gen_synthetic(toy_spec(seed));
    dataio::FeatureStore store;
    for (const auto& f : data.features) {
        store.insert(f);
    }
    nk::RngStream rng(seed);
    auto sampler = rng.split("episode");
    const auto episode = episodes::sample_train_episode(data.manifest, {3, 1, 1}, sampler);

    ModelOptions opt;
    Model model = init_model(opt, rng.split("init").next_u64());
    // Perturb the generator so the check does not sit at its symmetric start.
    auto perturb = rng.split("perturb");
    for (auto* t : model.generator.tensors()) {
        for (double& x : t->value.values()) {
            x += 0.2 * perturb.normal();
        }
    }
    const auto dropout = rng.split("dropout");
    auto loss = [&] { return forward_episode(model, episode, store, true, dropout).loss; };
    auto params = model.trainable();
    for (auto* t : params) {
        t->zero_grad();
    }
    backward_episode(model, forward_episode(model, episode, store, true, dropout));
    return {"model", nk::grad_check(loss, params, options)};
}

std::vector<ModuleCheck> run_gradcheck_suite(std::uint64_t seed, const nk::GradCheckOptions& options) {
    std::vector<ModuleCheck> out;
    out.push_back(check_encoder(seed, options));
    out.push_back(check_tsm(seed, options));
    out.push_back(check_tcam(seed, options));
    out.push_back(check_locclass(seed, options));
    out.push_back(check_full_model(seed, options));
    return out;
}

}  // namespace fsloc::trainer
