// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsloc/trainer/model.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "fsloc/errors.hpp"
#include "fsloc/numkit/ops.hpp"

namespace fsloc::trainer {

namespace nk = numkit;
using dataio::StreamKind;

std::string_view to_string(PoolingMode p) { return p == PoolingMode::kWeighted ? "weighted" : "average"; }

PoolingMode parse_pooling(std::string_view name) {
    if (name == "weighted") {
        return PoolingMode::kWeighted;
    }
    if (name == "average" || name == "plain") {
        return PoolingMode::kAverage;
    }
    throw ValidationError("unknown pooling mode '" + std::string(name) + "'");
}

std::string metrics_to_string(const std::vector<SimilarityMetric>& metrics) {
    std::string out;
    for (const auto m : metrics) {
        if (!out.empty()) {
            out += ',';
        }
        out += tsm::to_string(m);
    }
    return out;
}

std::vector<SimilarityMetric> parse_metrics(std::string_view list) {
    std::vector<SimilarityMetric> out;
    std::size_t pos = 0;
    while (pos <= list.size()) {
        const std::size_t comma = std::min(list.find(',', pos), list.size());
        const auto token = list.substr(pos, comma - pos);
        if (!token.empty()) {
            out.push_back(tsm::parse_metric(token));
        }
        pos = comma + 1;
    }
    return out;
}

void ModelOptions::validate() const {
    if (metrics.empty()) {
        throw ValidationError("model: at least one similarity metric must be enabled");
    }
    for (std::size_t i = 0; i < metrics.size(); ++i) {
        for (std::size_t j = i + 1; j < metrics.size(); ++j) {
            if (metrics[i] == metrics[j]) {
                throw ValidationError("model: metric '" + std::string(tsm::to_string(metrics[i])) +
                                      "' listed twice");
            }
        }
    }
    if (learn_psi && uses_metric(SimilarityMetric::kEuclidean)) {
        throw ValidationError("model: the euclidean metric is only available without the learned generator");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        throw ValidationError("model: dropout rate " + std::to_string(dropout) + " outside [0, 1)");
    }
}

bool ModelOptions::uses_metric(SimilarityMetric m) const {
    return std::find(metrics.begin(), metrics.end(), m) != metrics.end();
}

std::size_t ModelOptions::stream_dim() const { return learn_phi ? encoder::kEmbedDim : encoder::kInputDim; }

std::vector<ParamTensor*> Model::trainable() {
    std::vector<ParamTensor*> out;
    if (options.learn_phi) {
        out = encoder.tensors();
    }
    if (options.learn_psi) {
        const auto g = generator.tensors();
        out.insert(out.end(), g.begin(), g.end());
    }
    return out;
}

std::vector<const ParamTensor*> Model::trainable() const {
    std::vector<const ParamTensor*> out;
    if (options.learn_phi) {
        out = encoder.tensors();
    }
    if (options.learn_psi) {
        const auto g = generator.tensors();
        out.insert(out.end(), g.begin(), g.end());
    }
    return out;
}

Model init_model(const ModelOptions& options, std::uint64_t seed) {
    options.validate();
    Model m;
    m.options = options;
    if (options.learn_phi) {
        nk::RngStream rng(seed);
        m.encoder = encoder::init_encoder(rng);
    }
    m.generator = tcam::init_generator();
    return m;
}

Model no_learn_model(std::vector<SimilarityMetric> metrics, PoolingMode pooling) {
    ModelOptions o;
    o.learn_phi = false;
    o.learn_psi = false;
    o.metrics = std::move(metrics);
    o.pooling = pooling;
    return init_model(o, 0);
}

std::vector<Channel> attention_channels(const ModelOptions& options) {
    std::vector<Channel> out;
    if (options.learn_psi) {
        for (std::size_t k = 0; k < tsm::kBundleChannels; ++k) {
            const auto m = tsm::bundle_metric(k);
            out.push_back({m, tsm::bundle_stream(k), options.uses_metric(m)});
        }
        return out;
    }
    for (const auto m : options.metrics) {
        for (const auto s : dataio::kStreams) {
            out.push_back({m, s, true});
        }
    }
    return out;
}

namespace {

Matrix slice_rows(const Matrix& m, std::size_t offset, std::size_t count) {
    Matrix out(count, m.cols());
    std::copy_n(m.data() + offset * m.cols(), count * m.cols(), out.data());
    return out;
}

void add_rows(Matrix& dst, std::size_t offset, const Matrix& src) {
    double* d = dst.data() + offset * dst.cols();
    const double* s = src.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        d[i] += s[i];
    }
}

std::size_t active_channels(const std::vector<Channel>& channels) {
    return static_cast<std::size_t>(
        std::count_if(channels.begin(), channels.end(), [](const Channel& c) { return c.active; }));
}

}  // namespace

EpisodeForward forward_episode(const Model& model, const episodes::Episode& episode,
                               const dataio::FeatureStore& store, bool training, const nk::RngStream& dropout_rng) {
    const auto& opt = model.options;
    const std::size_t classes = episode.ways();
    const std::size_t shots = episode.shots();
    if (classes == 0 || shots == 0) {
        throw EpisodeError("forward_episode: episode has no sample set");
    }
    if (episode.queries.empty()) {
        throw EpisodeError("forward_episode: episode has no queries");
    }
    for (const auto& per_class : episode.sample_set) {
        if (per_class.size() != shots) {
            throw EpisodeError("forward_episode: every class needs the same number of shots");
        }
    }

    EpisodeForward out;
    auto& cache = out.cache;

    // Stack every distinct video of the episode so each stream is encoded with one call.
    std::map<std::string, std::size_t> index_of_video;
    std::vector<const dataio::SnippetFeatureSet*> feats;
    auto intern = [&](const std::string& id) {
        auto [it, inserted] = index_of_video.emplace(id, feats.size());
        if (inserted) {
            const auto& f = store.get(id);
            feats.push_back(&f);
            cache.video_offset.push_back(cache.total_rows);
            cache.video_length.push_back(f.snippets());
            cache.total_rows += f.snippets();
        }
        return it->second;
    };
    for (const auto& q : episode.queries) {
        cache.query_video.push_back(intern(q.video_id));
    }
    cache.sample_video.resize(classes);
    for (std::size_t c = 0; c < classes; ++c) {
        for (const auto& s : episode.sample_set[c]) {
            cache.sample_video[c].push_back(intern(s.video_id));
        }
    }

    for (const auto s : dataio::kStreams) {
        const std::size_t si = dataio::index_of(s);
        Matrix stacked(cache.total_rows, encoder::kInputDim);
        for (std::size_t v = 0; v < feats.size(); ++v) {
            const Matrix& x = feats[v]->stream(s);
            std::copy_n(x.data(), x.size(), stacked.data() + cache.video_offset[v] * encoder::kInputDim);
        }
        if (opt.learn_phi) {
            nk::RngStream rng = dropout_rng.split("dropout").split(si);
            auto enc = encoder::encode_forward(model.encoder, std::move(stacked), s, training, rng, opt.dropout);
            cache.embedding[si] = std::move(enc.embedding);
            cache.encoder[si] = std::move(enc.cache);
        } else {
            cache.embedding[si] = std::move(stacked);
        }
    }

    auto video_stream = [&](std::size_t v, std::size_t si) {
        return slice_rows(cache.embedding[si], cache.video_offset[v], cache.video_length[v]);
    };
    auto video_concat = [&](std::size_t v) { return nk::hconcat(video_stream(v, 0), video_stream(v, 1)); };

    // Sample-set prototypes and per-stream reference embeddings.
    std::vector<std::vector<std::array<Matrix, 2>>> reference(classes);
    cache.prototypes.resize(classes);
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t k = 0; k < shots; ++k) {
            const std::size_t v = cache.sample_video[c][k];
            reference[c].push_back({video_stream(v, 0), video_stream(v, 1)});
            cache.prototypes[c].push_back(locclass::sample_repr(nk::hconcat(reference[c][k][0], reference[c][k][1])));
        }
    }

    // Similarity vectors for every (query, class, shot).
    cache.channels = attention_channels(opt);
    const std::size_t n_queries = episode.queries.size();
    cache.pooled.resize(n_queries * classes * shots);
    cache.attention_offset.resize(cache.pooled.size());
    std::vector<std::array<Matrix, 2>> query_streams(n_queries);
    for (std::size_t q = 0; q < n_queries; ++q) {
        const std::size_t v = cache.query_video[q];
        query_streams[q] = {video_stream(v, 0), video_stream(v, 1)};
        for (std::size_t c = 0; c < classes; ++c) {
            for (std::size_t k = 0; k < shots; ++k) {
                const std::size_t block = (q * classes + c) * shots + k;
                auto& pooled = cache.pooled[block];
                pooled.resize(cache.channels.size());
                for (std::size_t ch = 0; ch < cache.channels.size(); ++ch) {
                    const auto& spec = cache.channels[ch];
                    if (!spec.active) {
                        continue;
                    }
                    const std::size_t si = dataio::index_of(spec.stream);
                    pooled[ch] = tsm::maxpool_rows(
                        tsm::compute_tsm(query_streams[q][si], reference[c][k][si], spec.metric, spec.stream, c));
                }
                cache.attention_offset[block] = cache.attention_rows;
                cache.attention_rows += cache.video_length[v];
            }
        }
    }

    // Raw attention for every stacked row.
    std::vector<double> attention(cache.attention_rows, 0.0);
    if (opt.learn_psi) {
        Matrix stacked(cache.attention_rows, tsm::kBundleChannels);
        for (std::size_t b = 0; b < cache.pooled.size(); ++b) {
            for (std::size_t ch = 0; ch < cache.channels.size(); ++ch) {
                if (!cache.channels[ch].active) {
                    continue;
                }
                const auto& vals = cache.pooled[b][ch].values;
                for (std::size_t i = 0; i < vals.size(); ++i) {
                    stacked(cache.attention_offset[b] + i, ch) = vals[i];
                }
            }
        }
        auto gen = tcam::generate_attention_rows(stacked, model.generator, training);
        attention = std::move(gen.attention);
        cache.generator = std::move(gen.cache);
    } else {
        const double inv = 1.0 / static_cast<double>(active_channels(cache.channels));
        for (std::size_t b = 0; b < cache.pooled.size(); ++b) {
            for (const auto& pv : cache.pooled[b]) {
                for (std::size_t i = 0; i < pv.values.size(); ++i) {
                    attention[cache.attention_offset[b] + i] += pv.values[i];
                }
            }
            const std::size_t len = cache.pooled[b].front().values.size();
            for (std::size_t i = 0; i < len; ++i) {
                attention[cache.attention_offset[b] + i] *= inv;
            }
        }
    }

    // Per query: TCAMs, class representations, scores and loss.
    out.queries.resize(n_queries);
    cache.query_concat.resize(n_queries);
    double loss_sum = 0.0;
    for (std::size_t q = 0; q < n_queries; ++q) {
        auto& qo = out.queries[q];
        const auto& entry = episode.queries[q];
        const std::size_t n = cache.video_length[cache.query_video[q]];
        qo.video_id = entry.video_id;
        qo.raw_tcam = Matrix(n, classes);
        for (std::size_t c = 0; c < classes; ++c) {
            std::vector<std::vector<double>> per_shot(shots);
            for (std::size_t k = 0; k < shots; ++k) {
                const std::size_t off = cache.attention_offset[(q * classes + c) * shots + k];
                per_shot[k].assign(attention.begin() + static_cast<std::ptrdiff_t>(off),
                                   attention.begin() + static_cast<std::ptrdiff_t>(off + n));
            }
            qo.raw_tcam.set_column(c, tcam::kshot_average(per_shot));
        }
        qo.normalized_tcam = tcam::normalize_tcam(qo.raw_tcam);
        cache.query_concat[q] = nk::hconcat(query_streams[q][0], query_streams[q][1]);
        if (opt.pooling == PoolingMode::kWeighted) {
            qo.class_repr = locclass::query_class_repr(qo.normalized_tcam, cache.query_concat[q]);
        } else {
            const auto mean = nk::column_means(cache.query_concat[q]);
            qo.class_repr = Matrix(classes, mean.size());
            for (std::size_t c = 0; c < classes; ++c) {
                std::copy(mean.begin(), mean.end(), qo.class_repr.row(c).begin());
            }
        }
        qo.scores = locclass::classify(qo.class_repr, cache.prototypes);
        if (entry.labels.size() == classes &&
            std::any_of(entry.labels.begin(), entry.labels.end(), [](double y) { return y > 0.0; })) {
            auto cl = locclass::class_loss(qo.scores, entry.labels);
            qo.loss = cl.loss;
            qo.d_distances = std::move(cl.d_distances);
            qo.has_loss = true;
            loss_sum += qo.loss;
            ++out.labelled_queries;
        }
    }
    if (out.labelled_queries > 0) {
        out.loss = loss_sum / static_cast<double>(out.labelled_queries);
    }
    return out;
}

void backward_episode(Model& model, const EpisodeForward& forward) {
    const auto& opt = model.options;
    if (!opt.learn_phi && !opt.learn_psi) {
        return;
    }
    if (forward.labelled_queries == 0) {
        throw ProtocolError("backward_episode: no labelled query in the forward pass");
    }
    const auto& cache = forward.cache;
    const std::size_t n_queries = forward.queries.size();
    const std::size_t classes = cache.prototypes.size();
    const std::size_t shots = cache.prototypes.front().size();
    const std::size_t half = opt.stream_dim();
    const double query_weight = 1.0 / static_cast<double>(forward.labelled_queries);

    std::array<Matrix, 2> d_embedding;
    if (opt.learn_phi) {
        for (std::size_t si = 0; si < 2; ++si) {
            d_embedding[si] = Matrix(cache.total_rows, half);
        }
    }
    auto add_concat_grad = [&](std::size_t video, const Matrix& d_concat) {
        const std::size_t off = cache.video_offset[video];
        for (std::size_t i = 0; i < d_concat.rows(); ++i) {
            const auto row = d_concat.row(i);
            for (std::size_t si = 0; si < 2; ++si) {
                auto dst = d_embedding[si].row(off + i);
                for (std::size_t j = 0; j < half; ++j) {
                    dst[j] += row[si * half + j];
                }
            }
        }
    };

    std::vector<double> d_attention(cache.attention_rows, 0.0);
    locclass::Prototypes d_prototypes(classes, std::vector<std::vector<double>>(shots));
    for (auto& per_class : d_prototypes) {
        for (auto& p : per_class) {
            p.assign(2 * half, 0.0);
        }
    }

    for (std::size_t q = 0; q < n_queries; ++q) {
        const auto& qo = forward.queries[q];
        if (!qo.has_loss) {
            continue;
        }
        std::vector<double> d_dist = qo.d_distances;
        for (double& g : d_dist) {
            g *= query_weight;
        }
        const auto cg = locclass::classify_backward(qo.class_repr, cache.prototypes, d_dist);
        for (std::size_t c = 0; c < classes; ++c) {
            for (std::size_t k = 0; k < shots; ++k) {
                auto& dst = d_prototypes[c][k];
                const auto& src = cg.d_prototypes[c][k];
                for (std::size_t j = 0; j < dst.size(); ++j) {
                    dst[j] += src[j];
                }
            }
        }
        const Matrix& x = cache.query_concat[q];
        const std::size_t n = x.rows();
        Matrix d_norm;
        if (opt.pooling == PoolingMode::kWeighted) {
            d_norm = nk::matmul_nt(x, cg.d_query_repr);  // N_q x C
            if (opt.learn_phi) {
                add_concat_grad(cache.query_video[q], nk::matmul(qo.normalized_tcam, cg.d_query_repr));
            }
        } else if (opt.learn_phi) {
            Matrix d_x(n, x.cols());
            const double inv_n = 1.0 / static_cast<double>(n);
            for (std::size_t c = 0; c < classes; ++c) {
                const auto g = cg.d_query_repr.row(c);
                for (std::size_t i = 0; i < n; ++i) {
                    auto r = d_x.row(i);
                    for (std::size_t j = 0; j < g.size(); ++j) {
                        r[j] += g[j] * inv_n;
                    }
                }
            }
            add_concat_grad(cache.query_video[q], d_x);
        }
        if (d_norm.empty()) {
            continue;
        }
        const Matrix d_raw = tcam::normalize_tcam_backward(qo.normalized_tcam, d_norm);
        const double inv_k = 1.0 / static_cast<double>(shots);
        for (std::size_t c = 0; c < classes; ++c) {
            for (std::size_t k = 0; k < shots; ++k) {
                const std::size_t off = cache.attention_offset[(q * classes + c) * shots + k];
                for (std::size_t i = 0; i < n; ++i) {
                    d_attention[off + i] += d_raw(i, c) * inv_k;
                }
            }
        }
    }

    // Prototype = temporal mean of the concatenated sample embedding.
    if (opt.learn_phi) {
        for (std::size_t c = 0; c < classes; ++c) {
            for (std::size_t k = 0; k < shots; ++k) {
                const std::size_t v = cache.sample_video[c][k];
                const std::size_t n = cache.video_length[v];
                Matrix d_x(n, 2 * half);
                const double inv_n = 1.0 / static_cast<double>(n);
                for (std::size_t i = 0; i < n; ++i) {
                    auto r = d_x.row(i);
                    for (std::size_t j = 0; j < r.size(); ++j) {
                        r[j] = d_prototypes[c][k][j] * inv_n;
                    }
                }
                add_concat_grad(v, d_x);
            }
        }
    }

    // Attention -> similarity vectors.
    const std::size_t n_channels = cache.channels.size();
    Matrix d_channels(cache.attention_rows, n_channels);
    if (opt.learn_psi) {
        d_channels = tcam::generate_attention_backward(model.generator, cache.generator, d_attention);
    } else {
        const double inv = 1.0 / static_cast<double>(active_channels(cache.channels));
        for (std::size_t r = 0; r < cache.attention_rows; ++r) {
            for (std::size_t ch = 0; ch < n_channels; ++ch) {
                d_channels(r, ch) = d_attention[r] * inv;
            }
        }
    }
    if (!opt.learn_phi) {
        return;
    }

    // Similarity vectors -> embeddings.
    for (std::size_t q = 0; q < n_queries; ++q) {
        const std::size_t qv = cache.query_video[q];
        const std::size_t nq = cache.video_length[qv];
        for (std::size_t c = 0; c < classes; ++c) {
            for (std::size_t k = 0; k < shots; ++k) {
                const std::size_t block = (q * classes + c) * shots + k;
                const std::size_t off = cache.attention_offset[block];
                const std::size_t sv = cache.sample_video[c][k];
                const std::size_t nv = cache.video_length[sv];
                for (std::size_t ch = 0; ch < n_channels; ++ch) {
                    const auto& spec = cache.channels[ch];
                    if (!spec.active) {
                        continue;
                    }
                    const std::size_t si = dataio::index_of(spec.stream);
                    std::vector<double> upstream(nq);
                    for (std::size_t i = 0; i < nq; ++i) {
                        upstream[i] = d_channels(off + i, ch);
                    }
                    const Matrix qx = slice_rows(cache.embedding[si], cache.video_offset[qv], nq);
                    const Matrix vx = slice_rows(cache.embedding[si], cache.video_offset[sv], nv);
                    Matrix dq(nq, half);
                    Matrix dv(nv, half);
                    tsm::similarity_backward(qx, vx, cache.pooled[block][ch], upstream, dq, dv);
                    add_rows(d_embedding[si], cache.video_offset[qv], dq);
                    add_rows(d_embedding[si], cache.video_offset[sv], dv);
                }
            }
        }
    }

    for (std::size_t si = 0; si < 2; ++si) {
        encoder::encode_backward(model.encoder, cache.encoder[si], d_embedding[si], false);
    }
}

void update_running_stats(Model& model, const EpisodeForward& forward) {
    if (model.options.learn_psi) {
        nk::batchnorm_update_running(model.generator.bn, forward.cache.generator.bn);
    }
}

}  // namespace fsloc::trainer
