// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsloc/eval/protocol.hpp"

#include <algorithm>
#include <exception>
#include <map>
#include <thread>

#include "fsloc/errors.hpp"

namespace fsloc::eval {

std::string_view to_string(Aggregation a) { return a == Aggregation::kPooled ? "pooled" : "per_episode"; }

Aggregation parse_aggregation(std::string_view name) {
    if (name == "pooled") {
        return Aggregation::kPooled;
    }
    if (name == "per_episode" || name == "per-episode") {
        return Aggregation::kPerEpisode;
    }
    throw ValidationError("unknown aggregation '" + std::string(name) + "'");
}

void ProtocolConfig::validate() const {
    episode.validate();
    if (episodes < 1) {
        throw ProtocolError("protocol: at least one episode per repetition is required");
    }
    if (repetitions < 1) {
        throw ProtocolError("protocol: at least one repetition is required");
    }
    if (workers < 1) {
        throw ValidationError("protocol: workers must be positive");
    }
}

double sample_reference_length(const episodes::Episode& episode, std::size_t class_index,
                               const dataio::FeatureStore& store) {
    const auto& shots = episode.sample_set.at(class_index);
    double total = 0.0;
    for (const auto& s : shots) {
        total += static_cast<double>(store.get(s.video_id).snippets());
    }
    return total / static_cast<double>(shots.size());
}

QueryDetections detect_query(const trainer::QueryOutput& query, const episodes::Episode& episode,
                             const dataio::FeatureStore& store, const locclass::ThresholdPolicy& policy,
                             bool multiply_class_score) {
    QueryDetections out;
    for (std::size_t c = 0; c < episode.ways(); ++c) {
        const auto column = query.raw_tcam.column(c);
        locclass::ThresholdPolicy p = policy;
        if (p.kind == locclass::ThresholdKind::kLengthMatched) {
            p.reference_length = sample_reference_length(episode, c, store);
        }
        const auto th = locclass::resolve_threshold(column, p);
        out.threshold_fell_back.push_back(th.fell_back);
        for (auto pred : locclass::localize(column, th.delta, c)) {
            if (multiply_class_score) {
                pred.score *= query.scores.probs[c];
            }
            out.predictions.push_back(pred);
        }
    }
    return out;
}

double median(std::vector<double> values) {
    if (values.empty()) {
        throw ProtocolError("median of an empty set");
    }
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

namespace {

struct EpisodeResult {
    std::vector<ClassId> classes;
    std::vector<ScoreRow> score_rows;
    // Per episode class: detections and ground truth, instance = query index.
    std::vector<std::vector<Detection>> detections;
    std::vector<std::vector<GroundTruthSegment>> truths;
    std::vector<dataio::PredictionRecord> records;  // snippet units
};

EpisodeResult evaluate_episode(const dataio::DatasetManifest& manifest, const dataio::FeatureStore& store,
                               const trainer::Model& model, const ProtocolConfig& cfg, int repetition, int index) {
    auto rng = numkit::RngStream(cfg.seed)
                   .split("protocol")
                   .split(static_cast<std::uint64_t>(repetition))
                   .split(static_cast<std::uint64_t>(index));
    const auto episode = episodes::sample_test_episode(manifest, cfg.episode, rng);
    const auto fwd = trainer::forward_episode(model, episode, store, false);

    EpisodeResult r;
    r.classes = episode.classes;
    r.detections.resize(episode.ways());
    r.truths.resize(episode.ways());
    for (std::size_t q = 0; q < fwd.queries.size(); ++q) {
        const auto& qo = fwd.queries[q];
        r.score_rows.push_back({qo.scores.probs, episode.queries[q].labels});
        const auto det = detect_query(qo, episode, store, cfg.threshold, cfg.multiply_class_score);
        for (const auto& p : det.predictions) {
            r.detections[p.class_index].push_back(
                {q, {static_cast<double>(p.start), static_cast<double>(p.end + 1)}, p.score});
            r.records.push_back({qo.video_id, episode.classes[p.class_index], static_cast<double>(p.start),
                                 static_cast<double>(p.end + 1), p.score});
        }
        const auto* video = manifest.find_video(qo.video_id);
        for (std::size_t c = 0; c < episode.ways(); ++c) {
            for (const auto& seg : video->segments) {
                if (seg.class_id == episode.classes[c]) {
                    r.truths[c].push_back({q, {seg.start, seg.end}});
                }
            }
        }
    }
    return r;
}

std::vector<EpisodeResult> evaluate_repetition(const dataio::DatasetManifest& manifest,
                                               const dataio::FeatureStore& store, const trainer::Model& model,
                                               const ProtocolConfig& cfg, int repetition) {
    const auto n = static_cast<std::size_t>(cfg.episodes);
    std::vector<EpisodeResult> results(n);
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            results[i] = evaluate_episode(manifest, store, model, cfg, repetition, static_cast<int>(i));
        }
        return results;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) {
                    results[i] = evaluate_episode(manifest, store, model, cfg, repetition, static_cast<int>(i));
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return results;
}

struct RepetitionMetrics {
    std::map<int, double> map;  // percent -> mAP
    std::map<ClassId, std::map<int, double>> class_ap;
    std::size_t classes_without_gt = 0;
    double top1 = 0.0;
    double top3 = 0.0;
};

std::vector<int> all_thresholds() {
    auto grid = map_grid_percent();
    for (const int p : average_grid_percent()) {
        if (std::find(grid.begin(), grid.end(), p) == grid.end()) {
            grid.push_back(p);
        }
    }
    std::sort(grid.begin(), grid.end());
    return grid;
}

RepetitionMetrics reduce(const std::vector<EpisodeResult>& results, const ProtocolConfig& cfg, std::size_t top3_k) {
    RepetitionMetrics m;
    const auto thresholds = all_thresholds();

    std::vector<ScoreRow> rows;
    for (const auto& r : results) {
        rows.insert(rows.end(), r.score_rows.begin(), r.score_rows.end());
    }
    m.top1 = topk_accuracy(rows, 1);
    m.top3 = topk_accuracy(rows, top3_k);

    if (cfg.aggregation == Aggregation::kPooled) {
        // Instances are renumbered globally: episode e, query q -> offset(e) + q.
        std::map<ClassId, std::vector<Detection>> dets;
        std::map<ClassId, std::vector<GroundTruthSegment>> gts;
        std::size_t offset = 0;
        for (const auto& r : results) {
            for (std::size_t c = 0; c < r.classes.size(); ++c) {
                auto& d = dets[r.classes[c]];
                for (auto x : r.detections[c]) {
                    x.instance += offset;
                    d.push_back(x);
                }
                auto& g = gts[r.classes[c]];
                for (auto x : r.truths[c]) {
                    x.instance += offset;
                    g.push_back(x);
                }
            }
            offset += r.score_rows.size();
        }
        for (const int p : thresholds) {
            double sum = 0.0;
            std::size_t counted = 0;
            std::size_t missing = 0;
            for (const auto& [cls, d] : dets) {
                const auto ap = average_precision(d, gts[cls], percent_to_threshold(p));
                if (ap.no_ground_truth) {
                    ++missing;
                    continue;
                }
                m.class_ap[cls][p] = ap.ap;
                sum += ap.ap;
                ++counted;
            }
            m.map[p] = counted > 0 ? sum / static_cast<double>(counted) : 0.0;
            m.classes_without_gt = missing;
        }
        return m;
    }

    // Per episode: mAP over the episode's classes with ground truth, then the
    // mean over episodes. Per-class AP is the mean over the episodes that hold the class.
    std::map<ClassId, std::map<int, std::pair<double, std::size_t>>> class_sum;
    for (const int p : thresholds) {
        double total = 0.0;
        std::size_t episodes_counted = 0;
        std::size_t missing = 0;
        for (const auto& r : results) {
            double sum = 0.0;
            std::size_t counted = 0;
            for (std::size_t c = 0; c < r.classes.size(); ++c) {
                const auto ap = average_precision(r.detections[c], r.truths[c], percent_to_threshold(p));
                if (ap.no_ground_truth) {
                    ++missing;
                    continue;
                }
                auto& cs = class_sum[r.classes[c]][p];
                cs.first += ap.ap;
                ++cs.second;
                sum += ap.ap;
                ++counted;
            }
            if (counted > 0) {
                total += sum / static_cast<double>(counted);
                ++episodes_counted;
            }
        }
        m.map[p] = episodes_counted > 0 ? total / static_cast<double>(episodes_counted) : 0.0;
        m.classes_without_gt = missing;
    }
    for (const auto& [cls, per_t] : class_sum) {
        for (const auto& [p, s] : per_t) {
            m.class_ap[cls][p] = s.first / static_cast<double>(s.second);
        }
    }
    return m;
}

}  // namespace

MetricsReport run_protocol(const dataio::DatasetManifest& manifest, const dataio::FeatureStore& store,
                           const trainer::Model& model, const ProtocolConfig& cfg,
                           std::vector<dataio::PredictionRecord>* predictions) {
    cfg.validate();
    numkit::retain_large_blocks();
    if (manifest.test_classes.empty()) {
        throw ValidationError("protocol: manifest has no test classes");
    }
    const std::size_t top3_k = std::min<std::size_t>(3, static_cast<std::size_t>(cfg.episode.ways));

    std::vector<RepetitionMetrics> reps;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        const auto results = evaluate_repetition(manifest, store, model, cfg, rep);
        if (predictions != nullptr && rep == 0) {
            for (const auto& r : results) {
                predictions->insert(predictions->end(), r.records.begin(), r.records.end());
            }
        }
        reps.push_back(reduce(results, cfg, top3_k));
    }

    MetricsReport report;
    report.map_grid = map_grid_percent();
    report.average_grid = average_grid_percent();
    report.top3_k = top3_k;
    auto med = [&](auto&& get) {
        std::vector<double> v;
        for (const auto& r : reps) {
            v.push_back(get(r));
        }
        return median(std::move(v));
    };
    for (const int p : report.map_grid) {
        report.map.push_back(med([p](const RepetitionMetrics& r) { return r.map.at(p); }));
    }
    for (const int p : report.average_grid) {
        report.average_map_terms.push_back(med([p](const RepetitionMetrics& r) { return r.map.at(p); }));
    }
    for (const double v : report.average_map_terms) {
        report.average_map += v;
    }
    report.average_map /= static_cast<double>(report.average_map_terms.size());
    report.top1 = med([](const RepetitionMetrics& r) { return r.top1; });
    report.top3 = med([](const RepetitionMetrics& r) { return r.top3; });
    report.classes_without_gt = static_cast<std::size_t>(
        med([](const RepetitionMetrics& r) { return static_cast<double>(r.classes_without_gt); }));

    std::map<ClassId, bool> seen;
    for (const auto& r : reps) {
        for (const auto& [cls, _] : r.class_ap) {
            seen[cls] = true;
        }
    }
    for (const auto& [cls, _] : seen) {
        ClassAp ca;
        ca.class_id = cls;
        for (const int p : report.map_grid) {
            std::vector<double> v;
            for (const auto& r : reps) {
                const auto it = r.class_ap.find(cls);
                if (it != r.class_ap.end()) {
                    v.push_back(it->second.at(p));
                }
            }
            ca.ap.push_back(median(std::move(v)));
        }
        report.per_class.push_back(std::move(ca));
    }

    auto& meta = report.meta;
    meta.ways = cfg.episode.ways;
    meta.shots = cfg.episode.shots;
    meta.queries_per_class = cfg.episode.queries_per_class;
    meta.episodes = cfg.episodes;
    meta.repetitions = cfg.repetitions;
    meta.seed = cfg.seed;
    meta.threshold_policy = std::string(locclass::to_string(cfg.threshold.kind));
    meta.aggregation = std::string(to_string(cfg.aggregation));
    meta.multiply_class_score = cfg.multiply_class_score;
    meta.model = std::string(model.options.learn_phi ? "phi" : "no-phi") + "+" +
                 (model.options.learn_psi ? "psi" : "no-psi") + "/" + trainer::metrics_to_string(model.options.metrics) +
                 "/" + std::string(trainer::to_string(model.options.pooling));
    return report;
}

}  // namespace fsloc::eval
