// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsloc/episodes/episode.hpp"

#include <algorithm>
#include <set>

#include "fsloc/errors.hpp"

namespace fsloc::episodes {

void EpisodeConfig::validate() const {
    if (ways < 1 || shots < 1 || queries_per_class < 1) {
        throw ValidationError("episode config: ways, shots and queries_per_class must all be >= 1");
    }
}

Episode sample_episode(const dataio::DatasetManifest& manifest, dataio::Split split, const EpisodeConfig& cfg,
                       numkit::RngStream& rng) {
    cfg.validate();
    const auto& pool = manifest.split_classes(split);
    const char* split_name = split == dataio::Split::kTrain ? "train" : "test";
    const auto ways = static_cast<std::size_t>(cfg.ways);
    if (pool.size() < ways) {
        throw EpisodeError(std::string("episode: ") + std::to_string(cfg.ways) + "-way episode needs " +
                           std::to_string(cfg.ways) + " " + split_name + " classes, only " +
                           std::to_string(pool.size()) + " available");
    }

    Episode ep;
    for (const std::size_t i : rng.sample_without_replacement(pool.size(), ways)) {
        ep.classes.push_back(pool[i]);
    }

    for (const ClassId c : ep.classes) {
        std::vector<const dataio::VideoRecord*> trimmed;
        for (const auto& v : manifest.videos) {
            if (v.trimmed && v.has_label(c)) {
                trimmed.push_back(&v);
            }
        }
        if (trimmed.size() < static_cast<std::size_t>(cfg.shots)) {
            throw EpisodeError("episode: class " + std::to_string(c) + " has " + std::to_string(trimmed.size()) +
                               " trimmed videos, " + std::to_string(cfg.shots) + " shots requested");
        }
        std::vector<SampleEntry> shots;
        for (const std::size_t i : rng.sample_without_replacement(trimmed.size(), static_cast<std::size_t>(cfg.shots))) {
            shots.push_back({c, trimmed[i]->video_id});
        }
        ep.sample_set.push_back(std::move(shots));
    }

    std::set<std::string> taken;
    for (const auto& shots : ep.sample_set) {
        for (const auto& s : shots) {
            taken.insert(s.video_id);
        }
    }
    for (const ClassId c : ep.classes) {
        std::vector<const dataio::VideoRecord*> candidates;
        for (const auto& v : manifest.videos) {
            if (!v.trimmed && v.has_label(c) && !taken.contains(v.video_id)) {
                candidates.push_back(&v);
            }
        }
        const bool covered = std::any_of(ep.queries.begin(), ep.queries.end(), [&](const QueryEntry& q) {
            return manifest.find_video(q.video_id)->has_label(c);
        });
        if (candidates.empty() && !covered) {
            throw EpisodeError("episode: class " + std::to_string(c) + " has no untrimmed query video left");
        }
        const auto picks = rng.sample_without_replacement(candidates.size(),
                                                          static_cast<std::size_t>(cfg.queries_per_class));
        for (const std::size_t i : picks) {
            const auto* v = candidates[i];
            taken.insert(v->video_id);
            QueryEntry q{v->video_id, std::vector<double>(ways, 0.0)};
            for (std::size_t local = 0; local < ways; ++local) {
                if (v->has_label(ep.classes[local])) {
                    q.labels[local] = 1.0;
                }
            }
            ep.queries.push_back(std::move(q));
        }
    }
    return ep;
}

}  // namespace fsloc::episodes
