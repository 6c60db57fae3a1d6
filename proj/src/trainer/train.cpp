// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsloc/trainer/train.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "fsloc/errors.hpp"
#include "fsloc/numkit/adam.hpp"
#include "fsloc/trainer/checkpoint.hpp"

namespace fsloc::trainer {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

long long to_int(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    long long out = 0;
    try {
        out = std::stoll(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) {
        throw ValidationError("config: '" + key + "' expects an integer, got '" + v + "'");
    }
    return out;
}

double to_real(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) {
        throw ValidationError("config: '" + key + "' expects a number, got '" + v + "'");
    }
    return out;
}

bool to_flag(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true") {
        return true;
    }
    if (v == "0" || v == "false") {
        return false;
    }
    throw ValidationError("config: '" + key + "' expects true/false, got '" + v + "'");
}

}  // namespace

void TrainConfig::validate() const {
    if (episodes < 1) {
        throw ValidationError("train: episodes must be positive");
    }
    episode.validate();
    if (!(learning_rate > 0.0)) {
        throw ValidationError("train: learning rate must be positive");
    }
    if (!(lr_decay > 0.0)) {
        throw ValidationError("train: lr_decay must be positive");
    }
    if (lr_decay_episode < 0) {
        throw ValidationError("train: lr_decay_episode must be non-negative");
    }
    if (!(weight_decay >= 0.0)) {
        throw ValidationError("train: weight decay must be non-negative");
    }
    if (checkpoint_every < 0) {
        throw ValidationError("train: checkpoint_every must be non-negative");
    }
    model.validate();
}

double TrainConfig::learning_rate_at(int e) const {
    return e > lr_decay_episode ? learning_rate * lr_decay : learning_rate;
}

ConfigEntries parse_config_text(const std::string& text) {
    ConfigEntries out;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.resize(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config line " + std::to_string(number) + ": expected key=value, got '" + line +
                                  "'");
        }
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

std::vector<std::string> config_keys() {
    return {"episodes",     "ways",      "shots",     "queries_per_class", "lr",      "lr_decay",
            "lr_decay_episode", "weight_decay", "dropout", "seed",          "learn_phi", "learn_psi",
            "metrics",      "pooling",   "checkpoint_every"};
}

void apply_config(TrainConfig& cfg, const ConfigEntries& entries) {
    for (const auto& [key, value] : entries) {
        if (key == "episodes") {
            cfg.episodes = static_cast<int>(to_int(key, value));
        } else if (key == "ways") {
            cfg.episode.ways = static_cast<int>(to_int(key, value));
        } else if (key == "shots") {
            cfg.episode.shots = static_cast<int>(to_int(key, value));
        } else if (key == "queries_per_class") {
            cfg.episode.queries_per_class = static_cast<int>(to_int(key, value));
        } else if (key == "lr") {
            cfg.learning_rate = to_real(key, value);
        } else if (key == "lr_decay") {
            cfg.lr_decay = to_real(key, value);
        } else if (key == "lr_decay_episode") {
            cfg.lr_decay_episode = static_cast<int>(to_int(key, value));
        } else if (key == "weight_decay") {
            cfg.weight_decay = to_real(key, value);
        } else if (key == "dropout") {
            cfg.model.dropout = to_real(key, value);
        } else if (key == "seed") {
            const auto s = to_int(key, value);
            if (s < 0) {
                throw ValidationError("config: seed must be non-negative");
            }
            cfg.seed = static_cast<std::uint64_t>(s);
        } else if (key == "learn_phi") {
            cfg.model.learn_phi = to_flag(key, value);
        } else if (key == "learn_psi") {
            cfg.model.learn_psi = to_flag(key, value);
        } else if (key == "metrics") {
            cfg.model.metrics = parse_metrics(value);
        } else if (key == "pooling") {
            cfg.model.pooling = parse_pooling(value);
        } else if (key == "checkpoint_every") {
            cfg.checkpoint_every = static_cast<int>(to_int(key, value));
        } else {
            throw ValidationError("config: unknown key '" + key + "'");
        }
    }
}

std::string config_to_text(const TrainConfig& cfg) {
    std::ostringstream o;
    o << "episodes=" << cfg.episodes << "\n"
      << "ways=" << cfg.episode.ways << "\n"
      << "shots=" << cfg.episode.shots << "\n"
      << "queries_per_class=" << cfg.episode.queries_per_class << "\n"
      << "lr=" << fmt(cfg.learning_rate) << "\n"
      << "lr_decay=" << fmt(cfg.lr_decay) << "\n"
      << "lr_decay_episode=" << cfg.lr_decay_episode << "\n"
      << "weight_decay=" << fmt(cfg.weight_decay) << "\n"
      << "dropout=" << fmt(cfg.model.dropout) << "\n"
      << "seed=" << cfg.seed << "\n"
      << "learn_phi=" << (cfg.model.learn_phi ? "true" : "false") << "\n"
      << "learn_psi=" << (cfg.model.learn_psi ? "true" : "false") << "\n"
      << "metrics=" << metrics_to_string(cfg.model.metrics) << "\n"
      << "pooling=" << to_string(cfg.model.pooling) << "\n"
      << "checkpoint_every=" << cfg.checkpoint_every << "\n";
    return o.str();
}

std::string format_train_log(const std::vector<TrainLogRow>& rows) {
    std::string out = "episode,loss,lr,top1\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.6f\n", r.episode, r.loss, r.learning_rate, r.top1);
        out += buf;
    }
    return out;
}

numkit::RngStream episode_stream(std::uint64_t seed, int episode) {
    return numkit::RngStream(seed).split("episode").split(static_cast<std::uint64_t>(episode));
}

TrainResult train(const dataio::DatasetManifest& manifest, const dataio::FeatureStore& store,
                  const TrainConfig& cfg, const TrainOutputs& outputs) {
    cfg.validate();
    if (manifest.train_classes.empty()) {
        throw ValidationError("train: manifest has no training classes");
    }
    if (outputs.directory) {
        std::filesystem::create_directories(*outputs.directory);
    }

    numkit::retain_large_blocks();
    TrainResult result;
    result.model = init_model(cfg.model, numkit::RngStream(cfg.seed).split("init").next_u64());
    Model& model = result.model;
    numkit::AdamConfig adam;
    adam.learning_rate = cfg.learning_rate;
    adam.weight_decay = cfg.weight_decay;
    adam.validate();

    auto meta_for = [&](int e) {
        CheckpointMeta meta = parse_config_text(config_to_text(cfg));
        meta["train.episode"] = std::to_string(e);
        return meta;
    };

    for (int e = 1; e <= cfg.episodes; ++e) {
        const auto stream = episode_stream(cfg.seed, e);
        numkit::RngStream sampler = stream.split("sample");
        const auto episode = episodes::sample_train_episode(manifest, cfg.episode, sampler);
        const auto fwd = forward_episode(model, episode, store, true, stream.split("dropout"));
        if (!std::isfinite(fwd.loss)) {
            throw NumericError("train: non-finite loss at episode " + std::to_string(e) + " (seed " +
                               std::to_string(cfg.seed) + "; reproduce with episodes=" + std::to_string(e) + ")");
        }
        auto params = model.trainable();
        if (!params.empty()) {
            backward_episode(model, fwd);
            update_running_stats(model, fwd);
            adam.learning_rate = cfg.learning_rate_at(e);
            numkit::adam_step(params, adam);
        }

        TrainLogRow row;
        row.episode = e;
        row.loss = fwd.loss;
        row.learning_rate = cfg.learning_rate_at(e);
        std::size_t hits = 0;
        for (std::size_t q = 0; q < fwd.queries.size(); ++q) {
            const auto& probs = fwd.queries[q].scores.probs;
            std::size_t best = 0;
            for (std::size_t c = 1; c < probs.size(); ++c) {
                if (probs[c] > probs[best]) {
                    best = c;
                }
            }
            hits += episode.queries[q].labels[best] > 0.0 ? 1 : 0;
        }
        row.top1 = static_cast<double>(hits) / static_cast<double>(fwd.queries.size());
        result.log.push_back(row);
        if (outputs.on_episode) {
            outputs.on_episode(row);
        }
        if (outputs.directory && cfg.checkpoint_every > 0 && e % cfg.checkpoint_every == 0) {
            save_checkpoint(*outputs.directory / ("checkpoint_" + std::to_string(e) + ".fslp"), model, meta_for(e));
        }
    }

    if (outputs.directory) {
        save_checkpoint(*outputs.directory / "model.fslp", model, meta_for(cfg.episodes));
        dataio::write_text_file(*outputs.directory / "train_log.csv", format_train_log(result.log));
    }
    return result;
}

}  // namespace fsloc::trainer
