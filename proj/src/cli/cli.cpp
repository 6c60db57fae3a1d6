// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsloc/cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <cmath>
#include <map>
#include <memory>
#include <sstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fsloc/cli/svg.hpp"
#include "fsloc/dataio/io.hpp"
#include "fsloc/dataio/synthetic.hpp"
#include "fsloc/errors.hpp"
#include "fsloc/eval/protocol.hpp"
#include "fsloc/trainer/checkpoint.hpp"
#include "fsloc/trainer/gradcheck_suite.hpp"
#include "fsloc/trainer/train.hpp"

namespace fsloc::cli {

namespace fs = std::filesystem;

namespace {

std::uint64_t default_seed() {
    const char* env = std::getenv("FSL_SEED");
    if (env == nullptr || *env == '\0') {
        return 0;
    }
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') {
        throw ValidationError(std::string("FSL_SEED must be a non-negative integer, got '") + env + "'");
    }
    return v;
}

struct LoadedData {
    explicit LoadedData(const std::string& manifest_path)
        : manifest(dataio::load_manifest(manifest_path)),
          store(dataio::feature_directory(manifest, manifest_path)) {}

    dataio::DatasetManifest manifest;
    dataio::FeatureStore store;
};

std::unique_ptr<LoadedData> load_data(const std::string& manifest_path) {
    return std::make_unique<LoadedData>(manifest_path);
}

// Options shared by eval and localize for choosing the model.
struct ModelSource {
    std::string checkpoint;
    bool no_learn = false;
    std::string metrics = "cos,dot";
    std::string pooling = "weighted";

    void add(CLI::App& app) {
        app.add_option("--checkpoint", checkpoint, "FSLP checkpoint written by train");
        app.add_flag("--no-learn", no_learn, "use raw features and the mean-similarity attention");
        app.add_option("--metrics", metrics, "no-learn similarity metrics (cos,dot,euclid)")->capture_default_str();
        app.add_option("--pooling", pooling, "no-learn pooling (weighted|average)")->capture_default_str();
    }

    trainer::Model resolve() const {
        if (no_learn == !checkpoint.empty()) {
            throw ValidationError("give exactly one of --checkpoint or --no-learn");
        }
        if (no_learn) {
            return trainer::no_learn_model(trainer::parse_metrics(metrics), trainer::parse_pooling(pooling));
        }
        return trainer::load_checkpoint(checkpoint).model;
    }

    std::string describe() const { return no_learn ? "no-learn/" + metrics + "/" + pooling : checkpoint; }
};

struct ThresholdOptions {
    std::string kind = "midrange";
    double delta = 0.0;
    bool multiply = false;

    void add(CLI::App& app) {
        app.add_option("--threshold", kind, "midrange|length|fixed")->capture_default_str();
        app.add_option("--delta", delta, "threshold for --threshold fixed")->capture_default_str();
        app.add_flag("--multiply-class-score", multiply, "scale detection scores by the class probability");
    }

    locclass::ThresholdPolicy policy() const {
        locclass::ThresholdPolicy p;
        p.kind = locclass::parse_threshold_kind(kind);
        p.fixed = delta;
        return p;
    }
};

bool all_have_fps(const dataio::DatasetManifest& m, const std::vector<dataio::PredictionRecord>& records) {
    return std::all_of(records.begin(), records.end(), [&](const dataio::PredictionRecord& r) {
        const auto* v = m.find_video(r.video_id);
        return v != nullptr && v->fps.has_value();
    });
}

/// Snippet-unit records -> file records, in seconds when every video has an fps.
dataio::TimeUnit to_output_units(const dataio::DatasetManifest& m, std::vector<dataio::PredictionRecord>& records) {
    if (records.empty() || !all_have_fps(m, records)) {
        return dataio::TimeUnit::kSnippets;
    }
    for (auto& r : records) {
        const double seconds_per_snippet = dataio::kFramesPerSnippet / *m.find_video(r.video_id)->fps;
        r.start *= seconds_per_snippet;
        r.end *= seconds_per_snippet;
    }
    return dataio::TimeUnit::kSeconds;
}

void echo(std::ostream& out, const std::string& key, const std::string& value) {
    out << "# " << key << "=" << value << "\n";
}

std::string real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------

struct SynthCommand {
    std::string spec_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("synth", "generate a synthetic feature dataset");
        c->add_option("--spec", spec_path, "JSON spec (defaults used for missing keys)");
        c->add_option("--out", out_dir, "output directory")->required();
        c->add_option("--seed", seed, "override the spec seed");
    }

    int run(std::ostream& out, std::ostream& err) {
        dataio::SyntheticSpec spec;
        if (!spec_path.empty()) {
            spec = dataio::parse_synthetic_spec(dataio::read_text_file(spec_path));
        } else {
            spec.seed = default_seed();
        }
        if (seed) {
            spec.seed = *seed;
        }
        spec.validate();
        out << "# synth effective spec\n" << dataio::synthetic_spec_to_json(spec) << "\n";
        const auto data = dataio::gen_synthetic(spec);
        dataio::write_synthetic(out_dir, data);
        err << "wrote " << data.manifest.videos.size() << " videos to " << out_dir << "\n";
        out << "manifest=" << (fs::path(out_dir) / "manifest.json").string() << "\n";
        return kExitOk;
    }
};

struct TrainCommand {
    std::string manifest;
    std::string config;
    std::string out_dir = "train_out";
    std::map<std::string, std::string> flags;
    std::map<std::string, CLI::Option*> options;
    int progress_every = 100;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("train", "episodic training");
        c->add_option("--manifest", manifest, "dataset manifest")->required();
        c->add_option("--config", config, "key=value config file; flags override it");
        c->add_option("--out", out_dir, "output directory for checkpoints and the log")->capture_default_str();
        c->add_option("--progress-every", progress_every, "progress line interval (0: silent)");
        for (const auto& key : trainer::config_keys()) {
            options[key] = c->add_option("--" + key, flags[key], "config key " + key);
        }
    }

    int run(std::ostream& out, std::ostream& err) {
        trainer::TrainConfig cfg;
        cfg.seed = default_seed();
        if (!config.empty()) {
            trainer::apply_config(cfg, trainer::parse_config_text(dataio::read_text_file(config)));
        }
        trainer::ConfigEntries overrides;
        for (const auto& [key, opt] : options) {
            if (opt->count() > 0) {
                overrides[key] = flags[key];
            }
        }
        trainer::apply_config(cfg, overrides);
        cfg.validate();
        auto data = load_data(manifest);

        out << "# train effective config\n";
        echo(out, "manifest", manifest);
        echo(out, "out", out_dir);
        std::istringstream lines(trainer::config_to_text(cfg));
        for (std::string line; std::getline(lines, line);) {
            out << "# " << line << "\n";
        }
        fs::create_directories(out_dir);
        dataio::write_text_file(fs::path(out_dir) / "config.txt", trainer::config_to_text(cfg));

        trainer::TrainOutputs outputs;
        outputs.directory = fs::path(out_dir);
        double window = 0.0;
        int count = 0;
        outputs.on_episode = [&](const trainer::TrainLogRow& row) {
            window += row.loss;
            ++count;
            if (progress_every > 0 && row.episode % progress_every == 0) {
                char buf[128];
                std::snprintf(buf, sizeof buf, "episode %d  mean loss %.4f  lr %.3g\n", row.episode,
                              window / count, row.learning_rate);
                err << buf << std::flush;
                window = 0.0;
                count = 0;
            }
        };
        const auto result = trainer::train(data->manifest, data->store, cfg, outputs);
        out << "checkpoint=" << (fs::path(out_dir) / "model.fslp").string() << "\n";
        out << "log=" << (fs::path(out_dir) / "train_log.csv").string() << "\n";
        out << "final_loss=" << real(result.log.back().loss) << "\n";
        return kExitOk;
    }
};

struct EvalCommand {
    std::string manifest;
    ModelSource model;
    ThresholdOptions threshold;
    eval::ProtocolConfig protocol;
    std::optional<std::uint64_t> seed;
    std::string aggregation = "pooled";
    std::string out_dir;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("eval", "few-shot localization protocol");
        c->add_option("--manifest", manifest, "dataset manifest")->required();
        model.add(*c);
        threshold.add(*c);
        c->add_option("--ways", protocol.episode.ways, "classes per episode")->capture_default_str();
        c->add_option("--shots", protocol.episode.shots, "samples per class")->capture_default_str();
        c->add_option("--queries_per_class", protocol.episode.queries_per_class)->capture_default_str();
        c->add_option("--episodes", protocol.episodes, "episodes per repetition")->capture_default_str();
        c->add_option("--repetitions", protocol.repetitions, "repetitions (median reported)")->capture_default_str();
        c->add_option("--seed", seed, "protocol seed (default FSL_SEED or 0)");
        c->add_option("--aggregation", aggregation, "pooled|per_episode")->capture_default_str();
        c->add_option("--workers", protocol.workers, "parallel episode workers")->capture_default_str();
        c->add_option("--out", out_dir, "write metrics.csv, summary.txt and predictions.csv here");
    }

    int run(std::ostream& out, std::ostream& /*err*/) {
        protocol.seed = seed ? *seed : default_seed();
        protocol.aggregation = eval::parse_aggregation(aggregation);
        protocol.threshold = threshold.policy();
        protocol.multiply_class_score = threshold.multiply;
        protocol.validate();
        const auto m = model.resolve();
        auto data = load_data(manifest);

        out << "# eval effective config\n";
        echo(out, "manifest", manifest);
        echo(out, "model", model.describe());
        echo(out, "ways", std::to_string(protocol.episode.ways));
        echo(out, "shots", std::to_string(protocol.episode.shots));
        echo(out, "queries_per_class", std::to_string(protocol.episode.queries_per_class));
        echo(out, "episodes", std::to_string(protocol.episodes));
        echo(out, "repetitions", std::to_string(protocol.repetitions));
        echo(out, "seed", std::to_string(protocol.seed));
        echo(out, "threshold", threshold.kind);
        echo(out, "delta", real(threshold.delta));
        echo(out, "multiply_class_score", threshold.multiply ? "true" : "false");
        echo(out, "aggregation", aggregation);
        echo(out, "workers", std::to_string(protocol.workers));

        std::vector<dataio::PredictionRecord> predictions;
        const auto report = eval::run_protocol(data->manifest, data->store, m, protocol, &predictions);
        out << eval::report_summary(report);
        if (!out_dir.empty()) {
            fs::create_directories(out_dir);
            dataio::write_text_file(fs::path(out_dir) / "metrics.csv", eval::report_to_csv(report));
            dataio::write_text_file(fs::path(out_dir) / "summary.txt", eval::report_summary(report));
            const auto unit = to_output_units(data->manifest, predictions);
            dataio::write_predictions(fs::path(out_dir) / "predictions.csv", predictions, data->manifest.class_ids(),
                                      unit);
        }
        return kExitOk;
    }
};

struct LocalizeCommand {
    std::string manifest;
    ModelSource model;
    ThresholdOptions threshold;
    std::string video;
    std::vector<std::string> samples;
    int ways = 5;
    int shots = 1;
    std::optional<std::uint64_t> seed;
    std::string out_csv;
    std::string out_svg;
    std::string tcam_csv;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("localize", "localize actions in one query video");
        c->add_option("--manifest", manifest, "dataset manifest")->required();
        model.add(*c);
        threshold.add(*c);
        c->add_option("--video", video, "query video id")->required();
        c->add_option("--sample", samples, "CLASS=VID[,VID...] (repeatable); picked by seed when absent");
        c->add_option("--ways", ways, "classes when the sample set is picked automatically")->capture_default_str();
        c->add_option("--shots", shots, "shots when the sample set is picked automatically")->capture_default_str();
        c->add_option("--seed", seed, "sample-set seed (default FSL_SEED or 0)");
        c->add_option("--out-csv", out_csv, "prediction CSV");
        c->add_option("--out-svg", out_svg, "attention plot");
        c->add_option("--tcam-csv", tcam_csv, "raw and normalized TCAM values");
    }

    episodes::Episode parse_samples(const dataio::DatasetManifest& m) const {
        episodes::Episode ep;
        for (const auto& spec : samples) {
            const auto eq = spec.find('=');
            if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
                throw ValidationError("--sample expects CLASS=VID[,VID...], got '" + spec + "'");
            }
            dataio::ClassId cls = 0;
            try {
                cls = static_cast<dataio::ClassId>(std::stoi(spec.substr(0, eq)));
            } catch (const std::exception&) {
                throw ValidationError("--sample: bad class id in '" + spec + "'");
            }
            if (m.find_class(cls) == nullptr) {
                throw ValidationError("--sample: unknown class " + std::to_string(cls));
            }
            std::vector<episodes::SampleEntry> entries;
            std::stringstream ids(spec.substr(eq + 1));
            for (std::string id; std::getline(ids, id, ',');) {
                if (m.find_video(id) == nullptr) {
                    throw ValidationError("--sample: unknown video '" + id + "'");
                }
                entries.push_back({cls, id});
            }
            ep.classes.push_back(cls);
            ep.sample_set.push_back(std::move(entries));
        }
        for (const auto& per_class : ep.sample_set) {
            if (per_class.size() != ep.sample_set.front().size()) {
                throw ValidationError("--sample: every class needs the same number of videos");
            }
        }
        return ep;
    }

    episodes::Episode pick_samples(const dataio::DatasetManifest& m, const dataio::VideoRecord& query,
                                   std::uint64_t s) const {
        if (ways < 1 || shots < 1) {
            throw ValidationError("--ways and --shots must be positive");
        }
        std::map<dataio::ClassId, std::vector<std::string>> trimmed;
        for (const auto& v : m.videos) {
            if (v.trimmed && v.video_id != query.video_id) {
                trimmed[v.labels.front()].push_back(v.video_id);
            }
        }
        std::vector<dataio::ClassId> chosen;
        for (const auto c : query.labels) {
            if (trimmed[c].size() >= static_cast<std::size_t>(shots)) {
                chosen.push_back(c);
            }
        }
        std::vector<dataio::ClassId> others;
        for (const auto& [c, vids] : trimmed) {
            if (vids.size() >= static_cast<std::size_t>(shots) &&
                std::find(chosen.begin(), chosen.end(), c) == chosen.end()) {
                others.push_back(c);
            }
        }
        numkit::RngStream rng = numkit::RngStream(s).split("localize");
        rng.shuffle(others);
        for (std::size_t i = 0; i < others.size() && chosen.size() < static_cast<std::size_t>(ways); ++i) {
            chosen.push_back(others[i]);
        }
        if (chosen.size() < static_cast<std::size_t>(ways)) {
            throw EpisodeError("localize: only " + std::to_string(chosen.size()) + " classes have " +
                               std::to_string(shots) + " trimmed videos, need " + std::to_string(ways));
        }
        chosen.resize(static_cast<std::size_t>(ways));
        std::sort(chosen.begin(), chosen.end());
        episodes::Episode ep;
        for (const auto c : chosen) {
            auto& vids = trimmed[c];
            const auto idx = rng.sample_without_replacement(vids.size(), static_cast<std::size_t>(shots));
            std::vector<episodes::SampleEntry> entries;
            for (const auto i : idx) {
                entries.push_back({c, vids[i]});
            }
            ep.classes.push_back(c);
            ep.sample_set.push_back(std::move(entries));
        }
        return ep;
    }

    int run(std::ostream& out, std::ostream& /*err*/) {
        auto data = load_data(manifest);
        const auto& m = data->manifest;
        const auto* query = m.find_video(video);
        if (query == nullptr) {
            throw ValidationError("localize: video '" + video + "' is not in the manifest");
        }
        const std::uint64_t s = seed ? *seed : default_seed();
        const auto policy = threshold.policy();
        const auto mdl = model.resolve();
        auto episode = samples.empty() ? pick_samples(m, *query, s) : parse_samples(m);
        episodes::QueryEntry qe;
        qe.video_id = video;
        for (const auto c : episode.classes) {
            qe.labels.push_back(query->has_label(c) ? 1.0 : 0.0);
        }
        episode.queries.push_back(qe);

        out << "# localize effective config\n";
        echo(out, "manifest", manifest);
        echo(out, "model", model.describe());
        echo(out, "video", video);
        for (std::size_t c = 0; c < episode.ways(); ++c) {
            std::string ids;
            for (const auto& e : episode.sample_set[c]) {
                ids += (ids.empty() ? "" : ",") + e.video_id;
            }
            echo(out, "sample", std::to_string(episode.classes[c]) + "=" + ids);
        }
        echo(out, "seed", std::to_string(s));
        echo(out, "threshold", threshold.kind);
        echo(out, "delta", real(threshold.delta));
        echo(out, "multiply_class_score", threshold.multiply ? "true" : "false");

        const auto fwd = trainer::forward_episode(mdl, episode, data->store, false);
        const auto& qo = fwd.queries.front();
        const auto det = eval::detect_query(qo, episode, data->store, policy, threshold.multiply);

        std::vector<dataio::PredictionRecord> records;
        for (const auto& p : det.predictions) {
            records.push_back({video, episode.classes[p.class_index], static_cast<double>(p.start),
                               static_cast<double>(p.end + 1), p.score});
        }
        for (std::size_t c = 0; c < episode.ways(); ++c) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "class %d  prob %.6f%s\n", episode.classes[c], qo.scores.probs[c],
                          det.threshold_fell_back[c] ? "  (length threshold fell back to midrange)" : "");
            out << buf;
        }
        auto file_records = records;
        const auto unit = to_output_units(m, file_records);
        const std::string csv = dataio::format_predictions(file_records, m.class_ids(), unit);
        if (!out_csv.empty()) {
            dataio::write_text_file(out_csv, csv);
        } else {
            out << csv;
        }

        if (!tcam_csv.empty()) {
            std::string t = "snippet,class_id,raw,normalized\n";
            char buf[128];
            for (std::size_t i = 0; i < qo.raw_tcam.rows(); ++i) {
                for (std::size_t c = 0; c < episode.ways(); ++c) {
                    std::snprintf(buf, sizeof buf, "%zu,%d,%.9g,%.9g\n", i, episode.classes[c], qo.raw_tcam(i, c),
                                  qo.normalized_tcam(i, c));
                    t += buf;
                }
            }
            dataio::write_text_file(tcam_csv, t);
        }

        if (!out_svg.empty()) {
            LocalizationFigure fig;
            fig.title = "query " + video;
            fig.snippets = qo.raw_tcam.rows();
            if (query->fps) {
                fig.seconds_per_snippet = dataio::kFramesPerSnippet / *query->fps;
            }
            fig.has_ground_truth = !query->segments.empty();
            for (std::size_t c = 0; c < episode.ways(); ++c) {
                ClassTrack track;
                const auto* info = m.find_class(episode.classes[c]);
                track.label = info != nullptr && !info->name.empty() ? info->name
                                                                     : "class " + std::to_string(episode.classes[c]);
                track.attention = qo.raw_tcam.column(c);
                auto p = policy;
                if (p.kind == locclass::ThresholdKind::kLengthMatched) {
                    p.reference_length = eval::sample_reference_length(episode, c, data->store);
                }
                track.threshold = locclass::resolve_threshold(track.attention, p).delta;
                for (const auto& r : records) {
                    if (r.class_id == episode.classes[c]) {
                        track.predictions.push_back({r.start, r.end});
                    }
                }
                for (const auto& g : query->segments) {
                    if (g.class_id == episode.classes[c]) {
                        track.ground_truth.push_back({g.start, g.end});
                    }
                }
                fig.tracks.push_back(std::move(track));
            }
            dataio::write_text_file(out_svg, render_localization_svg(fig));
        }
        return kExitOk;
    }
};

struct GradcheckCommand {
    std::optional<std::uint64_t> seed;
    numkit::GradCheckOptions options;
    double tolerance = 1e-4;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("gradcheck", "finite-difference check of every backward pass");
        c->add_option("--seed", seed, "seed (default FSL_SEED or 0)");
        c->add_option("--samples", options.samples_per_tensor, "coordinates per tensor")->capture_default_str();
        c->add_option("--step", options.step, "central-difference step")->capture_default_str();
        c->add_option("--tolerance", tolerance, "maximum relative error")->capture_default_str();
    }

    int run(std::ostream& out, std::ostream& /*err*/) {
        options.seed = seed ? *seed : default_seed();
        echo(out, "seed", std::to_string(options.seed));
        echo(out, "samples", std::to_string(options.samples_per_tensor));
        echo(out, "step", real(options.step));
        echo(out, "tolerance", real(tolerance));
        const auto checks = trainer::run_gradcheck_suite(options.seed, options);
        bool ok = true;
        char buf[200];
        for (const auto& c : checks) {
            const bool pass = c.result.max_rel_error < tolerance;
            ok = ok && pass;
            std::snprintf(buf, sizeof buf, "%-10s max_rel_error %.3e  checked %zu  skipped_nonsmooth %zu  %s\n",
                          c.module.c_str(), c.result.max_rel_error, c.result.checked, c.result.skipped_nonsmooth,
                          pass ? "ok" : "FAIL");
            out << buf;
        }
        return ok ? kExitOk : kExitRuntime;
    }
};

struct InspectCommand {
    std::string path;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("inspect", "describe a manifest, feature file, checkpoint or CSV");
        c->add_option("path", path, "file to inspect")->required();
    }

    int run(std::ostream& out, std::ostream& /*err*/) {
        if (!fs::exists(path)) {
            throw ValidationError("inspect: '" + path + "' does not exist");
        }
        std::string head(4, '\0');
        {
            std::ifstream in(path, std::ios::binary);
            in.read(head.data(), 4);
            head.resize(static_cast<std::size_t>(in.gcount()));
        }
        if (head == "FSLP") {
            const auto ck = trainer::load_checkpoint(path);
            out << "checkpoint " << path << "\n";
            for (const auto& [k, v] : ck.meta) {
                out << "  " << k << " = " << v << "\n";
            }
            for (const auto* t : ck.model.trainable()) {
                double sq = 0.0;
                for (const double x : t->value.values()) {
                    sq += x * x;
                }
                char buf[160];
                std::snprintf(buf, sizeof buf, "  tensor %-24s %s  l2 %.6g\n", t->name.c_str(),
                              t->value.shape_str().c_str(), std::sqrt(sq));
                out << buf;
            }
            return kExitOk;
        }
        if (head == "FSL1") {
            const auto id = fs::path(path).stem().string();
            const auto f = dataio::load_features(path, id);
            out << "features " << id << ": " << f.snippets() << " snippets x " << dataio::kFeatureDim
                << " per stream\n";
            for (const auto s : dataio::kStreams) {
                double sum = 0.0;
                for (const double x : f.stream(s).values()) {
                    sum += x;
                }
                char buf[96];
                std::snprintf(buf, sizeof buf, "  %s mean %.6g\n", std::string(dataio::to_string(s)).c_str(),
                              sum / static_cast<double>(f.stream(s).size()));
                out << buf;
            }
            return kExitOk;
        }
        const auto ext = fs::path(path).extension().string();
        if (ext == ".json") {
            const auto m = dataio::load_manifest(path);
            std::size_t trimmed = 0;
            std::size_t segments = 0;
            for (const auto& v : m.videos) {
                trimmed += v.trimmed ? 1 : 0;
                segments += v.segments.size();
            }
            out << "manifest " << path << "\n  classes " << m.classes.size() << " (train " << m.train_classes.size()
                << ", test " << m.test_classes.size() << ")\n  videos " << m.videos.size() << " (trimmed " << trimmed
                << ", untrimmed " << m.videos.size() - trimmed << ")\n  annotated segments " << segments << "\n";
            return kExitOk;
        }
        if (ext == ".csv") {
            const auto text = dataio::read_text_file(path);
            if (text.rfind("video_id,", 0) == 0) {
                const auto p = dataio::parse_predictions(text);
                std::set<std::string> videos;
                for (const auto& r : p.records) {
                    videos.insert(r.video_id);
                }
                out << "predictions " << path << ": " << p.records.size() << " rows over " << videos.size()
                    << " videos ("
                    << (p.unit == dataio::TimeUnit::kSeconds ? "seconds" : "snippets") << ")\n";
                return kExitOk;
            }
            const auto lines = std::count(text.begin(), text.end(), '\n');
            out << "csv " << path << ": " << lines << " lines, header '" << text.substr(0, text.find('\n')) << "'\n";
            return kExitOk;
        }
        throw ValidationError("inspect: cannot tell what '" + path + "' is");
    }
};

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"fsloc: few-shot temporal action localization over snippet features", "fsloc"};
    app.require_subcommand(1);
    SynthCommand synth;
    TrainCommand train;
    EvalCommand eval_cmd;
    LocalizeCommand localize;
    GradcheckCommand gradcheck;
    InspectCommand inspect;
    synth.add(app);
    train.add(app);
    eval_cmd.add(app);
    localize.add(app);
    gradcheck.add(app);
    inspect.add(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return kExitValidation;
    }

    try {
        const auto* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "synth") {
            return synth.run(out, err);
        }
        if (name == "train") {
            return train.run(out, err);
        }
        if (name == "eval") {
            return eval_cmd.run(out, err);
        }
        if (name == "localize") {
            return localize.run(out, err);
        }
        if (name == "gradcheck") {
            return gradcheck.run(out, err);
        }
        return inspect.run(out, err);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace fsloc::cli
