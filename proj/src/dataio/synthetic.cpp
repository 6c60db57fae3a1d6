// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsloc/dataio/synthetic.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fsloc/dataio/io.hpp"
#include "fsloc/errors.hpp"
#include "fsloc/numkit/rng.hpp"

namespace fsloc::dataio {

namespace {

using numkit::RngStream;

// Orthonormal basis (rows) of a random rank-dimensional subspace.
Matrix random_basis(int rank, RngStream& rng) {
    Matrix basis(static_cast<std::size_t>(rank), kFeatureDim);
    for (std::size_t r = 0; r < basis.rows(); ++r) {
        auto row = basis.row(r);
        for (double& x : row) {
            x = rng.normal();
        }
        // Two Gram-Schmidt passes for numerical orthogonality.
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t q = 0; q < r; ++q) {
                const auto prev = basis.row(q);
                double dot = 0.0;
                for (std::size_t k = 0; k < kFeatureDim; ++k) {
                    dot += row[k] * prev[k];
                }
                for (std::size_t k = 0; k < kFeatureDim; ++k) {
                    row[k] -= dot * prev[k];
                }
            }
        }
        double norm = 0.0;
        for (const double x : row) {
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (double& x : row) {
            x /= norm;
        }
    }
    return basis;
}

// Unit vectors inside the span of basis, one per row.
Matrix random_directions(std::size_t count, const Matrix& basis, RngStream& rng) {
    Matrix out(count, kFeatureDim);
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<double> coeff(basis.rows());
        double norm = 0.0;
        for (double& c : coeff) {
            c = rng.normal();
            norm += c * c;
        }
        norm = std::sqrt(norm);
        auto row = out.row(i);
        for (std::size_t r = 0; r < basis.rows(); ++r) {
            const auto b = basis.row(r);
            const double w = coeff[r] / norm;
            for (std::size_t k = 0; k < kFeatureDim; ++k) {
                row[k] += w * b[k];
            }
        }
    }
    return out;
}

struct StreamModel {
    Matrix prototypes;  // classes x 1024
    Matrix background;  // modes x 1024
};

void fill_snippet(std::span<double> out, std::span<const double> center, double separation, double noise,
                  RngStream& rng) {
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = separation * center[k] + noise * rng.normal();
    }
}

std::string video_name(const char* kind, int cls, int index) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "v%03d_%s%02d", cls, kind, index);
    return buf;
}

}  // namespace

void SyntheticSpec::validate() const {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) {
            throw SpecError("synthetic spec: " + msg);
        }
    };
    require(classes >= 1, "classes must be >= 1");
    require(train_classes >= 0 && train_classes <= classes, "train_classes must lie in [0, classes]");
    require(trimmed_per_class >= 1 && untrimmed_per_class >= 1, "videos per class must be >= 1");
    require(min_snippets >= 1 && min_snippets <= max_snippets, "snippet range invalid");
    require(min_instances >= 1 && min_instances <= max_instances, "instance range invalid");
    require(min_action_length >= 1 && min_action_length <= max_action_length, "action length range invalid");
    require(separation > 0.0, "separation must be > 0");
    require(noise >= 0.0, "noise must be >= 0");
    require(signal_rank >= 1 && signal_rank <= static_cast<int>(kFeatureDim), "signal_rank must lie in [1, 1024]");
    require(background_modes >= 1, "background_modes must be >= 1");
    require(background_rank >= 0 && signal_rank + background_rank <= static_cast<int>(kFeatureDim),
            "background_rank must be >= 0 and fit beside signal_rank in 1024 dimensions");
    require(fps > 0.0, "fps must be > 0");
    require(min_trimmed_snippets == 0 || (min_trimmed_snippets >= 1 && max_trimmed_snippets >= min_trimmed_snippets),
            "trimmed snippet range must be empty (0) or satisfy 1 <= min <= max");
    const int worst = max_instances * max_action_length + (max_instances - 1);
    require(worst <= min_snippets, "impossible packing: " + std::to_string(max_instances) + " actions of length " +
                                       std::to_string(max_action_length) + " need " + std::to_string(worst) +
                                       " snippets but videos may have only " + std::to_string(min_snippets));
}

SyntheticSpec parse_synthetic_spec(const std::string& json_text) {
    SyntheticSpec s;
    try {
        const auto j = nlohmann::json::parse(json_text);
        s.classes = j.value("classes", s.classes);
        s.train_classes = j.value("train_classes", s.train_classes);
        s.trimmed_per_class = j.value("trimmed_per_class", s.trimmed_per_class);
        s.untrimmed_per_class = j.value("untrimmed_per_class", s.untrimmed_per_class);
        s.min_snippets = j.value("min_snippets", s.min_snippets);
        s.max_snippets = j.value("max_snippets", s.max_snippets);
        s.min_instances = j.value("min_instances", s.min_instances);
        s.max_instances = j.value("max_instances", s.max_instances);
        s.min_action_length = j.value("min_action_length", s.min_action_length);
        s.max_action_length = j.value("max_action_length", s.max_action_length);
        s.separation = j.value("separation", s.separation);
        s.noise = j.value("noise", s.noise);
        s.signal_rank = j.value("signal_rank", s.signal_rank);
        s.background_modes = j.value("background_modes", s.background_modes);
        s.background_rank = j.value("background_rank", s.background_rank);
        s.min_trimmed_snippets = j.value("min_trimmed_snippets", s.min_trimmed_snippets);
        s.max_trimmed_snippets = j.value("max_trimmed_snippets", s.max_trimmed_snippets);
        s.fps = j.value("fps", s.fps);
        s.seed = j.value("seed", s.seed);
    } catch (const nlohmann::json::exception& e) {
        throw SpecError(std::string("synthetic spec: malformed JSON: ") + e.what());
    }
    s.validate();
    return s;
}

std::string synthetic_spec_to_json(const SyntheticSpec& s) {
    nlohmann::json j = {{"classes", s.classes},
                        {"train_classes", s.train_classes},
                        {"trimmed_per_class", s.trimmed_per_class},
                        {"untrimmed_per_class", s.untrimmed_per_class},
                        {"min_snippets", s.min_snippets},
                        {"max_snippets", s.max_snippets},
                        {"min_instances", s.min_instances},
                        {"max_instances", s.max_instances},
                        {"min_action_length", s.min_action_length},
                        {"max_action_length", s.max_action_length},
                        {"separation", s.separation},
                        {"noise", s.noise},
                        {"signal_rank", s.signal_rank},
                        {"background_modes", s.background_modes},
                        {"background_rank", s.background_rank},
                        {"min_trimmed_snippets", s.min_trimmed_snippets},
                        {"max_trimmed_snippets", s.max_trimmed_snippets},
                        {"fps", s.fps},
                        {"seed", s.seed}};
    return j.dump(1) + "\n";
}

SyntheticDataset gen_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    SyntheticDataset out;
    RngStream root(spec.seed);

    std::array<StreamModel, 2> models;
    for (const StreamKind s : kStreams) {
        RngStream rng = root.split("stream").split(index_of(s));
        const Matrix basis = random_basis(spec.signal_rank + spec.background_rank, rng);
        const auto rank = static_cast<std::size_t>(spec.signal_rank);
        Matrix class_basis(rank, kFeatureDim);
        std::copy_n(basis.data(), class_basis.size(), class_basis.data());
        models[index_of(s)].prototypes = random_directions(static_cast<std::size_t>(spec.classes), class_basis, rng);
        Matrix background_basis = class_basis;
        if (spec.background_rank > 0) {
            background_basis = Matrix(static_cast<std::size_t>(spec.background_rank), kFeatureDim);
            std::copy_n(basis.data() + class_basis.size(), background_basis.size(), background_basis.data());
        }
        models[index_of(s)].background =
            random_directions(static_cast<std::size_t>(spec.background_modes), background_basis, rng);
        out.prototypes[index_of(s)] = models[index_of(s)].prototypes;
    }

    auto& manifest = out.manifest;
    manifest.feature_dir = "features";
    for (int c = 0; c < spec.classes; ++c) {
        char name[32];
        std::snprintf(name, sizeof(name), "class_%03d", c);
        manifest.classes.push_back({c, name});
        (c < spec.train_classes ? manifest.train_classes : manifest.test_classes).push_back(c);
    }

    RngStream video_root = root.split("videos");
    auto emit = [&](VideoRecord record, const std::vector<int>& snippet_class, int background_mode,
                    RngStream& rng) {
        SnippetFeatureSet features;
        features.video_id = record.video_id;
        for (const StreamKind s : kStreams) {
            const StreamModel& model = models[index_of(s)];
            Matrix m(snippet_class.size(), kFeatureDim);
            for (std::size_t i = 0; i < snippet_class.size(); ++i) {
                const auto center = snippet_class[i] >= 0
                                        ? model.prototypes.row(static_cast<std::size_t>(snippet_class[i]))
                                        : model.background.row(static_cast<std::size_t>(background_mode));
                fill_snippet(m.row(i), center, spec.separation, spec.noise, rng);
            }
            features.stream(s) = std::move(m);
        }
        round_to_storage_precision(features);
        record.fps = spec.fps;
        manifest.videos.push_back(std::move(record));
        out.features.push_back(std::move(features));
    };

    for (int c = 0; c < spec.classes; ++c) {
        RngStream class_rng = video_root.split(static_cast<std::uint64_t>(c));
        for (int k = 0; k < spec.trimmed_per_class; ++k) {
            RngStream rng = class_rng.split("trimmed").split(static_cast<std::uint64_t>(k));
            const bool own_range = spec.min_trimmed_snippets > 0;
            const auto length = static_cast<int>(
                rng.between(own_range ? spec.min_trimmed_snippets : spec.min_action_length,
                            own_range ? spec.max_trimmed_snippets : spec.max_action_length));
            VideoRecord record;
            record.video_id = video_name("t", c, k);
            record.trimmed = true;
            record.labels = {c};
            record.segments.push_back({c, 0.0, static_cast<double>(length)});
            emit(std::move(record), std::vector<int>(static_cast<std::size_t>(length), c), 0, rng);
        }
        for (int k = 0; k < spec.untrimmed_per_class; ++k) {
            RngStream rng = class_rng.split("untrimmed").split(static_cast<std::uint64_t>(k));
            const auto n = static_cast<int>(rng.between(spec.min_snippets, spec.max_snippets));
            const auto instances = static_cast<int>(rng.between(spec.min_instances, spec.max_instances));
            std::vector<int> lengths(static_cast<std::size_t>(instances));
            int used = instances - 1;
            for (int& len : lengths) {
                len = static_cast<int>(rng.between(spec.min_action_length, spec.max_action_length));
                used += len;
            }
            // Spread the free background snippets over the instances + 1 gaps;
            // inner gaps keep at least one background snippet.
            std::vector<int> gaps(static_cast<std::size_t>(instances) + 1, 0);
            for (std::size_t g = 1; g + 1 < gaps.size(); ++g) {
                gaps[g] = 1;
            }
            for (int f = 0; f < n - used; ++f) {
                ++gaps[static_cast<std::size_t>(rng.below(gaps.size()))];
            }
            const auto mode = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.background_modes)));
            VideoRecord record;
            record.video_id = video_name("u", c, k);
            record.labels = {c};
            std::vector<int> snippet_class;
            for (int i = 0; i < instances; ++i) {
                snippet_class.insert(snippet_class.end(), static_cast<std::size_t>(gaps[static_cast<std::size_t>(i)]), -1);
                const auto start = static_cast<double>(snippet_class.size());
                snippet_class.insert(snippet_class.end(), static_cast<std::size_t>(lengths[static_cast<std::size_t>(i)]), c);
                record.segments.push_back({c, start, static_cast<double>(snippet_class.size())});
            }
            snippet_class.insert(snippet_class.end(), static_cast<std::size_t>(gaps.back()), -1);
            emit(std::move(record), snippet_class, mode, rng);
        }
    }
    manifest.validate();
    return out;
}

void write_synthetic(const std::filesystem::path& out_dir, const SyntheticDataset& dataset) {
    std::filesystem::create_directories(out_dir / dataset.manifest.feature_dir);
    save_manifest(out_dir / "manifest.json", dataset.manifest);
    for (const auto& f : dataset.features) {
        save_features(out_dir / dataset.manifest.feature_dir / (f.video_id + ".fsl"), f);
    }
}

}  // namespace fsloc::dataio
