// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "fsloc/dataio/io.hpp"
#include "fsloc/errors.hpp"

namespace fsloc::dataio {

namespace {

using nlohmann::json;

constexpr const char* kManifestFormat = "fsloc-manifest/1";

std::vector<ClassId> sorted_ids(const json& node, const char* what) {
    if (!node.is_array()) {
        throw ValidationError(std::string("manifest: '") + what + "' must be an array of class ids");
    }
    std::vector<ClassId> ids = node.get<std::vector<ClassId>>();
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw ValidationError(std::string("split '") + what + "': duplicate class id");
    }
    return ids;
}

VideoRecord parse_video(const json& node) {
    VideoRecord v;
    v.video_id = node.at("id").get<std::string>();
    const std::string where = "video '" + v.video_id + "'";
    v.trimmed = node.value("trimmed", false);
    if (node.contains("labels")) {
        v.labels = node.at("labels").get<std::vector<ClassId>>();
    }
    std::sort(v.labels.begin(), v.labels.end());
    v.labels.erase(std::unique(v.labels.begin(), v.labels.end()), v.labels.end());
    if (node.contains("fps") && !node.at("fps").is_null()) {
        v.fps = node.at("fps").get<double>();
    }
    if (node.contains("segments")) {
        for (const auto& s : node.at("segments")) {
            SegmentAnnotation seg;
            seg.class_id = s.at("class").get<ClassId>();
            if (s.contains("start_snippet")) {
                seg.start = s.at("start_snippet").get<double>();
                seg.end = s.at("end_snippet").get<double>();
            } else {
                if (!v.fps || !(*v.fps > 0.0)) {
                    throw ValidationError(where + ": segments in seconds require a positive fps");
                }
                const double per_second = *v.fps / kFramesPerSnippet;
                seg.start = s.at("start").get<double>() * per_second;
                seg.end = s.at("end").get<double>() * per_second;
            }
            v.segments.push_back(seg);
        }
    }
    return v;
}

}  // namespace

DatasetManifest parse_manifest(const std::string& text) {
    DatasetManifest m;
    try {
        const json root = json::parse(text);
        if (root.contains("format") && root.at("format").get<std::string>() != kManifestFormat) {
            throw ValidationError("manifest: unsupported format '" + root.at("format").get<std::string>() + "'");
        }
        m.feature_dir = root.value("feature_dir", std::string{});
        for (const auto& c : root.at("classes")) {
            m.classes.push_back({c.at("id").get<ClassId>(), c.value("name", std::string{})});
        }
        const json& split = root.at("split");
        m.train_classes = sorted_ids(split.at("train"), "train");
        m.test_classes = sorted_ids(split.at("test"), "test");
        for (const auto& v : root.at("videos")) {
            m.videos.push_back(parse_video(v));
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("manifest: malformed JSON: ") + e.what());
    }
    m.validate();
    return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    return parse_manifest(read_text_file(path));
}

std::string manifest_to_json(const DatasetManifest& manifest) {
    json root;
    root["format"] = kManifestFormat;
    root["feature_dir"] = manifest.feature_dir;
    json classes = json::array();
    for (const auto& c : manifest.classes) {
        classes.push_back({{"id", c.id}, {"name", c.name}});
    }
    root["classes"] = classes;
    root["split"] = {{"train", manifest.train_classes}, {"test", manifest.test_classes}};
    json videos = json::array();
    for (const auto& v : manifest.videos) {
        json node;
        node["id"] = v.video_id;
        node["trimmed"] = v.trimmed;
        node["labels"] = v.labels;
        if (v.fps) {
            node["fps"] = *v.fps;
        }
        json segments = json::array();
        for (const auto& s : v.segments) {
            if (v.fps) {
                const double seconds_per_snippet = kFramesPerSnippet / *v.fps;
                segments.push_back({{"class", s.class_id},
                                    {"start", s.start * seconds_per_snippet},
                                    {"end", s.end * seconds_per_snippet}});
            } else {
                segments.push_back({{"class", s.class_id}, {"start_snippet", s.start}, {"end_snippet", s.end}});
            }
        }
        node["segments"] = segments;
        videos.push_back(node);
    }
    root["videos"] = videos;
    return root.dump(1) + "\n";
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    manifest.validate();
    write_text_file(path, manifest_to_json(manifest));
}

std::filesystem::path feature_directory(const DatasetManifest& manifest,
                                        const std::filesystem::path& manifest_path) {
    const auto base = manifest_path.parent_path();
    if (manifest.feature_dir.empty()) {
        return base;
    }
    const std::filesystem::path dir(manifest.feature_dir);
    return dir.is_absolute() ? dir : base / dir;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    out << text;
    if (!out) {
        throw std::runtime_error("write failed for '" + path.string() + "'");
    }
}

}  // namespace fsloc::dataio
