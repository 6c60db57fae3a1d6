// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "fsloc/dataio/io.hpp"
#include "fsloc/errors.hpp"

namespace fsloc::dataio {

namespace {

constexpr const char* kSecondsHeader = "video_id,class_id,start_seconds,end_seconds,score";
constexpr const char* kSnippetsHeader = "video_id,class_id,start_snippet,end_snippet,score";

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        fields.push_back(field);
    }
    return fields;
}

}  // namespace

std::string format_predictions(std::vector<PredictionRecord> predictions, const std::set<ClassId>& known_classes,
                               TimeUnit unit) {
    for (const auto& p : predictions) {
        if (!known_classes.contains(p.class_id)) {
            throw ValidationError("prediction for video '" + p.video_id + "': unknown class id " +
                                  std::to_string(p.class_id));
        }
        if (p.video_id.find(',') != std::string::npos) {
            throw ValidationError("video id '" + p.video_id + "' contains a comma");
        }
    }
    std::stable_sort(predictions.begin(), predictions.end(), [](const auto& a, const auto& b) {
        if (a.video_id != b.video_id) {
            return a.video_id < b.video_id;
        }
        if (a.class_id != b.class_id) {
            return a.class_id < b.class_id;
        }
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return a.start < b.start;
    });
    std::string out = unit == TimeUnit::kSeconds ? kSecondsHeader : kSnippetsHeader;
    out += '\n';
    for (const auto& p : predictions) {
        out += p.video_id + ',' + std::to_string(p.class_id) + ',' + fixed6(p.start) + ',' + fixed6(p.end) + ',' +
               fixed6(p.score) + '\n';
    }
    return out;
}

void write_predictions(const std::filesystem::path& path, std::vector<PredictionRecord> predictions,
                       const std::set<ClassId>& known_classes, TimeUnit unit) {
    write_text_file(path, format_predictions(std::move(predictions), known_classes, unit));
}

PredictionFile parse_predictions(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("prediction file: missing header");
    }
    PredictionFile file;
    if (line == kSecondsHeader) {
        file.unit = TimeUnit::kSeconds;
    } else if (line == kSnippetsHeader) {
        file.unit = TimeUnit::kSnippets;
    } else {
        throw FormatError("prediction file: unrecognized header '" + line + "'");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto fields = split_csv(line);
        if (fields.size() != 5) {
            throw FormatError("prediction file line " + std::to_string(line_no) + ": expected 5 fields");
        }
        try {
            file.records.push_back({fields[0], static_cast<ClassId>(std::stoi(fields[1])), std::stod(fields[2]),
                                    std::stod(fields[3]), std::stod(fields[4])});
        } catch (const std::exception&) {
            throw FormatError("prediction file line " + std::to_string(line_no) + ": malformed number");
        }
    }
    return file;
}

PredictionFile read_predictions(const std::filesystem::path& path) { return parse_predictions(read_text_file(path)); }

}  // namespace fsloc::dataio
