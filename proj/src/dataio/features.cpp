// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "fsloc/dataio/io.hpp"
#include "fsloc/errors.hpp"

namespace fsloc::dataio {

namespace {

constexpr char kMagic[4] = {'F', 'S', 'L', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kStreamCount = 2;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFFu));
    }
}

class Reader {
public:
    Reader(const std::vector<unsigned char>& bytes, std::string video_id)
        : bytes_(bytes), video_id_(std::move(video_id)) {}

    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n) {
            throw FormatError("video '" + video_id_ + "': truncated " + what + ": expected " +
                              std::to_string(pos_ + n) + " bytes, got " + std::to_string(bytes_.size()));
        }
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return bytes_[pos_++];
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
        }
        pos_ += 4;
        return v;
    }
    float f32() {
        const std::uint32_t bits = u32("payload");
        return std::bit_cast<float>(bits);
    }
    [[nodiscard]] std::size_t position() const { return pos_; }
    [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }
    const std::string& video_id() const { return video_id_; }

private:
    const std::vector<unsigned char>& bytes_;
    std::string video_id_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> encode_features(const SnippetFeatureSet& features) {
    features.validate();
    std::vector<unsigned char> out;
    const std::size_t n = features.snippets();
    out.reserve(12 + 2 * (9 + n * kFeatureDim * 4));
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put_u32(out, kVersion);
    put_u32(out, kStreamCount);
    for (const StreamKind s : kStreams) {
        const Matrix& m = features.stream(s);
        out.push_back(static_cast<unsigned char>(s));
        put_u32(out, static_cast<std::uint32_t>(m.rows()));
        put_u32(out, static_cast<std::uint32_t>(m.cols()));
        for (const double v : m.values()) {
            put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        }
    }
    return out;
}

SnippetFeatureSet decode_features(const std::vector<unsigned char>& bytes, const std::string& video_id) {
    Reader in(bytes, video_id);
    in.need(4, "header");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError("video '" + video_id + "': bad magic (expected FSL1)");
    }
    in.u32("header");  // skips the magic; already compared bytewise
    const std::uint32_t version = in.u32("header");
    if (version != kVersion) {
        throw FormatError("video '" + video_id + "': unsupported version " + std::to_string(version));
    }
    const std::uint32_t count = in.u32("header");
    SnippetFeatureSet set;
    set.video_id = video_id;
    std::array<bool, 2> seen = {false, false};
    for (std::uint32_t k = 0; k < count; ++k) {
        const std::uint8_t tag = in.u8("stream header");
        if (tag > 1) {
            throw FormatError("video '" + video_id + "': unknown stream tag " + std::to_string(tag));
        }
        if (seen[tag]) {
            throw FormatError("video '" + video_id + "': duplicate stream tag " + std::to_string(tag));
        }
        seen[tag] = true;
        const std::uint32_t n = in.u32("stream header");
        const std::uint32_t dim = in.u32("stream header");
        if (dim != kFeatureDim) {
            throw FormatError("video '" + video_id + "': feature dimension " + std::to_string(dim) + " != " +
                              std::to_string(kFeatureDim));
        }
        const std::size_t payload = static_cast<std::size_t>(n) * dim * 4;
        if (in.remaining() < payload) {
            throw FormatError("video '" + video_id + "': truncated payload: expected " +
                              std::to_string(in.position() + payload) + " bytes, got " +
                              std::to_string(bytes.size()));
        }
        Matrix m(n, dim);
        for (double& v : m.values()) {
            const float f = in.f32();
            if (!std::isfinite(f)) {
                throw FormatError("video '" + video_id + "': non-finite value in payload");
            }
            v = static_cast<double>(f);
        }
        set.streams[tag] = std::move(m);
    }
    for (const StreamKind s : kStreams) {
        if (!seen[index_of(s)]) {
            throw FormatError("video '" + video_id + "': stream " + std::string(to_string(s)) + " missing");
        }
    }
    if (in.remaining() != 0) {
        throw FormatError("video '" + video_id + "': " + std::to_string(in.remaining()) + " trailing bytes");
    }
    set.validate();
    return set;
}

void save_features(const std::filesystem::path& path, const SnippetFeatureSet& features) {
    const auto bytes = encode_features(features);
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

SnippetFeatureSet load_features(const std::filesystem::path& path, const std::string& video_id) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("video '" + video_id + "': cannot open feature file '" + path.string() + "'");
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_features(bytes, video_id);
}

void round_to_storage_precision(SnippetFeatureSet& features) {
    for (auto& m : features.streams) {
        for (double& v : m.values()) {
            v = static_cast<double>(static_cast<float>(v));
        }
    }
}

FeatureStore::FeatureStore(std::filesystem::path directory) : directory_(std::move(directory)) {}

void FeatureStore::insert(SnippetFeatureSet features) {
    features.validate();
    std::lock_guard lock(mutex_);
    auto id = features.video_id;
    cache_[id] = std::make_unique<SnippetFeatureSet>(std::move(features));
}

const SnippetFeatureSet& FeatureStore::get(const std::string& video_id) const {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(video_id);
    if (it != cache_.end()) {
        return *it->second;
    }
    if (directory_.empty()) {
        throw ValidationError("video '" + video_id + "': no features available");
    }
    const auto path = directory_ / (video_id + ".fsl");
    if (!std::filesystem::exists(path)) {
        throw ValidationError("video '" + video_id + "': missing feature file '" + path.string() + "'");
    }
    auto loaded = std::make_unique<SnippetFeatureSet>(load_features(path, video_id));
    const auto& ref = *loaded;
    cache_.emplace(video_id, std::move(loaded));
    return ref;
}

bool FeatureStore::contains(const std::string& video_id) const {
    std::lock_guard lock(mutex_);
    return cache_.contains(video_id);
}

}  // namespace fsloc::dataio
