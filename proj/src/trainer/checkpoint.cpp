// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsloc/trainer/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <type_traits>

#include "fsloc/errors.hpp"

namespace fsloc::trainer {

namespace {

constexpr char kMagic[4] = {'F', 'S', 'L', 'P'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFFu));
    }
}

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFFu));
    }
}

class Reader {
public:
    explicit Reader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n) {
            throw FormatError(std::string("checkpoint: truncated ") + what + ": expected " +
                              std::to_string(pos_ + n) + " bytes, got " + std::to_string(bytes_.size()));
        }
    }
    std::uint64_t uint(int width, const char* what) {
        need(static_cast<std::size_t>(width), what);
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) {
            v |= static_cast<std::uint64_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
        }
        pos_ += static_cast<std::size_t>(width);
        return v;
    }
    std::string text(std::size_t n, const char* what) {
        need(n, what);
        std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                      bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return s;
    }
    [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    const std::vector<unsigned char>& bytes_;
    std::size_t pos_ = 0;
};

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CheckpointMeta options_meta(const ModelOptions& o) {
    return {
        {"model.learn_phi", o.learn_phi ? "1" : "0"},
        {"model.learn_psi", o.learn_psi ? "1" : "0"},
        {"model.metrics", metrics_to_string(o.metrics)},
        {"model.pooling", std::string(to_string(o.pooling))},
        {"model.dropout", format_double(o.dropout)},
    };
}

const std::string& require(const CheckpointMeta& meta, const std::string& key) {
    const auto it = meta.find(key);
    if (it == meta.end()) {
        throw FormatError("checkpoint: missing meta key '" + key + "'");
    }
    return it->second;
}

bool parse_flag(const CheckpointMeta& meta, const std::string& key) {
    const auto& v = require(meta, key);
    if (v != "0" && v != "1") {
        throw FormatError("checkpoint: meta key '" + key + "' must be 0 or 1, got '" + v + "'");
    }
    return v == "1";
}

template <typename M>
struct NamedMatrix {
    std::string name;
    M* target;
};

template <typename ModelT>
auto stored_tensors(ModelT& m) {
    using MatrixT = std::remove_reference_t<decltype((m.generator.bn.running_mean))>;
    std::vector<NamedMatrix<MatrixT>> out;
    for (auto* t : m.trainable()) {
        out.push_back({t->name, &t->value});
    }
    if (m.options.learn_psi) {
        out.push_back({"generator.bn.running_mean", &m.generator.bn.running_mean});
        out.push_back({"generator.bn.running_var", &m.generator.bn.running_var});
    }
    return out;
}

}  // namespace

std::vector<unsigned char> encode_checkpoint(const Model& model, const CheckpointMeta& extra) {
    CheckpointMeta meta = extra;
    for (auto& [k, v] : options_meta(model.options)) {
        meta[k] = v;
    }
    std::string meta_text;
    for (const auto& [k, v] : meta) {
        if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
            throw ValidationError("checkpoint: meta entry '" + k + "' contains '=' or a newline");
        }
        meta_text += k + "=" + v + "\n";
    }

    std::vector<unsigned char> out(std::begin(kMagic), std::end(kMagic));
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(meta_text.size()));
    out.insert(out.end(), meta_text.begin(), meta_text.end());

    const auto tensors = stored_tensors(model);
    put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        put_u32(out, static_cast<std::uint32_t>(t.name.size()));
        out.insert(out.end(), t.name.begin(), t.name.end());
        put_u64(out, t.target->rows());
        put_u64(out, t.target->cols());
        for (const double v : t.target->values()) {
            put_u64(out, std::bit_cast<std::uint64_t>(v));
        }
    }
    return out;
}

Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes) {
    Reader r(bytes);
    if (r.text(4, "magic") != std::string(kMagic, 4)) {
        throw FormatError("checkpoint: bad magic (not an FSLP file)");
    }
    const auto version = r.uint(4, "version");
    if (version != kVersion) {
        throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    }
    const auto meta_len = static_cast<std::size_t>(r.uint(4, "meta length"));
    Checkpoint ck;
    {
        std::istringstream lines(r.text(meta_len, "meta"));
        std::string line;
        while (std::getline(lines, line)) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw FormatError("checkpoint: malformed meta line '" + line + "'");
            }
            ck.meta[line.substr(0, eq)] = line.substr(eq + 1);
        }
    }
    ModelOptions o;
    o.learn_phi = parse_flag(ck.meta, "model.learn_phi");
    o.learn_psi = parse_flag(ck.meta, "model.learn_psi");
    o.metrics = parse_metrics(require(ck.meta, "model.metrics"));
    o.pooling = parse_pooling(require(ck.meta, "model.pooling"));
    o.dropout = std::stod(require(ck.meta, "model.dropout"));
    ck.model = init_model(o, 0);

    auto expected = stored_tensors(ck.model);
    const auto count = r.uint(4, "tensor count");
    if (count != expected.size()) {
        throw FormatError("checkpoint: " + std::to_string(count) + " tensors stored, flags require " +
                          std::to_string(expected.size()));
    }
    for (auto& slot : expected) {
        const auto name_len = static_cast<std::size_t>(r.uint(4, "tensor name length"));
        const std::string name = r.text(name_len, "tensor name");
        if (name != slot.name) {
            throw FormatError("checkpoint: expected tensor '" + slot.name + "', found '" + name + "'");
        }
        const auto rows = r.uint(8, "tensor rows");
        const auto cols = r.uint(8, "tensor cols");
        if (rows != slot.target->rows() || cols != slot.target->cols()) {
            throw FormatError("checkpoint: tensor '" + name + "' is " + std::to_string(rows) + "x" +
                              std::to_string(cols) + ", expected " + slot.target->shape_str());
        }
        for (double& v : slot.target->values()) {
            v = std::bit_cast<double>(r.uint(8, "tensor payload"));
        }
        if (!slot.target->all_finite()) {
            throw FormatError("checkpoint: tensor '" + name + "' contains non-finite values");
        }
    }
    if (r.remaining() != 0) {
        throw FormatError("checkpoint: " + std::to_string(r.remaining()) + " trailing bytes");
    }
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, const CheckpointMeta& extra) {
    const auto bytes = encode_checkpoint(model, extra);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot write checkpoint '" + path.string() + "'");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw ValidationError("short write to checkpoint '" + path.string() + "'");
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open checkpoint '" + path.string() + "'");
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

}  // namespace fsloc::trainer
