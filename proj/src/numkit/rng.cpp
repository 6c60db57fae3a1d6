// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsloc/numkit/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace fsloc::numkit {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const char ch : s) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed), key_(mix64(seed + kGolden)) {}

RngStream::RngStream(std::uint64_t seed, std::uint64_t key) noexcept : seed_(seed), key_(key) {}

std::uint64_t RngStream::next_u64() noexcept {
    const std::uint64_t n = counter_++;
    return mix64(key_ ^ mix64(n * kGolden + 1));
}

double RngStream::uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

void RngStream::fill_uniform(std::span<double> out) noexcept {
    const std::uint64_t base = counter_;
    const std::uint64_t key = key_;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::uint64_t n = base + i;
        out[i] = static_cast<double>(mix64(key ^ mix64(n * kGolden + 1)) >> 11) * 0x1.0p-53;
    }
    counter_ += out.size();
}

double RngStream::normal() noexcept {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_normal_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

std::uint64_t RngStream::below(std::uint64_t n) noexcept {
    // Rejection keeps the draw unbiased for any n.
    const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
    std::uint64_t x = next_u64();
    while (x >= limit) {
        x = next_u64();
    }
    return x % n;
}

std::int64_t RngStream::between(std::int64_t lo, std::int64_t hi) noexcept {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(below(span));
}

RngStream RngStream::split(std::string_view name) const noexcept {
    return RngStream(seed_, mix64(key_ ^ mix64(fnv1a(name))));
}

RngStream RngStream::split(std::uint64_t index) const noexcept {
    return RngStream(seed_, mix64(key_ + mix64(index ^ 0xA0761D6478BD642FULL)));
}

std::vector<std::size_t> RngStream::sample_without_replacement(std::size_t n, std::size_t k) {
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    if (k > n) {
        k = n;
    }
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(below(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

}  // namespace fsloc::numkit
