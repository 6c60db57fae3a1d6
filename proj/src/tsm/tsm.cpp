// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsloc/tsm/tsm.hpp"

#include <cmath>
#include <string>

#include "fsloc/errors.hpp"
#include "fsloc/numkit/ops.hpp"

namespace fsloc::tsm {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        s += a[k] * b[k];
    }
    return s;
}

std::vector<double> row_norms(const Matrix& m) {
    std::vector<double> out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out[r] = std::sqrt(dot(m.row(r), m.row(r)));
    }
    return out;
}

}  // namespace

std::string_view to_string(SimilarityMetric m) {
    switch (m) {
        case SimilarityMetric::kCosine:
            return "cos";
        case SimilarityMetric::kDot:
            return "dot";
        case SimilarityMetric::kEuclidean:
            return "euclid";
    }
    return "?";
}

SimilarityMetric parse_metric(std::string_view name) {
    if (name == "cos" || name == "cosine") {
        return SimilarityMetric::kCosine;
    }
    if (name == "dot") {
        return SimilarityMetric::kDot;
    }
    if (name == "euclid" || name == "euclidean") {
        return SimilarityMetric::kEuclidean;
    }
    throw ValidationError("unknown similarity metric '" + std::string(name) + "'");
}

double similarity(std::span<const double> a, std::span<const double> b, SimilarityMetric metric) {
    switch (metric) {
        case SimilarityMetric::kDot:
            return dot(a, b);
        case SimilarityMetric::kCosine: {
            const double na = std::sqrt(dot(a, a));
            const double nb = std::sqrt(dot(b, b));
            return na > 0.0 && nb > 0.0 ? dot(a, b) / (na * nb) : 0.0;
        }
        case SimilarityMetric::kEuclidean: {
            double s = 0.0;
            for (std::size_t k = 0; k < a.size(); ++k) {
                s += (a[k] - b[k]) * (a[k] - b[k]);
            }
            return -std::sqrt(s);
        }
    }
    return 0.0;
}

Tsm compute_tsm(const Matrix& query, const Matrix& reference, SimilarityMetric metric, StreamKind stream,
                std::size_t class_index) {
    if (query.cols() != reference.cols()) {
        throw ShapeError("compute_tsm: embedding widths differ (" + query.shape_str() + " vs " +
                         reference.shape_str() + ")");
    }
    Tsm t;
    t.metric = metric;
    t.stream = stream;
    t.class_index = class_index;
    if (metric == SimilarityMetric::kEuclidean) {
        t.values = Matrix(query.rows(), reference.rows());
        for (std::size_t i = 0; i < query.rows(); ++i) {
            for (std::size_t j = 0; j < reference.rows(); ++j) {
                t.values(i, j) = similarity(query.row(i), reference.row(j), metric);
            }
        }
        return t;
    }
    t.values = numkit::matmul_nt(query, reference);
    if (metric == SimilarityMetric::kCosine) {
        const auto nq = row_norms(query);
        const auto nv = row_norms(reference);
        for (std::size_t i = 0; i < query.rows(); ++i) {
            for (std::size_t j = 0; j < reference.rows(); ++j) {
                const double denom = nq[i] * nv[j];
                t.values(i, j) = denom > 0.0 ? t.values(i, j) / denom : 0.0;
            }
        }
    }
    return t;
}

SimilarityVector maxpool_rows(const Tsm& tsm) {
    const Matrix& m = tsm.values;
    if (m.cols() == 0) {
        throw ShapeError("maxpool_rows: reference video has no snippets");
    }
    SimilarityVector out;
    out.metric = tsm.metric;
    out.stream = tsm.stream;
    out.class_index = tsm.class_index;
    out.values.resize(m.rows());
    out.argmax.resize(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < m.cols(); ++j) {
            if (m(i, j) > m(i, best)) {
                best = j;
            }
        }
        out.values[i] = m(i, best);
        out.argmax[i] = best;
    }
    return out;
}

SimilarityMetric bundle_metric(std::size_t channel) {
    return channel < 2 ? SimilarityMetric::kCosine : SimilarityMetric::kDot;
}

StreamKind bundle_stream(std::size_t channel) { return channel % 2 == 0 ? StreamKind::kRgb : StreamKind::kFlow; }

SimilarityBundle similarity_bundle(const std::array<const Matrix*, 2>& query,
                                   const std::array<const Matrix*, 2>& reference, std::size_t class_index) {
    if (query[0]->rows() != query[1]->rows()) {
        throw ShapeError("similarity_bundle: query streams differ in length");
    }
    if (reference[0]->rows() != reference[1]->rows()) {
        throw ShapeError("similarity_bundle: reference streams differ in length");
    }
    SimilarityBundle b;
    for (std::size_t k = 0; k < kBundleChannels; ++k) {
        const auto s = dataio::index_of(bundle_stream(k));
        b.channels[k] = maxpool_rows(
            compute_tsm(*query[s], *reference[s], bundle_metric(k), bundle_stream(k), class_index));
    }
    return b;
}

void similarity_backward(const Matrix& query, const Matrix& reference, const SimilarityVector& pooled,
                         std::span<const double> upstream, Matrix& d_query, Matrix& d_reference) {
    numkit::require_same_shape(query, d_query, "similarity_backward(query)");
    numkit::require_same_shape(reference, d_reference, "similarity_backward(reference)");
    if (upstream.size() != query.rows() || pooled.argmax.size() != query.rows()) {
        throw ShapeError("similarity_backward: upstream length does not match query length");
    }
    const std::size_t d = query.cols();
    for (std::size_t i = 0; i < query.rows(); ++i) {
        const double g = upstream[i];
        if (g == 0.0) {
            continue;
        }
        const std::size_t j = pooled.argmax[i];
        const auto q = query.row(i);
        const auto v = reference.row(j);
        auto dq = d_query.row(i);
        auto dv = d_reference.row(j);
        switch (pooled.metric) {
            case SimilarityMetric::kDot:
                for (std::size_t k = 0; k < d; ++k) {
                    dq[k] += g * v[k];
                    dv[k] += g * q[k];
                }
                break;
            case SimilarityMetric::kCosine: {
                const double nq = std::sqrt(dot(q, q));
                const double nv = std::sqrt(dot(v, v));
                if (nq == 0.0 || nv == 0.0) {
                    break;
                }
                const double c = dot(q, v) / (nq * nv);
                for (std::size_t k = 0; k < d; ++k) {
                    dq[k] += g * (v[k] / (nq * nv) - c * q[k] / (nq * nq));
                    dv[k] += g * (q[k] / (nq * nv) - c * v[k] / (nv * nv));
                }
                break;
            }
            case SimilarityMetric::kEuclidean: {
                double dist = 0.0;
                for (std::size_t k = 0; k < d; ++k) {
                    dist += (q[k] - v[k]) * (q[k] - v[k]);
                }
                dist = std::sqrt(dist);
                if (dist == 0.0) {
                    break;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double unit = (q[k] - v[k]) / dist;
                    dq[k] -= g * unit;
                    dv[k] += g * unit;
                }
                break;
            }
        }
    }
}

}  // namespace fsloc::tsm
