// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsloc/numkit/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fsloc/errors.hpp"

namespace fsloc::numkit {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstView = Eigen::Map<const RowMajor>;
using View = Eigen::Map<RowMajor>;

ConstView view(const Matrix& m) { return ConstView(m.data(), static_cast<Eigen::Index>(m.rows()),
                                                   static_cast<Eigen::Index>(m.cols())); }
View view(Matrix& m) { return View(m.data(), static_cast<Eigen::Index>(m.rows()),
                                   static_cast<Eigen::Index>(m.cols())); }

[[noreturn]] void product_error(const char* op, const Matrix& a, const Matrix& b) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}

// Below this many multiply-adds the blocked GEMM setup costs more than the
// product itself; coefficient-wise evaluation is used instead.
constexpr std::size_t kLazyProductWork = std::size_t{1} << 18;

bool small_product(std::size_t m, std::size_t k, std::size_t n) { return m * k * n < kLazyProductWork; }

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        product_error("matmul", a, b);
    }
    Matrix out(a.rows(), b.cols());
    if (!out.empty() && a.cols() > 0) {
        if (small_product(a.rows(), a.cols(), b.cols())) {
            view(out).noalias() = view(a).lazyProduct(view(b));
        } else {
            view(out).noalias() = view(a) * view(b);
        }
    }
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        product_error("matmul_tn", a, b);
    }
    Matrix out(a.cols(), b.cols());
    if (!out.empty() && a.rows() > 0) {
        if (small_product(a.cols(), a.rows(), b.cols())) {
            view(out).noalias() = view(a).transpose().lazyProduct(view(b));
        } else {
            view(out).noalias() = view(a).transpose() * view(b);
        }
    }
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        product_error("matmul_nt", a, b);
    }
    Matrix out(a.rows(), b.rows());
    if (!out.empty() && a.cols() > 0) {
        if (small_product(a.rows(), a.cols(), b.rows())) {
            view(out).noalias() = view(a).lazyProduct(view(b).transpose());
        } else {
            view(out).noalias() = view(a) * view(b).transpose();
        }
    }
    return out;
}

void matmul_tn_accumulate(const Matrix& a, const Matrix& b, Matrix& out) {
    if (a.rows() != b.rows() || out.rows() != a.cols() || out.cols() != b.cols()) {
        product_error("matmul_tn_accumulate", a, b);
    }
    if (!out.empty() && a.rows() > 0) {
        view(out).noalias() += view(a).transpose() * view(b);
    }
}

void add_row_bias(Matrix& m, const Matrix& bias) {
    if (bias.rows() != 1 || bias.cols() != m.cols()) {
        product_error("add_row_bias", m, bias);
    }
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        for (std::size_t c = 0; c < m.cols(); ++c) {
            row[c] += bias(0, c);
        }
    }
}

void accumulate_column_sums(const Matrix& m, Matrix& out) {
    if (out.rows() != 1 || out.cols() != m.cols()) {
        product_error("accumulate_column_sums", m, out);
    }
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        for (std::size_t c = 0; c < m.cols(); ++c) {
            out(0, c) += row[c];
        }
    }
}

void add_inplace(Matrix& dst, const Matrix& src) {
    require_same_shape(dst, src, "add_inplace");
    auto d = dst.values();
    const auto s = src.values();
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] += s[i];
    }
}

void scale_inplace(Matrix& m, double factor) {
    for (double& x : m.values()) {
        x *= factor;
    }
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            out(c, r) = m(r, c);
        }
    }
    return out;
}

Matrix hconcat(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        product_error("hconcat", a, b);
    }
    Matrix out(a.rows(), a.cols() + b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        auto dst = out.row(r);
        std::copy(a.row(r).begin(), a.row(r).end(), dst.begin());
        std::copy(b.row(r).begin(), b.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
    }
    return out;
}

std::vector<double> column_means(const Matrix& m) {
    std::vector<double> out(m.cols(), 0.0);
    if (m.rows() == 0) {
        return out;
    }
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        for (std::size_t c = 0; c < m.cols(); ++c) {
            out[c] += row[c];
        }
    }
    const double inv = 1.0 / static_cast<double>(m.rows());
    for (double& x : out) {
        x *= inv;
    }
    return out;
}

Matrix relu_forward(Matrix x) {
    for (double& v : x.values()) {
        v = v > 0.0 ? v : 0.0;
    }
    return x;
}

Matrix relu_backward(const Matrix& x, Matrix upstream) {
    require_same_shape(x, upstream, "relu_backward");
    Matrix out = std::move(upstream);
    const auto xs = x.values();
    auto o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i) {
        if (!(xs[i] > 0.0)) {
            o[i] = 0.0;
        }
    }
    return out;
}

DropoutResult dropout_forward(Matrix x, double rate, RngStream& rng, bool training) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw ValidationError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
    }
    DropoutResult result;
    result.mask = Matrix(x.rows(), x.cols(), 1.0);
    result.output = std::move(x);
    if (!training || rate == 0.0) {
        return result;
    }
    const double keep_scale = 1.0 / (1.0 - rate);
    auto out = result.output.values();
    auto mask = result.mask.values();
    rng.fill_uniform(mask);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double m = mask[i] < rate ? 0.0 : keep_scale;
        mask[i] = m;
        out[i] *= m;
    }
    return result;
}

Matrix dropout_backward(const Matrix& mask, Matrix upstream) {
    require_same_shape(mask, upstream, "dropout_backward");
    Matrix out = std::move(upstream);
    const auto m = mask.values();
    auto o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] *= m[i];
    }
    return out;
}

BatchNormParams::BatchNormParams(std::size_t channels, const std::string& name_prefix)
    : scale(name_prefix + ".scale", Matrix(1, channels, 1.0)),
      shift(name_prefix + ".shift", Matrix(1, channels, 0.0)),
      running_mean(1, channels, 0.0),
      running_var(1, channels, 1.0) {}

BatchNormResult batchnorm_forward(const Matrix& x, const BatchNormParams& params, bool training) {
    const std::size_t n = x.rows();
    const std::size_t c = x.cols();
    if (n == 0) {
        throw ShapeError("batchnorm_forward: empty batch");
    }
    if (c != params.channels()) {
        throw ShapeError("batchnorm_forward: input has " + std::to_string(c) + " columns, parameters have " +
                         std::to_string(params.channels()));
    }
    BatchNormResult result;
    auto& cache = result.cache;
    cache.training = training;
    cache.mean.assign(c, 0.0);
    cache.var.assign(c, 0.0);
    cache.inv_std.assign(c, 0.0);
    if (training) {
        cache.mean = column_means(x);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t j = 0; j < c; ++j) {
                const double d = x(r, j) - cache.mean[j];
                cache.var[j] += d * d;
            }
        }
        for (double& v : cache.var) {
            v /= static_cast<double>(n);
        }
    } else {
        for (std::size_t j = 0; j < c; ++j) {
            cache.mean[j] = params.running_mean(0, j);
            cache.var[j] = params.running_var(0, j);
        }
    }
    for (std::size_t j = 0; j < c; ++j) {
        cache.inv_std[j] = 1.0 / std::sqrt(cache.var[j] + kBatchNormEpsilon);
    }
    cache.normalized = Matrix(n, c);
    result.output = Matrix(n, c);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < c; ++j) {
            const double xh = (x(r, j) - cache.mean[j]) * cache.inv_std[j];
            cache.normalized(r, j) = xh;
            result.output(r, j) = params.scale.value(0, j) * xh + params.shift.value(0, j);
        }
    }
    return result;
}

void batchnorm_update_running(BatchNormParams& params, const BatchNormCache& cache) {
    if (!cache.training) {
        return;
    }
    for (std::size_t j = 0; j < params.channels(); ++j) {
        params.running_mean(0, j) =
            kBatchNormMomentum * params.running_mean(0, j) + (1.0 - kBatchNormMomentum) * cache.mean[j];
        params.running_var(0, j) =
            kBatchNormMomentum * params.running_var(0, j) + (1.0 - kBatchNormMomentum) * cache.var[j];
    }
}

Matrix batchnorm_backward(BatchNormParams& params, const BatchNormCache& cache, const Matrix& upstream) {
    require_same_shape(cache.normalized, upstream, "batchnorm_backward");
    const std::size_t n = upstream.rows();
    const std::size_t c = upstream.cols();
    Matrix dx(n, c);
    for (std::size_t j = 0; j < c; ++j) {
        double sum_dy = 0.0;
        double sum_dy_xhat = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            sum_dy += upstream(r, j);
            sum_dy_xhat += upstream(r, j) * cache.normalized(r, j);
        }
        params.shift.grad(0, j) += sum_dy;
        params.scale.grad(0, j) += sum_dy_xhat;
        const double gamma = params.scale.value(0, j);
        if (cache.training) {
            // dx = gamma * inv_std / N * (N * dy - sum(dy) - x_hat * sum(dy * x_hat))
            const double k = gamma * cache.inv_std[j] / static_cast<double>(n);
            for (std::size_t r = 0; r < n; ++r) {
                dx(r, j) = k * (static_cast<double>(n) * upstream(r, j) - sum_dy -
                                cache.normalized(r, j) * sum_dy_xhat);
            }
        } else {
            for (std::size_t r = 0; r < n; ++r) {
                dx(r, j) = gamma * cache.inv_std[j] * upstream(r, j);
            }
        }
    }
    return dx;
}

std::vector<double> softmax(std::span<const double> x) {
    if (x.empty()) {
        throw ShapeError("softmax: empty input");
    }
    const double peak = *std::max_element(x.begin(), x.end());
    std::vector<double> out(x.size());
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = std::exp(x[i] - peak);
        total += out[i];
    }
    for (double& v : out) {
        v /= total;
    }
    return out;
}

std::vector<double> softmax_backward(std::span<const double> y, std::span<const double> upstream) {
    if (y.size() != upstream.size()) {
        throw ShapeError("softmax_backward: length mismatch");
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        dot += y[i] * upstream[i];
    }
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        out[i] = y[i] * (upstream[i] - dot);
    }
    return out;
}

}  // namespace fsloc::numkit
