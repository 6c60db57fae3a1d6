// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "fsloc/numkit/matrix.hpp"
#include "fsloc/numkit/param.hpp"
#include "fsloc/numkit/rng.hpp"

namespace fsloc::numkit {

// ---------------------------------------------------------------------------
// Products
// ---------------------------------------------------------------------------

/// a[m x k] * b[k x n].
Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b, with a[k x m] and b[k x n].
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * b^T, with a[m x k] and b[n x k].
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// out += a^T * b. Used for weight-gradient accumulation.
void matmul_tn_accumulate(const Matrix& a, const Matrix& b, Matrix& out);

// ---------------------------------------------------------------------------
// Elementwise helpers
// ---------------------------------------------------------------------------

/// Adds a 1 x cols bias row to every row of m.
void add_row_bias(Matrix& m, const Matrix& bias);
/// Accumulates column sums of m into the 1 x cols matrix out.
void accumulate_column_sums(const Matrix& m, Matrix& out);
void add_inplace(Matrix& dst, const Matrix& src);
void scale_inplace(Matrix& m, double factor);
Matrix transpose(const Matrix& m);
/// Horizontal concatenation [a | b]; row counts must agree.
Matrix hconcat(const Matrix& a, const Matrix& b);
std::vector<double> column_means(const Matrix& m);

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

Matrix relu_forward(Matrix x);
/// upstream masked to x > 0; the subgradient at exactly 0 is 0.
Matrix relu_backward(const Matrix& x, Matrix upstream);

struct DropoutResult {
    Matrix output;
    /// Per-entry multiplier: 0 for dropped entries, 1/(1 - rate) for kept ones.
    Matrix mask;
};

/// Inverted dropout. With training == false (or rate == 0) the output is the
/// input and the mask is all ones.
DropoutResult dropout_forward(Matrix x, double rate, RngStream& rng, bool training);
Matrix dropout_backward(const Matrix& mask, Matrix upstream);

// ---------------------------------------------------------------------------
// Batch normalization over rows, per column
// ---------------------------------------------------------------------------

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

struct BatchNormParams {
    ParamTensor scale;  // 1 x c
    ParamTensor shift;  // 1 x c
    Matrix running_mean;
    Matrix running_var;

    BatchNormParams() = default;
    BatchNormParams(std::size_t channels, const std::string& name_prefix);
    [[nodiscard]] std::size_t channels() const noexcept { return scale.value.cols(); }
};

struct BatchNormCache {
    Matrix normalized;          // x_hat
    std::vector<double> mean;   // statistics used for normalization
    std::vector<double> var;
    std::vector<double> inv_std;
    bool training = false;
};

struct BatchNormResult {
    Matrix output;
    BatchNormCache cache;
};

/// Training mode normalizes by batch statistics (biased variance); inference
/// mode uses the running statistics. Running statistics are not touched here;
/// see batchnorm_update_running.
BatchNormResult batchnorm_forward(const Matrix& x, const BatchNormParams& params, bool training);
/// running = momentum * running + (1 - momentum) * batch.
void batchnorm_update_running(BatchNormParams& params, const BatchNormCache& cache);
/// Accumulates scale/shift gradients and returns the input gradient.
Matrix batchnorm_backward(BatchNormParams& params, const BatchNormCache& cache, const Matrix& upstream);

// ---------------------------------------------------------------------------
// Softmax
// ---------------------------------------------------------------------------

/// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> x);
/// Given y = softmax(x) and dL/dy, returns dL/dx.
std::vector<double> softmax_backward(std::span<const double> y, std::span<const double> upstream);

}  // namespace fsloc::numkit
