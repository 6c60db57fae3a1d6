// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fsloc/numkit/param.hpp"

namespace fsloc::numkit {

struct GradCheckOptions {
    double step = 1e-5;
    /// Coordinates checked per tensor; tensors smaller than this are checked fully.
    std::size_t samples_per_tensor = 200;
    /// Relative error is |analytic - numeric| / max(|numeric|, abs_floor), so
    /// coordinates whose true gradient is ~0 are judged on absolute error.
    double abs_floor = 1e-6;
    /// A coordinate whose forward and backward one-sided slopes disagree by
    /// more than this (relative) sits on a kink (ReLU, max) and is skipped.
    double kink_tolerance = 1e-4;
    std::uint64_t seed = 0;
};

struct TensorCheck {
    std::string name;
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped_nonsmooth = 0;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped_nonsmooth = 0;
    std::vector<TensorCheck> tensors;
};

/// Compares the analytic gradients currently stored in params[i]->grad with
/// central differences (loss(t+h) - loss(t-h)) / 2h. The loss must be a
/// deterministic function of the parameter values; two evaluations at the same
/// point that differ raise ProtocolError. Parameter values are restored.
GradCheckResult grad_check(const std::function<double()>& loss, std::span<ParamTensor* const> params,
                           const GradCheckOptions& options = {});

}  // namespace fsloc::numkit
