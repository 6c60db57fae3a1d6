// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>

#include "fsloc/numkit/param.hpp"

namespace fsloc::numkit {

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;
    std::uint64_t step_count = 0;

    /// Throws ValidationError when a hyperparameter is out of range.
    void validate() const;
};

/// One Adam step with bias correction. Weight decay is added to the gradient
/// as an L2 term before the moment update. Gradients are zeroed afterwards and
/// cfg.step_count is incremented. Throws NumericError naming the parameter if
/// any gradient is NaN.
void adam_step(std::span<ParamTensor* const> params, AdamConfig& cfg);

}  // namespace fsloc::numkit
