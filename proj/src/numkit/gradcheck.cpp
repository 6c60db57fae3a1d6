// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsloc/numkit/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "fsloc/errors.hpp"
#include "fsloc/numkit/rng.hpp"

namespace fsloc::numkit {

GradCheckResult grad_check(const std::function<double()>& loss, std::span<ParamTensor* const> params,
                           const GradCheckOptions& options) {
    if (!(options.step > 0.0)) {
        throw ValidationError("grad_check: step must be > 0");
    }
    const double base = loss();
    const double again = loss();
    if (base != again) {
        throw ProtocolError("grad_check: loss is not deterministic (" + std::to_string(base) + " vs " +
                            std::to_string(again) + "); disable or freeze dropout");
    }

    GradCheckResult result;
    RngStream rng(options.seed);
    const double h = options.step;
    for (std::size_t t = 0; t < params.size(); ++t) {
        ParamTensor& p = *params[t];
        TensorCheck check{p.name, 0.0, 0, 0};
        auto values = p.value.values();
        const auto grads = p.grad.values();
        RngStream tensor_rng = rng.split(t);
        const auto coords = tensor_rng.sample_without_replacement(values.size(), options.samples_per_tensor);
        for (const std::size_t i : coords) {
            const double saved = values[i];
            values[i] = saved + h;
            const double plus = loss();
            values[i] = saved - h;
            const double minus = loss();
            values[i] = saved;

            const double forward_slope = (plus - base) / h;
            const double backward_slope = (base - minus) / h;
            const double slope_scale = std::max({std::abs(forward_slope), std::abs(backward_slope), options.abs_floor});
            if (std::abs(forward_slope - backward_slope) > options.kink_tolerance * slope_scale) {
                ++check.skipped_nonsmooth;
                continue;
            }
            const double numeric = (plus - minus) / (2.0 * h);
            const double analytic = grads[i];
            const double denom = std::max(std::abs(numeric), options.abs_floor);
            check.max_rel_error = std::max(check.max_rel_error, std::abs(numeric - analytic) / denom);
            ++check.checked;
        }
        result.max_rel_error = std::max(result.max_rel_error, check.max_rel_error);
        result.checked += check.checked;
        result.skipped_nonsmooth += check.skipped_nonsmooth;
        result.tensors.push_back(std::move(check));
    }
    return result;
}

}  // namespace fsloc::numkit
