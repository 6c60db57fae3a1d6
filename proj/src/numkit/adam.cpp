// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsloc/numkit/adam.hpp"

#include <cmath>
#include <string>

#include "fsloc/errors.hpp"

namespace fsloc::numkit {

void AdamConfig::validate() const {
    if (!(learning_rate > 0.0)) {
        throw ValidationError("adam: learning_rate must be > 0");
    }
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
        throw ValidationError("adam: beta1 and beta2 must lie in (0, 1)");
    }
    if (!(epsilon > 0.0)) {
        throw ValidationError("adam: epsilon must be > 0");
    }
    if (!(weight_decay >= 0.0)) {
        throw ValidationError("adam: weight_decay must be >= 0");
    }
}

void adam_step(std::span<ParamTensor* const> params, AdamConfig& cfg) {
    cfg.validate();
    for (const ParamTensor* p : params) {
        for (const double g : p->grad.values()) {
            if (std::isnan(g)) {
                throw NumericError("adam_step: NaN gradient in parameter '" + p->name + "'");
            }
        }
    }
    const auto step = static_cast<double>(cfg.step_count + 1);
    const double correction1 = 1.0 - std::pow(cfg.beta1, step);
    const double correction2 = 1.0 - std::pow(cfg.beta2, step);
    const double lr = cfg.learning_rate;
    const double b1 = cfg.beta1;
    const double b2 = cfg.beta2;
    const double eps = cfg.epsilon;
    const double decay = cfg.weight_decay;
    for (ParamTensor* p : params) {
        double* value = p->value.data();
        double* grad = p->grad.data();
        double* m = p->m.data();
        double* v = p->v.data();
        const std::size_t n = p->value.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double g = grad[i] + decay * value[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
            grad[i] = 0.0;
        }
    }
    ++cfg.step_count;
}

}  // namespace fsloc::numkit
