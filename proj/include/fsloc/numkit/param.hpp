// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>

#include "fsloc/numkit/matrix.hpp"

namespace fsloc::numkit {

/// A trainable tensor: value, accumulated gradient, and Adam moments, all of
/// the same shape.
struct ParamTensor {
    std::string name;
    Matrix value;
    Matrix grad;
    Matrix m;
    Matrix v;

    ParamTensor() = default;
    ParamTensor(std::string tensor_name, Matrix initial)
        : name(std::move(tensor_name)),
          value(std::move(initial)),
          grad(value.rows(), value.cols()),
          m(value.rows(), value.cols()),
          v(value.rows(), value.cols()) {}

    void zero_grad() { grad.fill(0.0); }
};

}  // namespace fsloc::numkit
