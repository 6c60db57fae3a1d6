// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fsloc/dataio/synthetic.hpp"
#include "fsloc/numkit/gradcheck.hpp"

namespace fsloc::trainer {

struct ModuleCheck {
    std::string module;
    numkit::GradCheckResult result;
};

/// Small synthetic dataset for finite-difference checks: untrimmed queries of
/// at most 12 snippets and trimmed references of at most 4.
dataio::SyntheticSpec toy_spec(std::uint64_t seed);

/// Full model (encoder, similarity, generator, TCAM, pooling, loss) on a
/// 3-way 1-shot episode with frozen dropout and batch statistics.
ModuleCheck check_full_model(std::uint64_t seed, const numkit::GradCheckOptions& options);

/// Per-module checks of the analytic backward passes, plus the full model.
std::vector<ModuleCheck> run_gradcheck_suite(std::uint64_t seed, const numkit::GradCheckOptions& options);

}  // namespace fsloc::trainer
