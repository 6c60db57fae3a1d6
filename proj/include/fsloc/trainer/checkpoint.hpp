// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fsloc/trainer/model.hpp"

namespace fsloc::trainer {

// FSLP container, little-endian:
//   "FSLP" | u32 version | u32 meta_len | meta (key=value lines)
//   | u32 tensor_count | per tensor: u32 name_len | name | u64 rows | u64 cols | f64 values
// Holds the trainable tensors under the stored flags plus the generator's
// running statistics. Optimizer moments are not stored.

using CheckpointMeta = std::map<std::string, std::string>;

struct Checkpoint {
    Model model;
    CheckpointMeta meta;  // model options plus caller-supplied entries
};

std::vector<unsigned char> encode_checkpoint(const Model& model, const CheckpointMeta& extra = {});
Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Model& model, const CheckpointMeta& extra = {});
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fsloc::trainer
