// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "omvae/matrix.hpp"
#include "omvae/model.hpp"
#include "omvae/ontology.hpp"

namespace omvae {

inline constexpr int kCheckpointFormatVersion = 1;

// 64-bit FNV-1a over the shape (two little-endian u64) followed by the IEEE
// bit pattern of every entry in row-major order. Rendered as "fnv1a64:<hex>".
std::string mask_digest(const Matrix& mask);

// FNV-1a 64 of an arbitrary byte string, hex encoded.
std::string fnv1a64_hex(std::string_view bytes);

// {"format_version":1, "config_digest":..., "dims":{...},
//  "layers":[{"name", "rows", "cols", "weight":[row-major], "bias":[...], "mask_digest"}]}
std::string checkpoint_to_json(const MultiTaskVae& model, std::string_view config_digest = "");

// Rebuilds the model using masks derived from `masks`; every layer's stored
// mask digest must match, otherwise ValidationError.
MultiTaskVae checkpoint_from_json(std::string_view json, const MaskPair& masks);

void save_checkpoint(const std::filesystem::path& path, const MultiTaskVae& model,
                     std::string_view config_digest = "");
MultiTaskVae load_checkpoint(const std::filesystem::path& path, const MaskPair& masks);

}  // namespace omvae
