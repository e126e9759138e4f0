// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0
//
// GMASCKPT parameter checkpoint format:
//   magic "GMASCKPT", version u32, then per-parameter records of
//   (name_len u32, name bytes, rank u32, dims u32[rank], f64 payload),
//   everything little-endian.

#pragma once

#include <map>
#include <string>

#include "gmas/tensor.hpp"

namespace gmas {

inline constexpr char kCheckpointMagic[8] = {'G', 'M', 'A', 'S', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const std::map<std::string, Tensor>& params);
std::map<std::string, Tensor> load_checkpoint(const std::string& path);

}  // namespace gmas
