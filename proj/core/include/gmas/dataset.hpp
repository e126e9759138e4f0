// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0
//
// GMASDATA off-policy dataset format:
//   magic "GMASDATA", version u32, n u64, obs_dim u32, then n records of
//   (obs f32[obs_dim], action u8, reward f32, discount f32,
//    next_obs f32[obs_dim]), everything little-endian.

#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include "gmas/maze.hpp"

namespace gmas {

inline constexpr char kDatasetMagic[8] = {'G', 'M', 'A', 'S', 'D', 'A', 'T', 'A'};
inline constexpr std::uint32_t kDatasetVersion = 1;

// Streams records straight to disk so large collections never sit in memory.
// close() verifies that exactly the promised number of records was appended.
class DatasetWriter {
 public:
  DatasetWriter(const std::string& path, std::uint64_t n, std::uint32_t obs_dim = maze::kObsDim);
  ~DatasetWriter();

  void append(const maze::Transition& t);
  void close();

 private:
  std::ofstream out_;
  std::string path_;
  std::uint64_t expected_;
  std::uint64_t written_ = 0;
  std::uint32_t obs_dim_;
  bool closed_ = false;
};

struct DatasetHeader {
  std::uint32_t version = 0;
  std::uint64_t n = 0;
  std::uint32_t obs_dim = 0;
};

DatasetHeader read_dataset_header(const std::string& path);

}  // namespace gmas
