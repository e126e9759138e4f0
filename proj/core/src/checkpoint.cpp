// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0

#include "gmas/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace gmas {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::map<std::string, Tensor>& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("gmas: cannot open checkpoint for writing: " + path);
  out.write(kCheckpointMagic, 8);
  put_u32(out, kCheckpointVersion);
  for (const auto& [name, t] : params) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t.data) put_f64(out, v);
  }
  if (!out) throw std::runtime_error("gmas: checkpoint write failed: " + path);
}

std::map<std::string, Tensor> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("gmas: cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw std::runtime_error("gmas: not a GMASCKPT file: " + path);
  const std::uint32_t version = get_u32(in);
  if (version != kCheckpointVersion)
    throw std::runtime_error("gmas: unsupported checkpoint version " + std::to_string(version));

  std::map<std::string, Tensor> params;
  while (true) {
    const std::uint32_t name_len = get_u32(in);
    if (in.eof()) break;
    if (!in || name_len > 4096) throw std::runtime_error("gmas: corrupt checkpoint record in " + path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint32_t rank = get_u32(in);
    if (rank > 2) throw std::runtime_error("gmas: corrupt checkpoint rank in " + path);
    std::vector<int> shape;
    std::int64_t numel = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const std::uint32_t d = get_u32(in);
      shape.push_back(static_cast<int>(d));
      numel *= d;
    }
    std::vector<double> data(static_cast<std::size_t>(numel));
    for (auto& v : data) v = get_f64(in);
    if (!in) throw std::runtime_error("gmas: truncated checkpoint: " + path);
    params.emplace(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return params;
}

}  // namespace gmas
