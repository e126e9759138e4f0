// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0

#include "gmas/dataset.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>
#include <vector>

namespace gmas {

namespace {

template <typename T>
void put_le(std::ostream& out, T v) {
  static_assert(std::is_integral_v<T>);
  unsigned char b[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char b[sizeof(T)];
  in.read(reinterpret_cast<char*>(b), sizeof(T));
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(b[i]) << (8 * i);
  return v;
}

void put_f32(std::ostream& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_le<std::uint32_t>(out, bits);
}

void put_f32_block(std::ostream& out, const float* v, std::size_t n) {
  // on a little-endian host the raw buffer already matches the format
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(v), static_cast<std::streamsize>(n * 4));
  } else {
    for (std::size_t i = 0; i < n; ++i) put_f32(out, v[i]);
  }
}

}  // namespace

DatasetWriter::DatasetWriter(const std::string& path, std::uint64_t n, std::uint32_t obs_dim)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path), expected_(n), obs_dim_(obs_dim) {
  if (!out_) throw std::runtime_error("gmas: cannot open dataset for writing: " + path);
  out_.write(kDatasetMagic, 8);
  put_le<std::uint32_t>(out_, kDatasetVersion);
  put_le<std::uint64_t>(out_, n);
  put_le<std::uint32_t>(out_, obs_dim);
}

DatasetWriter::~DatasetWriter() {
  if (!closed_ && written_ == expected_) {
    try {
      close();
    } catch (...) {
    }
  }
}

void DatasetWriter::append(const maze::Transition& t) {
  if (closed_) throw std::logic_error("gmas: append after close on dataset " + path_);
  if (t.s.pixels.size() != obs_dim_ || t.s2.pixels.size() != obs_dim_)
    throw std::invalid_argument("gmas: transition observation size does not match dataset obs_dim");
  if (written_ == expected_) throw std::logic_error("gmas: dataset " + path_ + " already holds the promised records");
  put_f32_block(out_, t.s.pixels.data(), obs_dim_);
  out_.put(static_cast<char>(t.a));
  put_f32(out_, t.r);
  put_f32(out_, t.discount);
  put_f32_block(out_, t.s2.pixels.data(), obs_dim_);
  ++written_;
}

void DatasetWriter::close() {
  if (closed_) return;
  closed_ = true;
  if (written_ != expected_)
    throw std::runtime_error("gmas: dataset " + path_ + " holds " + std::to_string(written_) + " records, expected " +
                             std::to_string(expected_));
  out_.flush();
  if (!out_) throw std::runtime_error("gmas: dataset write failed: " + path_);
  out_.close();
}

DatasetHeader read_dataset_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("gmas: cannot open dataset: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kDatasetMagic, 8) != 0) throw std::runtime_error("gmas: not a GMASDATA file: " + path);
  DatasetHeader h;
  h.version = get_le<std::uint32_t>(in);
  h.n = get_le<std::uint64_t>(in);
  h.obs_dim = get_le<std::uint32_t>(in);
  if (!in) throw std::runtime_error("gmas: truncated dataset header: " + path);
  if (h.version != kDatasetVersion)
    throw std::runtime_error("gmas: unsupported dataset version " + std::to_string(h.version));
  return h;
}

}  // namespace gmas
