// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0

#include "gmas/replay.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "gmas/dataset.hpp"

namespace gmas {

ReplayBuffer ReplayBuffer::load(const std::string& path) {
  const DatasetHeader h = read_dataset_header(path);
  std::ifstream in(path, std::ios::binary);
  in.seekg(8 + 4 + 8 + 4);

  ReplayBuffer buf;
  buf.obs_dim_ = static_cast<int>(h.obs_dim);
  buf.obs_.resize(h.n * h.obs_dim);
  buf.next_.resize(h.n * h.obs_dim);
  buf.actions_.resize(h.n);
  buf.rewards_.resize(h.n);
  buf.discounts_.resize(h.n);

  // f32 payloads are little-endian on disk; this loader targets LE hosts
  static_assert(std::endian::native == std::endian::little, "big-endian loader not implemented");
  for (std::uint64_t i = 0; i < h.n; ++i) {
    in.read(reinterpret_cast<char*>(buf.obs_.data() + i * h.obs_dim), static_cast<std::streamsize>(h.obs_dim) * 4);
    char a;
    in.get(a);
    buf.actions_[i] = static_cast<std::uint8_t>(a);
    in.read(reinterpret_cast<char*>(&buf.rewards_[i]), 4);
    in.read(reinterpret_cast<char*>(&buf.discounts_[i]), 4);
    in.read(reinterpret_cast<char*>(buf.next_.data() + i * h.obs_dim), static_cast<std::streamsize>(h.obs_dim) * 4);
  }
  if (!in) throw std::runtime_error("gmas: truncated dataset: " + path);
  return buf;
}

ReplayBuffer ReplayBuffer::from_transitions(std::span<const maze::Transition> transitions) {
  ReplayBuffer buf;
  if (!transitions.empty()) buf.obs_dim_ = static_cast<int>(transitions[0].s.pixels.size());
  buf.obs_.reserve(transitions.size() * static_cast<std::size_t>(buf.obs_dim_));
  buf.next_.reserve(transitions.size() * static_cast<std::size_t>(buf.obs_dim_));
  for (const auto& t : transitions) {
    if (static_cast<int>(t.s.pixels.size()) != buf.obs_dim_ || static_cast<int>(t.s2.pixels.size()) != buf.obs_dim_)
      throw std::invalid_argument("gmas: inconsistent observation sizes in transitions");
    buf.obs_.insert(buf.obs_.end(), t.s.pixels.begin(), t.s.pixels.end());
    buf.next_.insert(buf.next_.end(), t.s2.pixels.begin(), t.s2.pixels.end());
    buf.actions_.push_back(t.a);
    buf.rewards_.push_back(t.r);
    buf.discounts_.push_back(t.discount);
  }
  return buf;
}

maze::Transition ReplayBuffer::transition(std::int64_t i) const {
  maze::Transition t;
  const auto s = obs(i);
  const auto s2 = next_obs(i);
  t.s.pixels.assign(s.begin(), s.end());
  t.s2.pixels.assign(s2.begin(), s2.end());
  t.a = actions_[static_cast<std::size_t>(i)];
  t.r = rewards_[static_cast<std::size_t>(i)];
  t.discount = discounts_[static_cast<std::size_t>(i)];
  return t;
}

std::vector<std::int64_t> ReplayBuffer::sample_batch(int batch_size, Rng& rng) const {
  if (size() == 0) throw std::logic_error("gmas: sample_batch on an empty replay buffer");
  if (batch_size <= 0) throw std::invalid_argument("gmas: batch_size must be positive");
  std::vector<std::int64_t> idx(static_cast<std::size_t>(batch_size));
  for (auto& i : idx) i = rng.uniform_i64(size());
  return idx;
}

std::vector<std::pair<std::int64_t, std::int64_t>> ReplayBuffer::sample_state_pairs(std::span<const std::int64_t> s1,
                                                                                    Rng& rng) const {
  if (size() < 2) throw std::logic_error("gmas: sample_state_pairs needs at least 2 buffered transitions");
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  pairs.reserve(s1.size());
  for (const std::int64_t first : s1) pairs.emplace_back(first, rng.uniform_i64(size()));
  return pairs;
}

std::vector<std::pair<std::int64_t, std::int64_t>> ReplayBuffer::sample_state_pairs(int batch_size, Rng& rng) const {
  if (size() < 2) throw std::logic_error("gmas: sample_state_pairs needs at least 2 buffered transitions");
  const std::vector<std::int64_t> s1 = sample_batch(batch_size, rng);
  return sample_state_pairs(s1, rng);
}

}  // namespace gmas
