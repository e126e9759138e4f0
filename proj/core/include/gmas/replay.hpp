// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0
//
// Fixed off-policy dataset store. Immutable after load; samplers take an
// explicit Rng so concurrent readers can run on independent streams.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gmas/maze.hpp"
#include "gmas/rng.hpp"

namespace gmas {

class ReplayBuffer {
 public:
  static ReplayBuffer load(const std::string& path);
  static ReplayBuffer from_transitions(std::span<const maze::Transition> transitions);

  std::int64_t size() const { return static_cast<std::int64_t>(actions_.size()); }
  int obs_dim() const { return obs_dim_; }

  std::span<const float> obs(std::int64_t i) const {
    return {obs_.data() + static_cast<std::size_t>(i) * obs_dim_, static_cast<std::size_t>(obs_dim_)};
  }
  std::span<const float> next_obs(std::int64_t i) const {
    return {next_.data() + static_cast<std::size_t>(i) * obs_dim_, static_cast<std::size_t>(obs_dim_)};
  }
  int action(std::int64_t i) const { return actions_[static_cast<std::size_t>(i)]; }
  float reward(std::int64_t i) const { return rewards_[static_cast<std::size_t>(i)]; }
  float discount(std::int64_t i) const { return discounts_[static_cast<std::size_t>(i)]; }

  maze::Transition transition(std::int64_t i) const;

  // Uniform with replacement. Throws on an empty buffer.
  std::vector<std::int64_t> sample_batch(int batch_size, Rng& rng) const;

  // Pairs for the representation-entropy loss: first components are the
  // given batch states, second components are independent uniform draws.
  std::vector<std::pair<std::int64_t, std::int64_t>> sample_state_pairs(std::span<const std::int64_t> s1,
                                                                        Rng& rng) const;
  // Convenience form that draws its own batch for the first components.
  std::vector<std::pair<std::int64_t, std::int64_t>> sample_state_pairs(int batch_size, Rng& rng) const;

 private:
  int obs_dim_ = maze::kObsDim;
  std::vector<float> obs_;
  std::vector<float> next_;
  std::vector<std::uint8_t> actions_;
  std::vector<float> rewards_;
  std::vector<float> discounts_;
};

}  // namespace gmas
