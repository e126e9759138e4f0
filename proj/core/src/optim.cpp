// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0

#include "gmas/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace gmas {

void Adam::step(std::map<std::string, Tensor>& params, const std::map<std::string, Tensor>& grads) {
  for (const auto& [name, g] : grads) {
    if (!all_finite(g.data))
      throw std::runtime_error("gmas: optimizer step rejected, non-finite gradient for parameter '" + name +
                               "' (divergence)");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (const auto& [name, g] : grads) {
    const auto it = params.find(name);
    if (it == params.end()) throw std::runtime_error("gmas: gradient for unknown parameter '" + name + "'");
    Tensor& p = it->second;
    if (g.data.size() != p.data.size())
      throw std::runtime_error("gmas: gradient shape mismatch for parameter '" + name + "'");
    auto& mom = state_[name];
    if (mom.m.empty()) {
      mom.m.assign(p.data.size(), 0.0);
      mom.v.assign(p.data.size(), 0.0);
    }
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      mom.m[i] = cfg_.beta1 * mom.m[i] + (1.0 - cfg_.beta1) * g.data[i];
      mom.v[i] = cfg_.beta2 * mom.v[i] + (1.0 - cfg_.beta2) * g.data[i] * g.data[i];
      const double mhat = mom.m[i] / bc1;
      const double vhat = mom.v[i] / bc2;
      p.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace gmas
