// numerics/optimizer.cc

// Copyright 2026  The ncm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "ncm/numerics/optimizer.h"

#include <algorithm>
#include <cmath>

#include "ncm/common/error.h"

namespace ncm {

Tensor ParameterRegistry::Add(const std::string &name, Tensor tensor) {
  NCM_CHECK(tensor.defined() && !tensor.impl()->node,
            "parameter '", name, "' must be a leaf tensor");
  for (const auto &[existing, t] : entries_)
    NCM_CHECK(existing != name, "duplicate parameter name '", name, "'");
  tensor.impl()->requires_grad = true;
  entries_.emplace_back(name, tensor);
  return tensor;
}

const Tensor &ParameterRegistry::Get(const std::string &name) const {
  for (const auto &[n, t] : entries_)
    if (n == name) return t;
  throw ValidationError("no parameter named '" + name + "'");
}

int64_t ParameterRegistry::NumScalars() const {
  int64_t total = 0;
  for (const auto &[n, t] : entries_) total += t.numel();
  return total;
}

void ParameterRegistry::ZeroGrad() {
  for (auto &[n, t] : entries_) t.ZeroGrad();
}

void ParameterRegistry::CopyValuesFrom(const ParameterRegistry &other) {
  NCM_CHECK(other.size() == size(), "parameter layout mismatch: ",
            other.size(), " vs ", size(), " tensors");
  for (size_t i = 0; i < entries_.size(); ++i) {
    const auto &[name, src] = other.entries_[i];
    auto &[dst_name, dst] = entries_[i];
    NCM_CHECK(name == dst_name && src.shape() == dst.shape(),
              "parameter layout mismatch at '", dst_name, "'");
    std::copy(src.data().begin(), src.data().end(),
              dst.mutable_data().begin());
  }
}

AdamOptimizer::AdamOptimizer(const ParameterRegistry &registry,
                             AdamOptions options)
    : options_(options) {
  for (const auto &[name, t] : registry.entries()) {
    m_.emplace_back(t.numel(), 0.0);
    v_.emplace_back(t.numel(), 0.0);
  }
}

void AdamOptimizer::Step(ParameterRegistry &registry, double lr) {
  NCM_CHECK(registry.size() == m_.size(),
            "adam: registry has ", registry.size(), " tensors, state has ",
            m_.size());
  for (const auto &[name, t] : registry.entries())
    NCM_CHECK(t.has_grad(), "adam: parameter '", name, "' has no gradient");
  ++step_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  size_t k = 0;
  for (auto &entry : registry.entries()) {
    Tensor t = entry.second;
    auto w = t.mutable_data();
    auto g = t.grad();
    auto &m = m_[k];
    auto &v = v_[k];
    for (size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + options_.eps);
    }
    t.ZeroGrad();
    ++k;
  }
}

double NoamLearningRate(int64_t step, int64_t d_model, int64_t warmup) {
  NCM_CHECK(step >= 1 && d_model >= 1 && warmup >= 1,
            "noam: step, d_model and warmup must be positive");
  const double s = static_cast<double>(step);
  return std::pow(static_cast<double>(d_model), -0.5) *
         std::min(std::pow(s, -0.5),
                  s * std::pow(static_cast<double>(warmup), -1.5));
}

double GlobalGradNorm(const ParameterRegistry &registry) {
  double sq = 0.0;
  for (const auto &[name, t] : registry.entries())
    for (double g : t.grad()) sq += g * g;
  return std::sqrt(sq);
}

double ClipGradNorm(ParameterRegistry &registry, double max_norm) {
  const double norm = GlobalGradNorm(registry);
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (auto &entry : registry.entries()) {
      Tensor t = entry.second;
      if (!t.has_grad()) continue;
      for (double &g : t.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

}  // namespace ncm
