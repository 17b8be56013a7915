// ncm/numerics/optimizer.h

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

#ifndef NCM_NUMERICS_OPTIMIZER_H_
#define NCM_NUMERICS_OPTIMIZER_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ncm/numerics/tensor.h"

namespace ncm {

// Ordered, uniquely named set of trainable tensors. Order is insertion order
// and is the order used by checkpoints and the optimizer.
class ParameterRegistry {
 public:
  // Registers `tensor` under `name` (marks it as requiring grad) and returns
  // it. Throws on a duplicate name.
  Tensor Add(const std::string &name, Tensor tensor);

  size_t size() const { return entries_.size(); }
  const std::vector<std::pair<std::string, Tensor>> &entries() const {
    return entries_;
  }
  const Tensor &Get(const std::string &name) const;
  int64_t NumScalars() const;
  void ZeroGrad();
  // Copies values (not gradients) from a registry with the same layout.
  void CopyValuesFrom(const ParameterRegistry &other);

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
};

// Bias-corrected Adam. Moments are laid out parallel to the registry.
class AdamOptimizer {
 public:
  AdamOptimizer(const ParameterRegistry &registry, AdamOptions options = {});

  // Applies one update with learning rate `lr`, then zeroes every gradient.
  // Throws if any registered parameter has no gradient.
  void Step(ParameterRegistry &registry, double lr);

  int64_t step() const { return step_; }
  const AdamOptions &options() const { return options_; }
  const std::vector<std::vector<double>> &first_moments() const { return m_; }
  const std::vector<std::vector<double>> &second_moments() const { return v_; }

 private:
  AdamOptions options_;
  int64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

// d_model^-0.5 * min(step^-0.5, step * warmup^-1.5).
double NoamLearningRate(int64_t step, int64_t d_model, int64_t warmup);

// Global L2 norm over all parameter gradients (missing gradients count as 0).
double GlobalGradNorm(const ParameterRegistry &registry);

// Rescales gradients so the global norm is at most `max_norm`. Returns the
// norm before clipping.
double ClipGradNorm(ParameterRegistry &registry, double max_norm);

}  // namespace ncm

#endif  // NCM_NUMERICS_OPTIMIZER_H_
