// ncm/layers/layer_config.h

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

#ifndef NCM_LAYERS_LAYER_CONFIG_H_
#define NCM_LAYERS_LAYER_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "ncm/numerics/random.h"
#include "ncm/numerics/tensor.h"

namespace ncm {

struct LayerConfig {
  int d_model = 64;
  int num_heads = 4;
  int ffn_dim = 256;
  double dropout = 0.1;

  int head_dim() const { return d_model / num_heads; }
  // Throws ValidationError naming the offending field.
  void Validate() const;
};

// Per-call switches. Dropout is active only when `training` is set and an
// rng stream is supplied.
struct ForwardContext {
  bool training = false;
  Rng *rng = nullptr;

  bool dropout_active() const { return training && rng != nullptr; }
};

// Inverted dropout: zeroes each element with probability p and rescales the
// survivors by 1/(1-p). Identity when inactive.
Tensor Dropout(const Tensor &x, double p, const ForwardContext &ctx);

// Row lengths of sequences packed one after another along axis 0.
class SegmentLayout {
 public:
  SegmentLayout() = default;
  explicit SegmentLayout(std::vector<int64_t> lengths);

  size_t size() const { return lengths_.size(); }
  int64_t length(size_t i) const { return lengths_[i]; }
  int64_t offset(size_t i) const { return offsets_[i]; }
  int64_t total() const { return offsets_.back(); }
  const std::vector<int64_t> &lengths() const { return lengths_; }

 private:
  std::vector<int64_t> lengths_;
  std::vector<int64_t> offsets_{0};
};

}  // namespace ncm

#endif  // NCM_LAYERS_LAYER_CONFIG_H_
