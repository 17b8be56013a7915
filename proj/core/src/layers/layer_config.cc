// layers/layer_config.cc

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

#include "ncm/layers/layer_config.h"

#include "ncm/common/error.h"
#include "ncm/numerics/ops.h"

namespace ncm {

void LayerConfig::Validate() const {
  NCM_CHECK(d_model > 0, "layer config: d_model must be positive, got ",
            d_model);
  NCM_CHECK(num_heads > 0, "layer config: num_heads must be positive, got ",
            num_heads);
  NCM_CHECK(d_model % num_heads == 0, "layer config: d_model ", d_model,
            " not divisible by num_heads ", num_heads);
  NCM_CHECK(d_model % 2 == 0, "layer config: d_model must be even, got ",
            d_model);
  NCM_CHECK(ffn_dim > 0, "layer config: ffn_dim must be positive, got ",
            ffn_dim);
  NCM_CHECK(dropout >= 0.0 && dropout < 1.0,
            "layer config: dropout must lie in [0, 1), got ", dropout);
}

Tensor Dropout(const Tensor &x, double p, const ForwardContext &ctx) {
  if (!ctx.dropout_active() || p <= 0.0) return x;
  std::bernoulli_distribution keep(1.0 - p);
  const double scale = 1.0 / (1.0 - p);
  std::vector<double> mask(x.numel());
  for (double &m : mask) m = keep(*ctx.rng) ? scale : 0.0;
  return Mul(x, Tensor::FromData(x.shape(), std::move(mask)));
}

SegmentLayout::SegmentLayout(std::vector<int64_t> lengths)
    : lengths_(std::move(lengths)) {
  for (int64_t len : lengths_) {
    NCM_CHECK(len >= 0, "segment layout: negative length ", len);
    offsets_.push_back(offsets_.back() + len);
  }
}

}  // namespace ncm
