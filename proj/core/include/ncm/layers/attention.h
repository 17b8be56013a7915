// ncm/layers/attention.h

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

#ifndef NCM_LAYERS_ATTENTION_H_
#define NCM_LAYERS_ATTENTION_H_

#include <cstdint>
#include <string>
#include <vector>

#include "ncm/layers/layer_config.h"
#include "ncm/layers/linear.h"
#include "ncm/numerics/optimizer.h"

namespace ncm {

// (query_len x key_len) boolean matrix; true marks an attendable key.
struct AttentionMask {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<uint8_t> allowed;

  static AttentionMask Full(int64_t rows, int64_t cols);
  // Entry (t, t') is attendable iff t' <= t.
  static AttentionMask Causal(int64_t length);
  // Full attention over the first `valid_cols` keys; the rest are padding.
  static AttentionMask KeyPadding(int64_t rows, int64_t valid_cols,
                                  int64_t cols);

  bool at(int64_t r, int64_t c) const { return allowed[r * cols + c]; }
};

enum class MaskKind { kFull, kCausal };

struct AttentionResult {
  Tensor output;   // (len_q x d_model)
  Tensor weights;  // (heads x len_q x len_k)
};

// Scaled dot-product multi-head attention with separate query/key/value and
// output projections. Heads are contiguous column blocks of the projections.
class MultiHeadAttention {
 public:
  MultiHeadAttention(ParameterRegistry &registry, const std::string &prefix,
                     const LayerConfig &config, Rng &rng);

  AttentionResult Forward(const Tensor &queries, const Tensor &keys,
                          const Tensor &values, const AttentionMask &mask,
                          const ForwardContext &ctx) const;

  // Attention over packed sequences: query segment i attends only to key
  // segment i. A key segment of length zero yields a zero context (before
  // the output projection). When `weights` is non-null, the per-segment
  // (heads x len_q x len_k) weight tensors are appended to it.
  Tensor ForwardPacked(const Tensor &queries, const SegmentLayout &q_layout,
                       const Tensor &keys_values,
                       const SegmentLayout &kv_layout, MaskKind kind,
                       const ForwardContext &ctx,
                       std::vector<Tensor> *weights = nullptr) const;

  // Pieces used by incremental decoding.
  Tensor ProjectQuery(const Tensor &x) const { return wq_.Forward(x); }
  Tensor ProjectKey(const Tensor &x) const { return wk_.Forward(x); }
  Tensor ProjectValue(const Tensor &x) const { return wv_.Forward(x); }
  // Attention on already projected q/k/v, followed by the output projection.
  AttentionResult AttendProjected(const Tensor &q, const Tensor &k,
                                  const Tensor &v, const AttentionMask &mask,
                                  const ForwardContext &ctx) const;

  int num_heads() const { return num_heads_; }

 private:
  // Concatenated head contexts (len_q x d_model), no output projection.
  Tensor Core(const Tensor &q, const Tensor &k, const Tensor &v,
              const AttentionMask &mask, const ForwardContext &ctx,
              Tensor *weights) const;

  int d_model_;
  int num_heads_;
  double dropout_;
  Linear wq_, wk_, wv_, wo_;
};

}  // namespace ncm

#endif  // NCM_LAYERS_ATTENTION_H_
