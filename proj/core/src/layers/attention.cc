// layers/attention.cc

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

#include "ncm/layers/attention.h"

#include <cmath>
#include <limits>

#include "ncm/common/error.h"
#include "ncm/numerics/ops.h"

namespace ncm {

AttentionMask AttentionMask::Full(int64_t rows, int64_t cols) {
  return {rows, cols, std::vector<uint8_t>(rows * cols, 1)};
}

AttentionMask AttentionMask::Causal(int64_t length) {
  AttentionMask m{length, length, std::vector<uint8_t>(length * length, 0)};
  for (int64_t t = 0; t < length; ++t)
    for (int64_t s = 0; s <= t; ++s) m.allowed[t * length + s] = 1;
  return m;
}

AttentionMask AttentionMask::KeyPadding(int64_t rows, int64_t valid_cols,
                                        int64_t cols) {
  NCM_CHECK(valid_cols >= 0 && valid_cols <= cols,
            "attention mask: valid columns ", valid_cols, " exceed ", cols);
  AttentionMask m{rows, cols, std::vector<uint8_t>(rows * cols, 0)};
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t c = 0; c < valid_cols; ++c) m.allowed[r * cols + c] = 1;
  return m;
}

MultiHeadAttention::MultiHeadAttention(ParameterRegistry &registry,
                                       const std::string &prefix,
                                       const LayerConfig &config, Rng &rng)
    : d_model_(config.d_model),
      num_heads_(config.num_heads),
      dropout_(config.dropout),
      wq_(registry, prefix + ".wq", config.d_model, config.d_model, rng),
      wk_(registry, prefix + ".wk", config.d_model, config.d_model, rng),
      wv_(registry, prefix + ".wv", config.d_model, config.d_model, rng),
      wo_(registry, prefix + ".wo", config.d_model, config.d_model, rng) {
  config.Validate();
}

Tensor MultiHeadAttention::Core(const Tensor &q, const Tensor &k,
                                const Tensor &v, const AttentionMask &mask,
                                const ForwardContext &ctx,
                                Tensor *weights) const {
  const int64_t lq = q.dim(0), lk = k.dim(0);
  NCM_CHECK(q.dim(1) == d_model_ && k.dim(1) == d_model_ &&
                v.dim(1) == d_model_ && v.dim(0) == lk,
            "attention: expected (len x ", d_model_, ") inputs, got q ",
            ShapeToString(q.shape()), " k ", ShapeToString(k.shape()), " v ",
            ShapeToString(v.shape()));
  NCM_CHECK(mask.rows == lq && mask.cols == lk, "attention: mask shape [",
            mask.rows, ", ", mask.cols, "] does not match [", lq, ", ", lk,
            "]");
  if (lk == 0) {
    if (weights) *weights = Tensor::Zeros({num_heads_, lq, 0});
    return Tensor::Zeros({lq, d_model_});
  }
  BoolMask fill{{lq, lk}, std::vector<uint8_t>(lq * lk)};
  bool any_masked = false;
  for (int64_t r = 0; r < lq; ++r) {
    bool any_allowed = false;
    for (int64_t c = 0; c < lk; ++c) {
      const bool ok = mask.allowed[r * lk + c];
      fill.values[r * lk + c] = !ok;
      any_allowed |= ok;
      any_masked |= !ok;
    }
    NCM_CHECK(any_allowed, "attention: query row ", r,
              " admits zero keys (softmax undefined)");
  }

  const int64_t dh = d_model_ / num_heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor> contexts, head_weights;
  for (int h = 0; h < num_heads_; ++h) {
    Tensor qh = num_heads_ == 1 ? q : Slice(q, 1, h * dh, dh);
    Tensor kh = num_heads_ == 1 ? k : Slice(k, 1, h * dh, dh);
    Tensor vh = num_heads_ == 1 ? v : Slice(v, 1, h * dh, dh);
    Tensor scores = Scale(MatMul(qh, Transpose(kh)), scale);
    if (any_masked)
      scores =
          MaskedFill(scores, fill, -std::numeric_limits<double>::infinity());
    Tensor w = Softmax(scores);
    if (weights) head_weights.push_back(Reshape(w, {1, lq, lk}));
    contexts.push_back(MatMul(Dropout(w, dropout_, ctx), vh));
  }
  if (weights) *weights = Concat(head_weights, 0);
  return num_heads_ == 1 ? contexts[0] : Concat(contexts, 1);
}

AttentionResult MultiHeadAttention::AttendProjected(
    const Tensor &q, const Tensor &k, const Tensor &v,
    const AttentionMask &mask, const ForwardContext &ctx) const {
  AttentionResult result;
  Tensor context = Core(q, k, v, mask, ctx, &result.weights);
  result.output = wo_.Forward(context);
  return result;
}

AttentionResult MultiHeadAttention::Forward(const Tensor &queries,
                                            const Tensor &keys,
                                            const Tensor &values,
                                            const AttentionMask &mask,
                                            const ForwardContext &ctx) const {
  NCM_CHECK(queries.rank() == 2 && keys.rank() == 2 && values.rank() == 2,
            "attention: inputs must be rank 2, got ",
            ShapeToString(queries.shape()), ", ", ShapeToString(keys.shape()),
            ", ", ShapeToString(values.shape()));
  return AttendProjected(ProjectQuery(queries), ProjectKey(keys),
                         ProjectValue(values), mask, ctx);
}

Tensor MultiHeadAttention::ForwardPacked(const Tensor &queries,
                                         const SegmentLayout &q_layout,
                                         const Tensor &keys_values,
                                         const SegmentLayout &kv_layout,
                                         MaskKind kind,
                                         const ForwardContext &ctx,
                                         std::vector<Tensor> *weights) const {
  NCM_CHECK(q_layout.size() == kv_layout.size(),
            "attention: ", q_layout.size(), " query segments vs ",
            kv_layout.size(), " key segments");
  NCM_CHECK(queries.dim(0) == q_layout.total() &&
                keys_values.dim(0) == kv_layout.total(),
            "attention: packed rows do not match segment layouts");
  Tensor q = ProjectQuery(queries);
  Tensor k = ProjectKey(keys_values);
  Tensor v = ProjectValue(keys_values);
  const bool single = q_layout.size() == 1;
  std::vector<Tensor> pieces;
  for (size_t i = 0; i < q_layout.size(); ++i) {
    const int64_t lq = q_layout.length(i), lk = kv_layout.length(i);
    if (lq == 0) continue;
    AttentionMask mask;
    if (kind == MaskKind::kCausal) {
      NCM_CHECK(lq == lk, "attention: causal mask needs equal lengths, got ",
                lq, " and ", lk);
      mask = AttentionMask::Causal(lq);
    } else {
      mask = AttentionMask::Full(lq, lk);
    }
    Tensor seg_weights;
    pieces.push_back(Core(single ? q : Slice(q, 0, q_layout.offset(i), lq),
                          single ? k : Slice(k, 0, kv_layout.offset(i), lk),
                          single ? v : Slice(v, 0, kv_layout.offset(i), lk),
                          mask, ctx, weights ? &seg_weights : nullptr));
    if (weights) weights->push_back(seg_weights);
  }
  if (pieces.empty()) return wo_.Forward(Tensor::Zeros({0, d_model_}));
  return wo_.Forward(pieces.size() == 1 ? pieces[0] : Concat(pieces, 0));
}

}  // namespace ncm
