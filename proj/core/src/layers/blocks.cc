// layers/blocks.cc

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

#include "ncm/layers/blocks.h"

#include "ncm/common/error.h"
#include "ncm/numerics/ops.h"

namespace ncm {

EncoderBlock::EncoderBlock(ParameterRegistry &registry,
                           const std::string &prefix, const LayerConfig &config,
                           Rng &rng)
    : norm_attn_(registry, prefix + ".norm_attn", config.d_model),
      attn_(registry, prefix + ".self_attn", config, rng),
      norm_ffn_(registry, prefix + ".norm_ffn", config.d_model),
      ffn_(registry, prefix + ".ffn", config, rng) {}

AttentionResult EncoderBlock::Forward(const Tensor &input,
                                      const AttentionMask &self_mask,
                                      const ForwardContext &ctx) const {
  Tensor normed = norm_attn_.Forward(input);
  AttentionResult attn = attn_.Forward(normed, normed, normed, self_mask, ctx);
  Tensor x = Add(input, attn.output);
  attn.output = Add(x, ffn_.Forward(norm_ffn_.Forward(x), ctx));
  return attn;
}

Tensor EncoderBlock::ForwardPacked(const Tensor &input,
                                   const SegmentLayout &layout,
                                   const ForwardContext &ctx,
                                   std::vector<Tensor> *weights) const {
  Tensor normed = norm_attn_.Forward(input);
  Tensor x = Add(input, attn_.ForwardPacked(normed, layout, normed, layout,
                                            MaskKind::kFull, ctx, weights));
  return Add(x, ffn_.Forward(norm_ffn_.Forward(x), ctx));
}

DecoderBlock::DecoderBlock(ParameterRegistry &registry,
                           const std::string &prefix, const LayerConfig &config,
                           int num_memories, Rng &rng)
    : norm_self_(registry, prefix + ".norm_self", config.d_model),
      self_attn_(registry, prefix + ".self_attn", config, rng),
      norm_src_(registry, prefix + ".norm_src", config.d_model),
      norm_ffn_(registry, prefix + ".norm_ffn", config.d_model),
      ffn_(registry, prefix + ".ffn", config, rng),
      context_width_(config.d_model * num_memories) {
  NCM_CHECK(num_memories == 1 || num_memories == 2,
            "decoder block: 1 or 2 memories supported, got ", num_memories);
  for (int m = 0; m < num_memories; ++m) {
    const std::string name =
        num_memories == 1 ? ".src_attn" : ".src_attn" + std::to_string(m);
    src_attn_.push_back(
        std::make_unique<MultiHeadAttention>(registry, prefix + name, config,
                                             rng));
  }
  if (num_memories > 1)
    combine_.emplace(registry, prefix + ".combine", context_width_,
                     config.d_model, rng);
}

Tensor DecoderBlock::CombineContexts(const std::vector<Tensor> &contexts) const {
  if (contexts.size() == 1) return contexts[0];
  return combine_->Forward(Concat(contexts, 1));
}

DecoderBlock::Output DecoderBlock::Forward(
    const Tensor &target, const std::vector<Tensor> &memories,
    const AttentionMask &causal_mask,
    const std::vector<AttentionMask> &memory_masks,
    const ForwardContext &ctx) const {
  NCM_CHECK(memories.size() == src_attn_.size() &&
                memory_masks.size() == src_attn_.size(),
            "decoder block: expected ", src_attn_.size(), " memories, got ",
            memories.size());
  Output out;
  Tensor normed = norm_self_.Forward(target);
  Tensor x = Add(target, self_attn_
                             .Forward(normed, normed, normed, causal_mask, ctx)
                             .output);
  Tensor q = norm_src_.Forward(x);
  std::vector<Tensor> contexts;
  for (size_t m = 0; m < memories.size(); ++m) {
    AttentionResult r = src_attn_[m]->Forward(q, memories[m], memories[m],
                                              memory_masks[m], ctx);
    contexts.push_back(r.output);
    out.src_tgt_weights.push_back(r.weights);
  }
  x = Add(x, CombineContexts(contexts));
  out.output = Add(x, ffn_.Forward(norm_ffn_.Forward(x), ctx));
  return out;
}

Tensor DecoderBlock::ForwardPacked(const Tensor &target,
                                   const SegmentLayout &layout,
                                   const std::vector<MemoryView> &memories,
                                   const ForwardContext &ctx) const {
  NCM_CHECK(memories.size() == src_attn_.size(), "decoder block: expected ",
            src_attn_.size(), " memories, got ", memories.size());
  Tensor normed = norm_self_.Forward(target);
  Tensor x = Add(target, self_attn_.ForwardPacked(normed, layout, normed,
                                                  layout, MaskKind::kCausal,
                                                  ctx));
  Tensor q = norm_src_.Forward(x);
  std::vector<Tensor> contexts;
  for (size_t m = 0; m < memories.size(); ++m)
    contexts.push_back(src_attn_[m]->ForwardPacked(
        q, layout, memories[m].memory, memories[m].layout, MaskKind::kFull,
        ctx));
  x = Add(x, CombineContexts(contexts));
  return Add(x, ffn_.Forward(norm_ffn_.Forward(x), ctx));
}

std::vector<ProjectedMemory> DecoderBlock::ProjectMemories(
    const std::vector<Tensor> &memories) const {
  NCM_CHECK(memories.size() == src_attn_.size(), "decoder block: expected ",
            src_attn_.size(), " memories, got ", memories.size());
  std::vector<ProjectedMemory> out;
  for (size_t m = 0; m < memories.size(); ++m)
    out.push_back({src_attn_[m]->ProjectKey(memories[m]),
                   src_attn_[m]->ProjectValue(memories[m])});
  return out;
}

Tensor DecoderBlock::Step(const Tensor &row, BlockCache &cache,
                          const std::vector<ProjectedMemory> &memories) const {
  NCM_CHECK(row.rank() == 2 && row.dim(0) == 1,
            "decoder step: expected one row, got ", ShapeToString(row.shape()));
  const ForwardContext ctx;
  Tensor normed = norm_self_.Forward(row);
  Tensor k = self_attn_.ProjectKey(normed);
  Tensor v = self_attn_.ProjectValue(normed);
  if (cache.keys.defined()) {
    cache.keys = Concat(std::vector<Tensor>{cache.keys, k}, 0);
    cache.values = Concat(std::vector<Tensor>{cache.values, v}, 0);
  } else {
    cache.keys = k;
    cache.values = v;
  }
  const int64_t t = cache.keys.dim(0);
  Tensor x = Add(row, self_attn_
                          .AttendProjected(self_attn_.ProjectQuery(normed),
                                           cache.keys, cache.values,
                                           AttentionMask::Full(1, t), ctx)
                          .output);
  Tensor normed_src = norm_src_.Forward(x);
  std::vector<Tensor> contexts;
  for (size_t m = 0; m < memories.size(); ++m) {
    const int64_t lk = memories[m].keys.dim(0);
    contexts.push_back(src_attn_[m]
                           ->AttendProjected(src_attn_[m]->ProjectQuery(
                                                 normed_src),
                                             memories[m].keys,
                                             memories[m].values,
                                             AttentionMask::Full(1, lk), ctx)
                           .output);
  }
  x = Add(x, CombineContexts(contexts));
  return Add(x, ffn_.Forward(norm_ffn_.Forward(x), ctx));
}

}  // namespace ncm
