// ncm/layers/blocks.h

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

#ifndef NCM_LAYERS_BLOCKS_H_
#define NCM_LAYERS_BLOCKS_H_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ncm/layers/attention.h"
#include "ncm/layers/linear.h"

namespace ncm {

// Pre-norm transformer encoder block:
//   x + SelfAttn(LN(x)), then + FFN(LN(.)).
class EncoderBlock {
 public:
  EncoderBlock(ParameterRegistry &registry, const std::string &prefix,
               const LayerConfig &config, Rng &rng);

  AttentionResult Forward(const Tensor &input, const AttentionMask &self_mask,
                          const ForwardContext &ctx) const;

  // Full (non-causal) self-attention within each packed segment.
  Tensor ForwardPacked(const Tensor &input, const SegmentLayout &layout,
                       const ForwardContext &ctx,
                       std::vector<Tensor> *weights = nullptr) const;

 private:
  LayerNormLayer norm_attn_;
  MultiHeadAttention attn_;
  LayerNormLayer norm_ffn_;
  FeedForward ffn_;
};

// One encoder output that decoder blocks attend to.
struct MemoryView {
  Tensor memory;
  SegmentLayout layout;
};

// Key/value projections of one memory for one decoder block.
struct ProjectedMemory {
  Tensor keys;
  Tensor values;
};

// Self-attention keys/values of the prefix emitted so far, one block.
struct BlockCache {
  Tensor keys;    // (t x d_model)
  Tensor values;  // (t x d_model)
};

// Pre-norm transformer decoder block: masked self-attention, source-target
// attention over one or more memories, then FFN, each with a residual. With
// two memories the two contexts are concatenated (2 d_model) and linearly
// projected back to d_model before the residual add.
class DecoderBlock {
 public:
  DecoderBlock(ParameterRegistry &registry, const std::string &prefix,
               const LayerConfig &config, int num_memories, Rng &rng);

  struct Output {
    Tensor output;
    std::vector<Tensor> src_tgt_weights;  // one per memory
  };

  // Single sequence, single memory (or one per memory).
  Output Forward(const Tensor &target, const std::vector<Tensor> &memories,
                 const AttentionMask &causal_mask,
                 const std::vector<AttentionMask> &memory_masks,
                 const ForwardContext &ctx) const;

  Tensor ForwardPacked(const Tensor &target, const SegmentLayout &layout,
                       const std::vector<MemoryView> &memories,
                       const ForwardContext &ctx) const;

  std::vector<ProjectedMemory> ProjectMemories(
      const std::vector<Tensor> &memories) const;

  // Consumes one new target row (1 x d_model) given the cache of earlier
  // rows; appends this row's keys/values to `cache`.
  Tensor Step(const Tensor &row, BlockCache &cache,
              const std::vector<ProjectedMemory> &memories) const;

  int num_memories() const { return static_cast<int>(src_attn_.size()); }

  // Width of the concatenated context fed to the combining projection.
  int context_width() const { return context_width_; }

 private:
  Tensor CombineContexts(const std::vector<Tensor> &contexts) const;

  LayerNormLayer norm_self_;
  MultiHeadAttention self_attn_;
  LayerNormLayer norm_src_;
  std::vector<std::unique_ptr<MultiHeadAttention>> src_attn_;
  std::optional<Linear> combine_;
  LayerNormLayer norm_ffn_;
  FeedForward ffn_;
  int context_width_;
};

}  // namespace ncm

#endif  // NCM_LAYERS_BLOCKS_H_
