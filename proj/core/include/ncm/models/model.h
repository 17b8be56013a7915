// ncm/models/model.h

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

#ifndef NCM_MODELS_MODEL_H_
#define NCM_MODELS_MODEL_H_

#include <memory>
#include <span>
#include <vector>

#include "ncm/layers/blocks.h"
#include "ncm/layers/embedding.h"
#include "ncm/models/model_config.h"
#include "ncm/models/vocabulary.h"

namespace ncm {

// One training or scoring item.  is ignored by the recognizer.
struct SequenceExample {
  Tensor frames;                // I x feature_dim
  std::vector<int> hypothesis;  // C
  std::vector<int> reference;   // W, content ids only
};

// Encoder output for one utterance. The recognizer and the cross-modal
// corrector produce one memory; the separate corrector produces the speech
// memory f^L and the text memory g^M, in that order.
struct EncodedMemory {
  Architecture arch = Architecture::kAsr;
  std::vector<Tensor> memories;
  int64_t speech_len = 0;  // I'
  int64_t text_len = 0;    // J

  // Row of the separator in the cross-modal memory.
  int64_t separator_index() const { return speech_len; }
};

// Per-block self-attention cache of the emitted prefix. Copies are cheap and
// independent: every step replaces the cached tensors instead of mutating
// them.
class DecoderState {
 public:
  int64_t length() const { return length_; }

 private:
  friend class Model;
  uint64_t model_id_ = 0;
  std::shared_ptr<const std::vector<std::vector<ProjectedMemory>>> memory_;
  std::vector<BlockCache> caches_;
  int64_t length_ = 0;
};

// Teacher-forced log-probabilities for a packed batch. Rows of example b
// occupy layout segment b and score reference[b] + eos.
struct BatchScores {
  Tensor logp;  // (sum_b (T_b + 1)) x V
  SegmentLayout layout;
  std::vector<int> targets;
};

// Recognizer, cross-modal corrector or separate corrector, selected by
// ModelConfig::arch. Parameters live in the model's registry.
class Model {
 public:
  Model(const ModelConfig &config, uint64_t seed);
  Model(const Model &) = delete;
  Model &operator=(const Model &) = delete;

  const ModelConfig &config() const { return config_; }
  const Vocabulary &vocabulary() const { return vocab_; }
  ParameterRegistry &parameters() { return registry_; }
  const ParameterRegistry &parameters() const { return registry_; }
  int64_t NumParameters() const { return registry_.NumScalars(); }

  // When `encoder_weights` is non-null, receives per encoder block the
  // (heads x len x len) self-attention weights of the first memory stack.
  EncodedMemory Encode(const Tensor &frames, std::span<const int> hypothesis,
                       const ForwardContext &ctx = {},
                       std::vector<Tensor> *encoder_weights = nullptr) const;

  BatchScores ForwardBatch(std::span<const SequenceExample> batch,
                           const ForwardContext &ctx = {}) const;
  // (T + 1) x V log-probabilities for one example.
  Tensor Forward(const SequenceExample &example,
                 const ForwardContext &ctx = {}) const;

  DecoderState Start(const EncodedMemory &memory) const;
  // Feeds `last_token` (bos on the first call) and returns log-probabilities
  // over the vocabulary for the next position.
  std::vector<double> Step(DecoderState &state, int last_token) const;

 private:
  struct PackedMemories {
    std::vector<MemoryView> views;
    std::vector<int64_t> speech_lens, text_lens;
  };
  PackedMemories EncodePacked(std::span<const SequenceExample> batch,
                              const ForwardContext &ctx,
                              std::vector<Tensor> *encoder_weights) const;
  void CheckExample(const Tensor &frames, std::span<const int> hypothesis,
                    std::span<const int> reference) const;
  Tensor RunStack(const std::vector<std::unique_ptr<EncoderBlock>> &blocks,
                  const LayerNormLayer &norm, Tensor x,
                  const SegmentLayout &layout, const ForwardContext &ctx,
                  std::vector<Tensor> *weights) const;

  ModelConfig config_;
  Vocabulary vocab_;
  uint64_t id_;
  ParameterRegistry registry_;
  std::unique_ptr<SpeechEmbedding> speech_embed_;
  std::unique_ptr<TextEmbedding> hyp_embed_;
  std::unique_ptr<TextEmbedding> target_embed_;
  // Recognizer speech encoder, cross-modal joint encoder, or separate-model
  // text encoder.
  std::vector<std::unique_ptr<EncoderBlock>> encoder_;
  std::unique_ptr<LayerNormLayer> encoder_norm_;
  std::vector<std::unique_ptr<EncoderBlock>> speech_encoder_;
  std::unique_ptr<LayerNormLayer> speech_encoder_norm_;
  std::vector<std::unique_ptr<DecoderBlock>> decoder_;
  std::unique_ptr<LayerNormLayer> decoder_norm_;
  std::unique_ptr<Linear> output_;
};

}  // namespace ncm

#endif  // NCM_MODELS_MODEL_H_
