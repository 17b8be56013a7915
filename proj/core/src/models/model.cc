// models/model.cc

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

#include "ncm/models/model.h"

#include <atomic>

#include "ncm/common/error.h"
#include "ncm/numerics/ops.h"

namespace ncm {

namespace {

uint64_t NextModelId() {
  static std::atomic<uint64_t> counter{0};
  return ++counter;
}

std::vector<std::unique_ptr<EncoderBlock>> MakeStack(
    ParameterRegistry &registry, const std::string &prefix, int count,
    const LayerConfig &config, Rng &rng) {
  std::vector<std::unique_ptr<EncoderBlock>> blocks;
  for (int i = 0; i < count; ++i)
    blocks.push_back(std::make_unique<EncoderBlock>(
        registry, prefix + ".block" + std::to_string(i), config, rng));
  return blocks;
}

Tensor ConcatRows(const std::vector<Tensor> &parts, int d_model) {
  if (parts.empty()) return Tensor::Zeros({0, d_model});
  if (parts.size() == 1) return parts[0];
  return Concat(parts, 0);
}

}  // namespace

Model::Model(const ModelConfig &config, uint64_t seed)
    : config_(config), vocab_(config.num_content_tokens), id_(NextModelId()) {
  config_.Validate();
  Rng rng = MakeRng(seed, {0x6d6f64656cULL});
  const LayerConfig &lc = config_.layer;
  const int d = lc.d_model;
  const int v = config_.vocab_size();
  speech_embed_ = std::make_unique<SpeechEmbedding>(
      registry_, "speech_embed", config_.feature_dim, config_.conv_channels, d,
      rng);
  if (config_.uses_hypothesis())
    hyp_embed_ = std::make_unique<TextEmbedding>(registry_, "hyp_embed", v, d,
                                                 rng);
  if (config_.arch == Architecture::kSeparate) {
    speech_encoder_ = MakeStack(registry_, "speech_encoder",
                                config_.speech_encoder_blocks, lc, rng);
    speech_encoder_norm_ =
        std::make_unique<LayerNormLayer>(registry_, "speech_encoder.norm", d);
  }
  const std::string enc =
      config_.arch == Architecture::kSeparate ? "text_encoder" : "encoder";
  encoder_ = MakeStack(registry_, enc, config_.encoder_blocks, lc, rng);
  encoder_norm_ = std::make_unique<LayerNormLayer>(registry_, enc + ".norm", d);
  target_embed_ =
      std::make_unique<TextEmbedding>(registry_, "target_embed", v, d, rng);
  const int num_memories = config_.arch == Architecture::kSeparate ? 2 : 1;
  for (int i = 0; i < config_.decoder_blocks; ++i)
    decoder_.push_back(std::make_unique<DecoderBlock>(
        registry_, "decoder.block" + std::to_string(i), lc, num_memories,
        rng));
  decoder_norm_ = std::make_unique<LayerNormLayer>(registry_, "decoder.norm", d);
  output_ = std::make_unique<Linear>(registry_, "output", d, v, rng,
                                     LinearInit::kZero);
}

void Model::CheckExample(const Tensor &frames, std::span<const int> hypothesis,
                         std::span<const int> reference) const {
  NCM_CHECK(frames.defined() && frames.rank() == 2 &&
                frames.dim(1) == config_.feature_dim,
            "model: frames must be (I x ", config_.feature_dim, "), got ",
            frames.defined() ? ShapeToString(frames.shape()) : "<none>");
  NCM_CHECK(frames.dim(0) <= config_.max_source_frames, "model: ",
            frames.dim(0), " frames exceed max_source_frames ",
            config_.max_source_frames);
  NCM_CHECK(static_cast<int64_t>(reference.size()) <= config_.max_target_len,
            "model: reference length ", reference.size(),
            " exceeds max_target_len ", config_.max_target_len);
  for (int id : reference)
    NCM_CHECK(vocab_.IsContent(id), "model: reference holds non-content id ",
              id);
  if (!config_.uses_hypothesis()) return;
  NCM_CHECK(static_cast<int64_t>(hypothesis.size()) <= config_.max_target_len,
            "model: hypothesis length ", hypothesis.size(),
            " exceeds max_target_len ", config_.max_target_len);
  for (int id : hypothesis)
    NCM_CHECK(vocab_.IsContent(id), "model: hypothesis holds non-content id ",
              id);
}

Tensor Model::RunStack(const std::vector<std::unique_ptr<EncoderBlock>> &blocks,
                       const LayerNormLayer &norm, Tensor x,
                       const SegmentLayout &layout, const ForwardContext &ctx,
                       std::vector<Tensor> *weights) const {
  if (layout.total() == 0) return x;
  for (const auto &block : blocks) {
    std::vector<Tensor> w;
    x = block->ForwardPacked(x, layout, ctx, weights ? &w : nullptr);
    if (weights) weights->push_back(w.at(0));
  }
  return norm.Forward(x);
}

Model::PackedMemories Model::EncodePacked(
    std::span<const SequenceExample> batch, const ForwardContext &ctx,
    std::vector<Tensor> *encoder_weights) const {
  const int d = config_.layer.d_model;
  PackedMemories out;
  std::vector<Tensor> speech, joint, text;
  for (const SequenceExample &ex : batch) {
    CheckExample(ex.frames, ex.hypothesis, ex.reference);
    Tensor s = speech_embed_->Forward(ex.frames);
    out.speech_lens.push_back(s.dim(0));
    out.text_lens.push_back(config_.uses_hypothesis()
                                ? static_cast<int64_t>(ex.hypothesis.size())
                                : 0);
    switch (config_.arch) {
      case Architecture::kAsr:
        speech.push_back(s);
        break;
      case Architecture::kCrossModal: {
        const int sep[1] = {Vocabulary::kSep};
        joint.push_back(s);
        joint.push_back(hyp_embed_->Lookup(sep));
        if (!ex.hypothesis.empty())
          joint.push_back(hyp_embed_->Forward(ex.hypothesis));
        break;
      }
      case Architecture::kSeparate:
        speech.push_back(s);
        if (!ex.hypothesis.empty())
          text.push_back(hyp_embed_->Forward(ex.hypothesis));
        break;
    }
  }
  switch (config_.arch) {
    case Architecture::kAsr: {
      SegmentLayout layout(out.speech_lens);
      out.views.push_back({RunStack(encoder_, *encoder_norm_,
                                    ConcatRows(speech, d), layout, ctx,
                                    encoder_weights),
                           layout});
      break;
    }
    case Architecture::kCrossModal: {
      std::vector<int64_t> lens;
      for (size_t b = 0; b < batch.size(); ++b)
        lens.push_back(out.speech_lens[b] + 1 + out.text_lens[b]);
      SegmentLayout layout(lens);
      out.views.push_back({RunStack(encoder_, *encoder_norm_,
                                    ConcatRows(joint, d), layout, ctx,
                                    encoder_weights),
                           layout});
      break;
    }
    case Architecture::kSeparate: {
      SegmentLayout speech_layout(out.speech_lens);
      SegmentLayout text_layout(out.text_lens);
      out.views.push_back({RunStack(speech_encoder_, *speech_encoder_norm_,
                                    ConcatRows(speech, d), speech_layout, ctx,
                                    encoder_weights),
                           speech_layout});
      out.views.push_back({RunStack(encoder_, *encoder_norm_,
                                    ConcatRows(text, d), text_layout, ctx,
                                    nullptr),
                           text_layout});
      break;
    }
  }
  return out;
}

EncodedMemory Model::Encode(const Tensor &frames,
                            std::span<const int> hypothesis,
                            const ForwardContext &ctx,
                            std::vector<Tensor> *encoder_weights) const {
  SequenceExample ex{frames, {hypothesis.begin(), hypothesis.end()}, {}};
  PackedMemories packed =
      EncodePacked(std::span<const SequenceExample>(&ex, 1), ctx,
                   encoder_weights);
  EncodedMemory memory;
  memory.arch = config_.arch;
  memory.speech_len = packed.speech_lens[0];
  memory.text_len = packed.text_lens[0];
  for (const MemoryView &view : packed.views)
    memory.memories.push_back(view.memory);
  return memory;
}

BatchScores Model::ForwardBatch(std::span<const SequenceExample> batch,
                                const ForwardContext &ctx) const {
  NCM_CHECK(!batch.empty(), "model: empty batch");
  PackedMemories packed = EncodePacked(batch, ctx, nullptr);
  BatchScores scores;
  std::vector<Tensor> inputs;
  std::vector<int64_t> lens;
  for (const SequenceExample &ex : batch) {
    std::vector<int> in = {Vocabulary::kBos};
    in.insert(in.end(), ex.reference.begin(), ex.reference.end());
    inputs.push_back(target_embed_->Forward(in));
    lens.push_back(static_cast<int64_t>(in.size()));
    scores.targets.insert(scores.targets.end(), ex.reference.begin(),
                          ex.reference.end());
    scores.targets.push_back(Vocabulary::kEos);
  }
  scores.layout = SegmentLayout(lens);
  Tensor x = ConcatRows(inputs, config_.layer.d_model);
  for (const auto &block : decoder_)
    x = block->ForwardPacked(x, scores.layout, packed.views, ctx);
  scores.logp = LogSoftmax(output_->Forward(decoder_norm_->Forward(x)));
  return scores;
}

Tensor Model::Forward(const SequenceExample &example,
                      const ForwardContext &ctx) const {
  return ForwardBatch(std::span<const SequenceExample>(&example, 1), ctx).logp;
}

DecoderState Model::Start(const EncodedMemory &memory) const {
  NCM_CHECK(memory.arch == config_.arch, "decoder: memory encoded by a ",
            ArchitectureName(memory.arch), " model cannot drive a ",
            ArchitectureName(config_.arch), " decoder");
  NoGradGuard no_grad;
  auto projected =
      std::make_shared<std::vector<std::vector<ProjectedMemory>>>();
  for (const auto &block : decoder_)
    projected->push_back(block->ProjectMemories(memory.memories));
  DecoderState state;
  state.model_id_ = id_;
  state.memory_ = std::move(projected);
  state.caches_.resize(decoder_.size());
  return state;
}

std::vector<double> Model::Step(DecoderState &state, int last_token) const {
  NCM_CHECK(state.model_id_ == id_,
            "decoder: state was not started by this model");
  NCM_CHECK(last_token >= 0 && last_token < config_.vocab_size(),
            "decoder: token ", last_token, " out of range");
  NCM_CHECK(state.length_ <= config_.max_target_len,
            "decoder: prefix length ", state.length_ + 1,
            " exceeds max_target_len + 1");
  NoGradGuard no_grad;
  Tensor x = target_embed_->ForwardAt(last_token, state.length_);
  for (size_t b = 0; b < decoder_.size(); ++b)
    x = decoder_[b]->Step(x, state.caches_[b], (*state.memory_)[b]);
  Tensor logp = LogSoftmax(output_->Forward(decoder_norm_->Forward(x)));
  ++state.length_;
  return {logp.data().begin(), logp.data().end()};
}

}  // namespace ncm
