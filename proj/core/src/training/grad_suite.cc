// training/grad_suite.cc

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

#include "ncm/training/grad_suite.h"

#include <algorithm>
#include <cmath>
#include <functional>

#include "ncm/layers/attention.h"
#include "ncm/layers/blocks.h"
#include "ncm/layers/embedding.h"
#include "ncm/models/model.h"
#include "ncm/numerics/autograd.h"
#include "ncm/numerics/ops.h"
#include "ncm/training/trainer.h"

namespace ncm {

namespace {

using Fn = std::function<Tensor()>;

class Suite {
 public:
  explicit Suite(uint64_t seed) : rng_(seed) {}

  Tensor Random(const Shape &shape, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    std::vector<double> v(NumElements(shape));
    for (double &x : v) x = normal(rng_);
    return Tensor::FromData(shape, std::move(v), true);
  }

  // Uniform in [lo, hi].
  Tensor Uniform(const Shape &shape, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(NumElements(shape));
    for (double &x : v) x = u(rng_);
    return Tensor::FromData(shape, std::move(v), true);
  }

  void Check(const std::string &group, const std::string &name, const Fn &f,
             const std::vector<Tensor> &wrt) {
    // The projection weights are fixed once so every evaluation of the
    // scalar sees the same function.
    Tensor probe = f();
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> w(probe.numel());
    for (double &x : w) x = normal(rng_);
    Tensor weights = Tensor::FromData(probe.shape(), std::move(w));
    auto scalar = [&](const Tensor &) {
      Tensor out = f();
      return out.numel() == 1 ? out : ReduceSum(Mul(out, weights));
    };
    GradSuiteEntry e{group, name, 0.0, 0};
    for (const Tensor &x : wrt) {
      e.max_relative_error = std::max(e.max_relative_error, GradCheck(scalar, x));
      ++e.tensors_checked;
    }
    entries_.push_back(e);
  }

  void CheckRegistry(const std::string &group, const std::string &name,
                     const Fn &f, const ParameterRegistry &reg,
                     std::vector<Tensor> inputs) {
    for (const auto &[n, t] : reg.entries()) inputs.push_back(t);
    Check(group, name, f, inputs);
  }

  Rng &rng() { return rng_; }
  std::vector<GradSuiteEntry> &entries() { return entries_; }

 private:
  Rng rng_;
  std::vector<GradSuiteEntry> entries_;
};

void Primitives(Suite &s) {
  const char *P = "primitive";
  Tensor a = s.Random({3, 4}), b = s.Random({4, 2}), c = s.Random({3, 4});
  Tensor bias = s.Random({4});
  s.Check(P, "matmul", [&] { return MatMul(a, b); }, {a, b});
  s.Check(P, "add", [&] { return Add(a, c); }, {a, c});
  s.Check(P, "add_bias", [&] { return AddBias(a, bias); }, {a, bias});
  s.Check(P, "mul", [&] { return Mul(a, c); }, {a, c});
  s.Check(P, "scale", [&] { return Scale(a, -1.7); }, {a});
  s.Check(P, "concat_rows", [&] { return Concat(std::vector<Tensor>{a, c}, 0); },
          {a, c});
  s.Check(P, "concat_cols", [&] { return Concat(std::vector<Tensor>{a, c}, 1); },
          {a, c});
  s.Check(P, "slice", [&] { return Slice(a, 1, 1, 2); }, {a});
  const int64_t sizes[] = {1, 2};
  s.Check(P, "split",
          [&] {
            auto parts = Split(a, 0, sizes);
            return Concat(std::vector<Tensor>{Scale(parts[0], 2.0), parts[1]}, 0);
          },
          {a});
  s.Check(P, "transpose", [&] { return Transpose(a); }, {a});
  s.Check(P, "softmax", [&] { return Softmax(a); }, {a});
  s.Check(P, "log_softmax", [&] { return LogSoftmax(a); }, {a});
  Tensor pos = s.Uniform({3, 4}, 0.5, 2.0);
  s.Check(P, "log", [&] { return Log(pos); }, {pos});
  // Keep inputs away from the kink.
  Tensor away = s.Uniform({3, 4}, 0.1, 1.0);
  for (int64_t i = 0; i < away.numel(); i += 2)
    away.mutable_data()[i] = -away.data()[i];
  s.Check(P, "relu", [&] { return Relu(away); }, {away});
  Tensor gain = s.Random({4}), shift = s.Random({4});
  s.Check(P, "layer_norm", [&] { return LayerNorm(a, gain, shift, 1e-5); },
          {a, gain, shift});
  Tensor table = s.Random({6, 3});
  const int ids[] = {2, 5, 2, 0};
  s.Check(P, "embedding_lookup", [&] { return EmbeddingLookup(table, ids); },
          {table});
  s.Check(P, "reshape", [&] { return Reshape(a, {2, 6}); }, {a});
  BoolMask mask{{3, 4}, {0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0}};
  s.Check(P, "masked_fill", [&] { return Softmax(MaskedFill(a, mask, -1e9)); },
          {a});
  s.Check(P, "reduce_sum", [&] { return ReduceSum(Mul(a, a)); }, {a});
  s.Check(P, "reduce_mean", [&] { return ReduceMean(Mul(a, c)); }, {a, c});
  Tensor img = s.Random({5, 6, 2}), kernel = s.Random({3, 3, 2, 3}),
         kbias = s.Random({3});
  s.Check(P, "conv2d_stride2", [&] { return Conv2d(img, kernel, kbias, 2); },
          {img, kernel, kbias});
  s.Check(P, "conv2d_stride1", [&] { return Conv2d(img, kernel, kbias, 1); },
          {img, kernel, kbias});
}

void Layers(Suite &s) {
  const char *L = "layer";
  LayerConfig cfg;
  cfg.d_model = 8;
  cfg.num_heads = 2;
  cfg.ffn_dim = 12;
  cfg.dropout = 0.0;
  const ForwardContext ctx;
  Rng &rng = s.rng();
  {
    ParameterRegistry reg;
    Linear lin(reg, "lin", 8, 5, rng);
    Tensor x = s.Random({4, 8});
    s.CheckRegistry(L, "linear", [&] { return lin.Forward(x); }, reg, {x});
  }
  {
    ParameterRegistry reg;
    LayerNormLayer ln(reg, "ln", 8);
    for (const auto &[n, t] : reg.entries()) {
      Tensor h = t;
      for (double &v : h.mutable_data()) v += 0.3 * std::normal_distribution<>()(rng);
    }
    Tensor x = s.Random({4, 8});
    s.CheckRegistry(L, "layer_norm", [&] { return ln.Forward(x); }, reg, {x});
  }
  {
    ParameterRegistry reg;
    FeedForward ffn(reg, "ffn", cfg, rng);
    Tensor x = s.Random({4, 8});
    s.CheckRegistry(L, "feed_forward", [&] { return ffn.Forward(x, ctx); }, reg,
                    {x});
  }
  {
    ParameterRegistry reg;
    MultiHeadAttention mha(reg, "mha", cfg, rng);
    Tensor q = s.Random({3, 8}), kv = s.Random({5, 8});
    s.CheckRegistry(L, "attention_cross",
                    [&] {
                      return mha.Forward(q, kv, kv, AttentionMask::Full(3, 5), ctx)
                          .output;
                    },
                    reg, {q, kv});
    Tensor x = s.Random({4, 8});
    s.CheckRegistry(L, "attention_causal",
                    [&] {
                      return mha.Forward(x, x, x, AttentionMask::Causal(4), ctx)
                          .output;
                    },
                    reg, {x});
    s.CheckRegistry(L, "attention_key_padding",
                    [&] {
                      return mha.Forward(q, kv, kv,
                                         AttentionMask::KeyPadding(3, 3, 5), ctx)
                          .output;
                    },
                    reg, {q, kv});
    SegmentLayout qa({2, 1}), ka({3, 2});
    s.CheckRegistry(L, "attention_packed",
                    [&] {
                      return mha.ForwardPacked(q, qa, kv, ka, MaskKind::kFull, ctx);
                    },
                    reg, {q, kv});
  }
  {
    ParameterRegistry reg;
    EncoderBlock block(reg, "enc", cfg, rng);
    Tensor x = s.Random({5, 8});
    SegmentLayout layout({2, 3});
    s.CheckRegistry(L, "encoder_block",
                    [&] { return block.ForwardPacked(x, layout, ctx); }, reg, {x});
  }
  for (int memories : {1, 2}) {
    ParameterRegistry reg;
    DecoderBlock block(reg, "dec", cfg, memories, rng);
    Tensor y = s.Random({4, 8});
    std::vector<Tensor> mems = {s.Random({5, 8}), s.Random({3, 8})};
    mems.resize(memories);
    std::vector<AttentionMask> masks = {AttentionMask::Full(4, 5),
                                        AttentionMask::Full(4, 3)};
    masks.resize(memories);
    std::vector<Tensor> inputs = mems;
    inputs.push_back(y);
    s.CheckRegistry(L, "decoder_block_" + std::to_string(memories) + "mem",
                    [&] {
                      return block.Forward(y, mems, AttentionMask::Causal(4),
                                           masks, ctx)
                          .output;
                    },
                    reg, inputs);
  }
  {
    ParameterRegistry reg;
    SpeechEmbedding emb(reg, "speech", 6, 3, 8, rng);
    Tensor frames = s.Random({9, 6});
    s.CheckRegistry(L, "speech_embedding", [&] { return emb.Forward(frames); },
                    reg, {frames});
  }
  {
    ParameterRegistry reg;
    TextEmbedding emb(reg, "text", 7, 8, rng);
    const int ids[] = {3, 6, 3, 1};
    s.CheckRegistry(L, "text_embedding", [&] { return emb.Forward(ids); }, reg,
                    {});
  }
}

void Models(Suite &s) {
  for (Architecture arch :
       {Architecture::kAsr, Architecture::kCrossModal, Architecture::kSeparate}) {
    ModelConfig c = ModelConfig::Toy(arch);
    c.layer.d_model = 8;
    c.layer.num_heads = 2;
    c.layer.ffn_dim = 16;
    c.layer.dropout = 0.0;
    c.encoder_blocks = c.decoder_blocks = c.speech_encoder_blocks = 1;
    c.conv_channels = 2;
    c.num_content_tokens = 5;
    c.feature_dim = 4;
    Model model(c, s.rng()());
    // The zero-initialized output layer would hide every upstream gradient.
    Tensor out = model.parameters().Get("output.weight");
    for (double &v : out.mutable_data()) v = std::normal_distribution<>()(s.rng());
    std::uniform_int_distribution<int> tok(Vocabulary::kNumReserved,
                                           c.vocab_size() - 1);
    auto tokens = [&](int n) {
      std::vector<int> t(n);
      for (int &x : t) x = tok(s.rng());
      return t;
    };
    const bool hyp = c.uses_hypothesis();
    std::vector<SequenceExample> batch = {
        {s.Random({6, 4}), hyp ? tokens(2) : std::vector<int>{}, tokens(3)},
        {s.Random({9, 4}), hyp ? tokens(3) : std::vector<int>{}, tokens(2)}};
    s.CheckRegistry(
        "model", "loss_" + ArchitectureName(arch),
        [&] {
          BatchScores sc = model.ForwardBatch(batch);
          return CrossEntropyLoss(sc.logp, sc.targets);
        },
        model.parameters(), {batch[0].frames, batch[1].frames});
  }
}

}  // namespace

std::vector<GradSuiteEntry> RunGradSuite(uint64_t seed) {
  Suite s(seed);
  Primitives(s);
  Layers(s);
  Models(s);
  return s.entries();
}

}  // namespace ncm
