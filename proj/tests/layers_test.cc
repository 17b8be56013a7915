// tests/layers_test.cc

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

#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "ncm/common/error.h"
#include "ncm/layers/attention.h"
#include "ncm/layers/blocks.h"
#include "ncm/layers/embedding.h"
#include "ncm/numerics/autograd.h"
#include "ncm/numerics/ops.h"
#include "testing/test_util.h"

namespace ncm {
namespace {

using testing::MaxAbsDiff;
using testing::RandomTensor;
using testing::WeightedSum;

LayerConfig SmallConfig(int d = 8, int heads = 2) {
  LayerConfig c;
  c.d_model = d;
  c.num_heads = heads;
  c.ffn_dim = 2 * d;
  c.dropout = 0.1;
  return c;
}

Tensor Rows(const Tensor &t, int64_t begin, int64_t len) {
  NoGradGuard no_grad;
  return Slice(t, 0, begin, len);
}

TEST(PositionalEncodingTest, KnownValues) {
  Tensor pe = PositionalEncoding(6, 8);
  for (int c = 0; c < 8; ++c)
    EXPECT_EQ(pe.at(0, c), c % 2 == 0 ? 0.0 : 1.0) << c;
  EXPECT_NEAR(pe.at(3, 1), -0.9899924966, 1e-9);
  EXPECT_NEAR(pe.at(5, 4), std::sin(0.05), 1e-15);
  EXPECT_NEAR(pe.at(2, 7), std::cos(2.0 / 1000.0), 1e-15);
  EXPECT_THROW(PositionalEncoding(3, 7), ValidationError);
}

TEST(LayerConfigTest, RejectsBadFields) {
  LayerConfig c = SmallConfig();
  c.num_heads = 3;
  EXPECT_THROW(c.Validate(), ValidationError);
  c = SmallConfig();
  c.dropout = 1.0;
  EXPECT_THROW(c.Validate(), ValidationError);
}

TEST(InitTest, XavierBoundsAndVariance) {
  Rng rng(3);
  Tensor w = XavierUniform({200, 100}, 200, 100, rng);
  const double a = std::sqrt(6.0 / 300.0);
  double sum_sq = 0.0;
  for (double v : w.data()) {
    EXPECT_LE(std::abs(v), a);
    sum_sq += v * v;
  }
  EXPECT_NEAR(sum_sq / w.numel(), a * a / 3.0, 0.03 * a * a / 3.0);
}

TEST(DropoutTest, InactiveIsIdentityActiveIsInverted) {
  Rng rng(9);
  Tensor x = Tensor::Filled({100, 100}, 2.0);
  ForwardContext eval;
  EXPECT_TRUE(Dropout(x, 0.1, eval).SameStorage(x));
  ForwardContext train{true, &rng};
  Tensor y = Dropout(x, 0.25, train);
  int zeros = 0;
  double sum = 0.0;
  for (double v : y.data()) {
    EXPECT_TRUE(v == 0.0 || std::abs(v - 2.0 / 0.75) < 1e-15);
    zeros += v == 0.0;
    sum += v;
  }
  EXPECT_NEAR(zeros / 1e4, 0.25, 0.02);
  EXPECT_NEAR(sum / 1e4, 2.0, 0.05);
}

TEST(AttentionTest, IdenticalKeysGiveUniformWeights) {
  Rng rng(1);
  ParameterRegistry reg;
  MultiHeadAttention attn(reg, "a", SmallConfig(), rng);
  Tensor q = RandomTensor({3, 8}, rng);
  Tensor row = RandomTensor({1, 8}, rng);
  Tensor keys = Concat(std::vector<Tensor>{row, row, row, row, row}, 0);
  AttentionResult r =
      attn.Forward(q, keys, keys, AttentionMask::Full(3, 5), ForwardContext{});
  ASSERT_EQ(r.weights.shape(), (Shape{2, 3, 5}));
  for (double w : r.weights.data()) EXPECT_NEAR(w, 0.2, 1e-15);
}

TEST(AttentionTest, CausalFirstRowAttendsOnlyToItself) {
  Rng rng(2);
  ParameterRegistry reg;
  MultiHeadAttention attn(reg, "a", SmallConfig(), rng);
  Tensor x = RandomTensor({4, 8}, rng);
  AttentionResult r =
      attn.Forward(x, x, x, AttentionMask::Causal(4), ForwardContext{});
  for (int h = 0; h < 2; ++h) {
    const double *w = r.weights.data().data() + h * 16;
    EXPECT_EQ(w[0], 1.0);
    for (int t = 0; t < 4; ++t) {
      double sum = 0.0;
      for (int s = 0; s < 4; ++s) {
        if (s > t) EXPECT_EQ(w[t * 4 + s], 0.0);
        sum += w[t * 4 + s];
      }
      EXPECT_NEAR(sum, 1.0, 1e-14);
    }
  }
}

// Straight-line single-head attention, written without any library op.
TEST(AttentionTest, MatchesDenseOracle) {
  Rng rng(4);
  LayerConfig c = SmallConfig(4, 1);
  ParameterRegistry reg;
  MultiHeadAttention attn(reg, "a", c, rng);
  for (const auto &entry : reg.entries()) {
    Tensor t = entry.second;
    for (double &v : t.mutable_data()) v = std::normal_distribution<>(0, 0.7)(rng);
  }
  Tensor x = RandomTensor({3, 4}, rng);
  AttentionResult r =
      attn.Forward(x, x, x, AttentionMask::Full(3, 3), ForwardContext{});

  auto project = [&](const std::string &p, int t, int j) {
    const Tensor &w = reg.Get("a." + p + ".weight");
    double s = reg.Get("a." + p + ".bias").data()[j];
    for (int i = 0; i < 4; ++i) s += x.at(t, i) * w.at(i, j);
    return s;
  };
  double q[3][4], k[3][4], v[3][4], ctxv[3][4];
  for (int t = 0; t < 3; ++t)
    for (int j = 0; j < 4; ++j) {
      q[t][j] = project("wq", t, j);
      k[t][j] = project("wk", t, j);
      v[t][j] = project("wv", t, j);
    }
  for (int t = 0; t < 3; ++t) {
    double s[3], z = 0.0;
    for (int u = 0; u < 3; ++u) {
      s[u] = 0.0;
      for (int j = 0; j < 4; ++j) s[u] += q[t][j] * k[u][j];
      s[u] = std::exp(s[u] / 2.0);
      z += s[u];
    }
    for (int u = 0; u < 3; ++u) EXPECT_NEAR(r.weights.data()[t * 3 + u], s[u] / z, 1e-12);
    for (int j = 0; j < 4; ++j) {
      ctxv[t][j] = 0.0;
      for (int u = 0; u < 3; ++u) ctxv[t][j] += s[u] / z * v[u][j];
    }
  }
  const Tensor &wo = reg.Get("a.wo.weight");
  const Tensor &bo = reg.Get("a.wo.bias");
  for (int t = 0; t < 3; ++t)
    for (int j = 0; j < 4; ++j) {
      double o = bo.data()[j];
      for (int i = 0; i < 4; ++i) o += ctxv[t][i] * wo.at(i, j);
      EXPECT_NEAR(r.output.at(t, j), o, 1e-12);
    }
}

TEST(AttentionTest, KeyPaddingInvariance) {
  Rng rng(5);
  ParameterRegistry reg;
  MultiHeadAttention attn(reg, "a", SmallConfig(), rng);
  Tensor q = RandomTensor({3, 8}, rng);
  Tensor kv = RandomTensor({4, 8}, rng);
  Tensor junk = RandomTensor({3, 8}, rng, 50.0);
  Tensor padded = Concat(std::vector<Tensor>{kv, junk}, 0);
  AttentionResult a =
      attn.Forward(q, kv, kv, AttentionMask::Full(3, 4), ForwardContext{});
  AttentionResult b = attn.Forward(q, padded, padded,
                                   AttentionMask::KeyPadding(3, 4, 7),
                                   ForwardContext{});
  EXPECT_LT(MaxAbsDiff(a.output.data(), b.output.data()), 1e-9);
}

TEST(AttentionTest, RejectsEmptyRowsAndBadMasks) {
  Rng rng(6);
  ParameterRegistry reg;
  MultiHeadAttention attn(reg, "a", SmallConfig(), rng);
  Tensor x = RandomTensor({2, 8}, rng);
  EXPECT_THROW(attn.Forward(x, x, x, AttentionMask::KeyPadding(2, 0, 2),
                            ForwardContext{}),
               ValidationError);
  EXPECT_THROW(
      attn.Forward(x, x, x, AttentionMask::Full(2, 3), ForwardContext{}),
      ValidationError);
}

TEST(AttentionTest, EmptyKeySegmentGivesZeroContext) {
  Rng rng(7);
  ParameterRegistry reg;
  MultiHeadAttention attn(reg, "a", SmallConfig(), rng);
  Tensor q = RandomTensor({3, 8}, rng);
  Tensor out = attn.ForwardPacked(q, SegmentLayout({3}), Tensor::Zeros({0, 8}),
                                  SegmentLayout({0}), MaskKind::kFull,
                                  ForwardContext{});
  const Tensor &bias = reg.Get("a.wo.bias");
  for (int t = 0; t < 3; ++t)
    for (int j = 0; j < 8; ++j) EXPECT_EQ(out.at(t, j), bias.data()[j]);
}

TEST(EncoderBlockTest, ZeroResidualBranchesGiveIdentity) {
  Rng rng(8);
  ParameterRegistry reg;
  EncoderBlock block(reg, "enc", SmallConfig(), rng);
  for (const char *name : {"enc.self_attn.wo.weight", "enc.self_attn.wo.bias",
                           "enc.ffn.out.weight", "enc.ffn.out.bias"})
  {
    Tensor t = reg.Get(name);
    for (double &v : t.mutable_data()) v = 0.0;
  }
  Tensor x = RandomTensor({5, 8}, rng);
  Tensor y = block.Forward(x, AttentionMask::Full(5, 5), ForwardContext{}).output;
  EXPECT_EQ(MaxAbsDiff(x.data(), y.data()), 0.0);
}

TEST(EncoderBlockTest, PackedEqualsSeparate) {
  Rng rng(9);
  ParameterRegistry reg;
  EncoderBlock block(reg, "enc", SmallConfig(), rng);
  Tensor a = RandomTensor({3, 8}, rng), b = RandomTensor({5, 8}, rng);
  Tensor packed = block.ForwardPacked(Concat(std::vector<Tensor>{a, b}, 0),
                                      SegmentLayout({3, 5}), ForwardContext{});
  Tensor ya = block.Forward(a, AttentionMask::Full(3, 3), ForwardContext{}).output;
  Tensor yb = block.Forward(b, AttentionMask::Full(5, 5), ForwardContext{}).output;
  EXPECT_LT(MaxAbsDiff(Rows(packed, 0, 3).data(), ya.data()), 1e-12);
  EXPECT_LT(MaxAbsDiff(Rows(packed, 3, 5).data(), yb.data()), 1e-12);
}

TEST(EncoderBlockTest, GradCheck) {
  Rng rng(10);
  LayerConfig c = SmallConfig();
  c.dropout = 0.0;
  ParameterRegistry reg;
  EncoderBlock block(reg, "enc", c, rng);
  Tensor x = RandomTensor({4, 8}, rng);
  auto f = [&](const Tensor &in) {
    return WeightedSum(
        block.ForwardPacked(in, SegmentLayout({1, 3}), ForwardContext{}), 11);
  };
  EXPECT_LT(GradCheck(f, x), 1e-4);
  Tensor wq = reg.Get("enc.self_attn.wq.weight");
  EXPECT_LT(GradCheck([&](const Tensor &) { return f(x); }, wq), 1e-4);
}

struct DecoderFixture {
  explicit DecoderFixture(int memories, uint64_t seed = 12) : rng(seed) {
    LayerConfig c = SmallConfig();
    c.dropout = 0.0;
    block = std::make_unique<DecoderBlock>(reg, "dec", c, memories, rng);
  }
  Rng rng;
  ParameterRegistry reg;
  std::unique_ptr<DecoderBlock> block;
};

TEST(DecoderBlockTest, CausalityIsExact) {
  DecoderFixture fx(1);
  Tensor mem = RandomTensor({6, 8}, fx.rng);
  Tensor tgt = RandomTensor({5, 8}, fx.rng);
  Tensor changed = Concat(
      std::vector<Tensor>{Rows(tgt, 0, 3), RandomTensor({2, 8}, fx.rng, 9.0)}, 0);
  auto run = [&](const Tensor &t) {
    return fx.block
        ->Forward(t, {mem}, AttentionMask::Causal(5), {AttentionMask::Full(5, 6)},
                  ForwardContext{})
        .output;
  };
  Tensor a = run(tgt), b = run(changed);
  EXPECT_EQ(MaxAbsDiff(Rows(a, 0, 3).data(), Rows(b, 0, 3).data()), 0.0);
  EXPECT_GT(MaxAbsDiff(Rows(a, 3, 2).data(), Rows(b, 3, 2).data()), 1e-3);
}

TEST(DecoderBlockTest, SingleMemoryRowGetsAllWeight) {
  DecoderFixture fx(1);
  Tensor mem = RandomTensor({1, 8}, fx.rng);
  Tensor tgt = RandomTensor({4, 8}, fx.rng);
  DecoderBlock::Output out = fx.block->Forward(
      tgt, {mem}, AttentionMask::Causal(4), {AttentionMask::Full(4, 1)},
      ForwardContext{});
  for (double w : out.src_tgt_weights[0].data()) EXPECT_EQ(w, 1.0);
}

void ExpectStepMatchesForward(int memories) {
  DecoderFixture fx(memories);
  std::vector<Tensor> mems;
  std::vector<AttentionMask> masks;
  std::vector<MemoryView> views;
  for (int m = 0; m < memories; ++m) {
    mems.push_back(RandomTensor({4 + m, 8}, fx.rng));
    masks.push_back(AttentionMask::Full(6, 4 + m));
    views.push_back({mems.back(), SegmentLayout({4 + m})});
  }
  Tensor tgt = RandomTensor({6, 8}, fx.rng);
  Tensor full = fx.block->Forward(tgt, mems, AttentionMask::Causal(6), masks,
                                  ForwardContext{})
                    .output;
  Tensor packed = fx.block->ForwardPacked(tgt, SegmentLayout({6}), views,
                                          ForwardContext{});
  EXPECT_LT(MaxAbsDiff(full.data(), packed.data()), 1e-12);
  BlockCache cache;
  auto projected = fx.block->ProjectMemories(mems);
  for (int t = 0; t < 6; ++t) {
    Tensor row = fx.block->Step(Rows(tgt, t, 1), cache, projected);
    EXPECT_LT(MaxAbsDiff(row.data(), Rows(full, t, 1).data()), 1e-9) << t;
  }
  EXPECT_EQ(cache.keys.dim(0), 6);
}

TEST(DecoderBlockTest, StepMatchesForwardOneMemory) { ExpectStepMatchesForward(1); }
TEST(DecoderBlockTest, StepMatchesForwardTwoMemories) {
  ExpectStepMatchesForward(2);
}

TEST(DecoderBlockTest, TwoMemoriesHaveCombiningProjection) {
  DecoderFixture fx(2);
  EXPECT_EQ(fx.block->context_width(), 16);
  EXPECT_EQ(fx.reg.Get("dec.combine.weight").shape(), (Shape{16, 8}));
  EXPECT_THROW(DecoderBlock(fx.reg, "bad", SmallConfig(), 3, fx.rng),
               ValidationError);
}

TEST(DecoderBlockTest, PackedWithEmptyMemorySegment) {
  DecoderFixture fx(2);
  Tensor speech = RandomTensor({7, 8}, fx.rng);
  Tensor text = RandomTensor({2, 8}, fx.rng);
  Tensor tgt = RandomTensor({5, 8}, fx.rng);
  std::vector<MemoryView> views = {{speech, SegmentLayout({3, 4})},
                                   {text, SegmentLayout({0, 2})}};
  Tensor out =
      fx.block->ForwardPacked(tgt, SegmentLayout({2, 3}), views, ForwardContext{});
  for (double v : out.data()) EXPECT_TRUE(std::isfinite(v));
  // Second segment alone must agree with the packed rows.
  std::vector<MemoryView> second = {{Rows(speech, 3, 4), SegmentLayout({4})},
                                    {text, SegmentLayout({2})}};
  Tensor alone = fx.block->ForwardPacked(Rows(tgt, 2, 3), SegmentLayout({3}),
                                         second, ForwardContext{});
  EXPECT_LT(MaxAbsDiff(alone.data(), Rows(out, 2, 3).data()), 1e-12);
}

TEST(DecoderBlockTest, GradCheck) {
  DecoderFixture fx(2);
  Tensor speech = RandomTensor({5, 8}, fx.rng);
  Tensor text = RandomTensor({3, 8}, fx.rng);
  Tensor tgt = RandomTensor({4, 8}, fx.rng);
  auto f = [&](const Tensor &) {
    std::vector<MemoryView> views = {{speech, SegmentLayout({2, 3})},
                                     {text, SegmentLayout({1, 2})}};
    return WeightedSum(fx.block->ForwardPacked(tgt, SegmentLayout({2, 2}),
                                               views, ForwardContext{}),
                       5);
  };
  EXPECT_LT(GradCheck(f, speech), 1e-4);
  EXPECT_LT(GradCheck(f, tgt), 1e-4);
  EXPECT_LT(GradCheck(f, fx.reg.Get("dec.combine.weight")), 1e-4);
}

TEST(SpeechEmbeddingTest, OutputLengths) {
  Rng rng(13);
  ParameterRegistry reg;
  SpeechEmbedding emb(reg, "speech", 16, 4, 8, rng);
  EXPECT_EQ(SubsampledLength(16), 4);
  EXPECT_EQ(SubsampledLength(17), 5);
  EXPECT_EQ(emb.Forward(RandomTensor({16, 16}, rng)).shape(), (Shape{4, 8}));
  EXPECT_EQ(emb.Forward(RandomTensor({17, 16}, rng)).shape(), (Shape{5, 8}));
  EXPECT_EQ(emb.Forward(RandomTensor({4, 16}, rng)).shape(), (Shape{1, 8}));
  EXPECT_THROW(emb.Forward(RandomTensor({3, 16}, rng)), ValidationError);
  EXPECT_THROW(emb.Forward(RandomTensor({8, 15}, rng)), ValidationError);
}

TEST(SpeechEmbeddingTest, GradCheck) {
  Rng rng(14);
  ParameterRegistry reg;
  SpeechEmbedding emb(reg, "speech", 6, 3, 8, rng);
  Tensor x = RandomTensor({7, 6}, rng);
  auto f = [&](const Tensor &) { return WeightedSum(emb.Forward(x), 2); };
  EXPECT_LT(GradCheck(f, x), 1e-4);
  EXPECT_LT(GradCheck(f, reg.Get("speech.conv1.kernel")), 1e-4);
  EXPECT_LT(GradCheck(f, reg.Get("speech.conv2.kernel")), 1e-4);
}

TEST(TextEmbeddingTest, ScaledLookupPlusPositions) {
  Rng rng(15);
  ParameterRegistry reg;
  TextEmbedding emb(reg, "text", 10, 8, rng);
  const std::vector<int> tokens = {4, 7, 4};
  Tensor y = emb.Forward(tokens);
  Tensor pe = PositionalEncoding(3, 8);
  for (int t = 0; t < 3; ++t)
    for (int j = 0; j < 8; ++j)
      EXPECT_NEAR(y.at(t, j),
                  emb.table().at(tokens[t], j) * std::sqrt(8.0) + pe.at(t, j),
                  1e-14);
  // Same token at different positions differs by the positional rows only.
  for (int j = 0; j < 8; ++j)
    EXPECT_NEAR(y.at(2, j) - y.at(0, j), pe.at(2, j) - pe.at(0, j), 1e-14);
  for (int t = 0; t < 3; ++t)
    EXPECT_EQ(MaxAbsDiff(emb.ForwardAt(tokens[t], t).data(),
                         Rows(y, t, 1).data()),
              0.0);
  EXPECT_EQ(emb.Forward(std::vector<int>{}).shape(), (Shape{0, 8}));
  EXPECT_THROW(emb.Forward(std::vector<int>{10}), ValidationError);
}

TEST(TextEmbeddingTest, GradientsReachOnlyLookedUpRows) {
  Rng rng(16);
  ParameterRegistry reg;
  TextEmbedding emb(reg, "text", 10, 8, rng);
  const std::vector<int> tokens = {2, 5, 5};
  Backward(WeightedSum(emb.Forward(tokens), 3));
  const Tensor &table = emb.table();
  for (int r = 0; r < 10; ++r) {
    double norm = 0.0;
    for (int j = 0; j < 8; ++j) norm += std::abs(table.grad()[r * 8 + j]);
    if (r == 2 || r == 5)
      EXPECT_GT(norm, 0.0) << r;
    else
      EXPECT_EQ(norm, 0.0) << r;
  }
  Tensor t = reg.Get("text.table");
  EXPECT_LT(GradCheck([&](const Tensor &) {
              return WeightedSum(emb.Forward(tokens), 3);
            }, t),
            1e-4);
}

}  // namespace
}  // namespace ncm
