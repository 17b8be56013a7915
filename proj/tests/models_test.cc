// tests/models_test.cc

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
#include <vector>

#include "ncm/common/error.h"
#include "ncm/models/model.h"
#include "ncm/numerics/autograd.h"
#include "ncm/numerics/ops.h"
#include "testing/test_util.h"

namespace ncm {
namespace {

using testing::MaxAbsDiff;
using testing::RandomTensor;

constexpr Architecture kAllArchs[] = {Architecture::kAsr,
                                      Architecture::kCrossModal,
                                      Architecture::kSeparate};

ModelConfig MicroConfig(Architecture arch) {
  ModelConfig c = ModelConfig::Toy(arch);
  c.layer.d_model = 8;
  c.layer.num_heads = 2;
  c.layer.ffn_dim = 16;
  c.layer.dropout = 0.0;
  c.encoder_blocks = c.decoder_blocks = c.speech_encoder_blocks = 1;
  c.conv_channels = 2;
  c.num_content_tokens = 5;
  c.feature_dim = 4;
  return c;
}

// Replaces the zero-initialized output projection so that gradients reach
// every upstream parameter.
void RandomizeOutput(Model &model, uint64_t seed) {
  Rng rng(seed);
  Tensor w = model.parameters().Get("output.weight");
  for (double &v : w.mutable_data()) v = std::normal_distribution<>(0, 0.5)(rng);
}

std::vector<int> RandomTokens(const Model &model, int n, Rng &rng) {
  std::uniform_int_distribution<int> pick(Vocabulary::kNumReserved,
                                          model.config().vocab_size() - 1);
  std::vector<int> out(n);
  for (int &t : out) t = pick(rng);
  return out;
}

SequenceExample RandomExample(const Model &model, int frames, int hyp_len,
                              int ref_len, Rng &rng) {
  return {RandomTensor({frames, model.config().feature_dim}, rng),
          RandomTokens(model, hyp_len, rng), RandomTokens(model, ref_len, rng)};
}

double RowLogSumExp(const Tensor &logp, int64_t row) {
  const int64_t v = logp.dim(1);
  double s = 0.0;
  for (int64_t j = 0; j < v; ++j) s += std::exp(logp.data()[row * v + j]);
  return std::log(s);
}

// Mean negative log-likelihood of the packed targets.
Tensor MeanNll(const BatchScores &scores) {
  const int64_t v = scores.logp.dim(1);
  std::vector<double> onehot(scores.logp.numel(), 0.0);
  for (size_t r = 0; r < scores.targets.size(); ++r)
    onehot[r * v + scores.targets[r]] = 1.0;
  return Scale(ReduceSum(Mul(scores.logp,
                             Tensor::FromData(scores.logp.shape(), onehot))),
               -1.0 / static_cast<double>(scores.targets.size()));
}

TEST(VocabularyTest, ReservedIdsAndBijection) {
  Vocabulary v;
  EXPECT_EQ(v.size(), 30);
  EXPECT_EQ(v.Id("<pad>"), 0);
  EXPECT_EQ(v.Id("<s>"), 1);
  EXPECT_EQ(v.Id("</s>"), 2);
  EXPECT_EQ(v.Id("<sep>"), 3);
  for (int i = 0; i < v.size(); ++i) EXPECT_EQ(v.Id(v.Symbol(i)), i);
  EXPECT_EQ(v.Render(std::vector<int>{4, 5, 29}), "abz");
  EXPECT_THROW(v.Render(std::vector<int>{3}), ValidationError);
  EXPECT_THROW(v.Id("?"), ValidationError);
  EXPECT_THROW(Vocabulary(std::vector<std::string>{"a", "a"}), ValidationError);
  EXPECT_EQ(Vocabulary(30).Symbol(33), "c29");
}

TEST(ModelConfigTest, JsonRoundTripAndErrors) {
  ModelConfig c = ModelConfig::Large(Architecture::kSeparate);
  EXPECT_EQ(c.layer.d_model, 256);
  EXPECT_EQ(c.layer.ffn_dim, 2048);
  EXPECT_EQ(ModelConfig::FromJson(c.ToJson()), c);
  nlohmann::json j = c.ToJson();
  j["bogus"] = 1;
  try {
    ModelConfig::FromJson(j);
    FAIL();
  } catch (const ValidationError &e) {
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
  j = c.ToJson();
  j["decoder_blocks"] = "six";
  try {
    ModelConfig::FromJson(j);
    FAIL();
  } catch (const ValidationError &e) {
    EXPECT_NE(std::string(e.what()).find("decoder_blocks"), std::string::npos);
  }
  EXPECT_THROW(ModelConfig::FromJson({{"arch", "lstm"}}), ValidationError);
  EXPECT_THROW(ModelConfig::FromJson({{"num_heads", 5}}), ValidationError);
}

TEST(ModelTest, ForwardShapeAndNormalization) {
  for (Architecture arch : kAllArchs) {
    Rng rng(1);
    Model model(ModelConfig::Toy(arch), 3);
    RandomizeOutput(model, 4);
    SequenceExample ex = RandomExample(model, 23, 6, 7, rng);
    Tensor logp = model.Forward(ex);
    ASSERT_EQ(logp.shape(), (Shape{8, 30})) << ArchitectureName(arch);
    for (int64_t r = 0; r < 8; ++r) EXPECT_NEAR(RowLogSumExp(logp, r), 0.0, 1e-9);
  }
}

TEST(ModelTest, InitialNllIsNearLogV) {
  for (Architecture arch : kAllArchs) {
    Rng rng(2);
    Model model(ModelConfig::Toy(arch), 5);
    std::vector<SequenceExample> batch;
    for (int b = 0; b < 4; ++b)
      batch.push_back(RandomExample(model, 30 + b, 8, 10, rng));
    const double nll = MeanNll(model.ForwardBatch(batch)).item();
    EXPECT_NEAR(nll, std::log(30.0), 0.15 * std::log(30.0));
  }
}

TEST(ModelTest, PackedBatchMatchesSingles) {
  for (Architecture arch : kAllArchs) {
    Rng rng(3);
    Model model(ModelConfig::Toy(arch), 6);
    RandomizeOutput(model, 7);
    std::vector<SequenceExample> batch = {RandomExample(model, 9, 3, 4, rng),
                                          RandomExample(model, 17, 0, 6, rng),
                                          RandomExample(model, 12, 5, 0, rng)};
    BatchScores scores = model.ForwardBatch(batch);
    for (size_t b = 0; b < batch.size(); ++b) {
      Tensor single = model.Forward(batch[b]);
      NoGradGuard no_grad;
      Tensor rows = Slice(scores.logp, 0, scores.layout.offset(b),
                          scores.layout.length(b));
      EXPECT_LT(MaxAbsDiff(rows.data(), single.data()), 1e-12);
    }
    EXPECT_EQ(scores.targets.size(), 4u + 6u + 0u + 3u);
    EXPECT_EQ(scores.targets.back(), Vocabulary::kEos);
  }
}

TEST(CrossModalTest, MemoryLayout) {
  Rng rng(4);
  Model model(ModelConfig::Toy(Architecture::kCrossModal), 8);
  Tensor frames = RandomTensor({16, 16}, rng);
  EncodedMemory m = model.Encode(frames, RandomTokens(model, 7, rng));
  ASSERT_EQ(m.memories.size(), 1u);
  EXPECT_EQ(m.memories[0].dim(0), 12);
  EXPECT_EQ(m.separator_index(), 4);
  EncodedMemory empty = model.Encode(frames, std::vector<int>{});
  EXPECT_EQ(empty.memories[0].dim(0), 5);
  EXPECT_EQ(empty.text_len, 0);
}

TEST(CrossModalTest, HypothesisReachesSpeechPositions) {
  Rng rng(5);
  Model model(ModelConfig::Toy(Architecture::kCrossModal), 9);
  Tensor frames = RandomTensor({20, 16}, rng);
  std::vector<int> hyp = RandomTokens(model, 6, rng);
  EncodedMemory a = model.Encode(frames, hyp);
  hyp[2] = hyp[2] == 4 ? 5 : 4;
  EncodedMemory b = model.Encode(frames, hyp);
  NoGradGuard no_grad;
  const int64_t ip = a.speech_len;
  EXPECT_GT(MaxAbsDiff(Slice(a.memories[0], 0, 0, ip).data(),
                       Slice(b.memories[0], 0, 0, ip).data()),
            0.0);
}

TEST(SeparateTest, SpeechMemoryIgnoresHypothesis) {
  Rng rng(6);
  Model model(ModelConfig::Toy(Architecture::kSeparate), 10);
  Tensor frames = RandomTensor({20, 16}, rng);
  std::vector<int> hyp = RandomTokens(model, 6, rng);
  EncodedMemory a = model.Encode(frames, hyp);
  ASSERT_EQ(a.memories.size(), 2u);
  EXPECT_EQ(a.memories[0].dim(0), 5);
  EXPECT_EQ(a.memories[1].dim(0), 6);
  hyp[2] = hyp[2] == 4 ? 5 : 4;
  EncodedMemory b = model.Encode(frames, hyp);
  EXPECT_EQ(MaxAbsDiff(a.memories[0].data(), b.memories[0].data()), 0.0);
  EXPECT_GT(MaxAbsDiff(a.memories[1].data(), b.memories[1].data()), 0.0);
  EncodedMemory empty = model.Encode(frames, std::vector<int>{});
  EXPECT_EQ(empty.memories[1].dim(0), 0);
}

TEST(SeparateTest, ParameterCountsDifferAndIgnoreLengths) {
  Model cross(ModelConfig::Toy(Architecture::kCrossModal), 1);
  Model sep(ModelConfig::Toy(Architecture::kSeparate), 1);
  Model sep2(ModelConfig::Toy(Architecture::kSeparate), 2);
  EXPECT_NE(cross.NumParameters(), sep.NumParameters());
  EXPECT_EQ(sep.NumParameters(), sep2.NumParameters());
  // Extra speech encoder stack plus one 2d -> d projection per decoder block.
  const int64_t d = 64;
  const int64_t block = 2 * 2 * d + 4 * (d * d + d) + (d * 256 + 256) +
                        (256 * d + d);
  const int64_t decoder_extra = 2 * (4 * (d * d + d) + (2 * d * d + d));
  EXPECT_EQ(sep.NumParameters() - cross.NumParameters(),
            2 * block + 2 * d + decoder_extra);
  ModelConfig longer = ModelConfig::Toy(Architecture::kSeparate);
  longer.max_source_frames = 2000;
  longer.max_target_len = 300;
  EXPECT_EQ(Model(longer, 1).NumParameters(), sep.NumParameters());
}

TEST(ModelTest, CausalityInReference) {
  for (Architecture arch : kAllArchs) {
    Rng rng(7);
    Model model(ModelConfig::Toy(arch), 11);
    RandomizeOutput(model, 12);
    SequenceExample ex = RandomExample(model, 18, 5, 6, rng);
    Tensor a = model.Forward(ex);
    ex.reference[4] = ex.reference[4] == 4 ? 5 : 4;
    Tensor b = model.Forward(ex);
    NoGradGuard no_grad;
    // Input row t holds reference[t - 1]; rows 0..4 precede the change.
    EXPECT_EQ(MaxAbsDiff(Slice(a, 0, 0, 5).data(), Slice(b, 0, 0, 5).data()),
              0.0);
    EXPECT_GT(MaxAbsDiff(Slice(a, 0, 5, 2).data(), Slice(b, 0, 5, 2).data()),
              0.0);
  }
}

TEST(ModelTest, DecodeStepMatchesForward) {
  for (Architecture arch : kAllArchs) {
    Rng rng(8);
    Model model(ModelConfig::Toy(arch), 13);
    RandomizeOutput(model, 14);
    SequenceExample ex = RandomExample(model, 21, 4, 7, rng);
    Tensor full = model.Forward(ex);
    DecoderState state = model.Start(model.Encode(ex.frames, ex.hypothesis));
    std::vector<int> inputs = {Vocabulary::kBos};
    inputs.insert(inputs.end(), ex.reference.begin(), ex.reference.end());
    for (size_t t = 0; t < inputs.size(); ++t) {
      std::vector<double> row = model.Step(state, inputs[t]);
      double z = 0.0;
      for (size_t j = 0; j < row.size(); ++j) {
        EXPECT_NEAR(row[j], full.at(t, j), 1e-9) << ArchitectureName(arch);
        z += std::exp(row[j]);
      }
      EXPECT_NEAR(z, 1.0, 1e-9);
    }
    EXPECT_EQ(state.length(), 8);
  }
}

TEST(ModelTest, StateCopiesAreIndependent) {
  Rng rng(9);
  Model model(ModelConfig::Toy(Architecture::kCrossModal), 15);
  RandomizeOutput(model, 16);
  Tensor frames = RandomTensor({14, 16}, rng);
  DecoderState s = model.Start(model.Encode(frames, std::vector<int>{4, 5}));
  model.Step(s, Vocabulary::kBos);
  DecoderState copy = s;
  std::vector<double> a = model.Step(s, 6);
  model.Step(copy, 7);
  DecoderState again = model.Start(model.Encode(frames, std::vector<int>{4, 5}));
  model.Step(again, Vocabulary::kBos);
  std::vector<double> b = model.Step(again, 6);
  EXPECT_EQ(MaxAbsDiff(a, b), 0.0);
}

TEST(ModelTest, RejectsForeignStateAndBadInputs) {
  Rng rng(10);
  Model a(ModelConfig::Toy(Architecture::kAsr), 1);
  Model b(ModelConfig::Toy(Architecture::kAsr), 1);
  Model cross(ModelConfig::Toy(Architecture::kCrossModal), 1);
  Tensor frames = RandomTensor({12, 16}, rng);
  DecoderState s = a.Start(a.Encode(frames, {}));
  EXPECT_THROW(b.Step(s, Vocabulary::kBos), ValidationError);
  EXPECT_THROW(cross.Start(a.Encode(frames, {})), ValidationError);
  EXPECT_THROW(a.Encode(RandomTensor({3, 16}, rng), {}), ValidationError);
  EXPECT_THROW(a.Encode(RandomTensor({12, 15}, rng), {}), ValidationError);
  EXPECT_THROW(cross.Encode(frames, std::vector<int>{3}), ValidationError);
  SequenceExample too_long{frames, {}, std::vector<int>(65, 4)};
  EXPECT_THROW(a.Forward(too_long), ValidationError);
}

TEST(ModelTest, DropoutIsSeededAndOffAtEval) {
  Rng rng(11);
  Model model(ModelConfig::Toy(Architecture::kAsr), 17);
  RandomizeOutput(model, 18);
  SequenceExample ex = RandomExample(model, 16, 0, 5, rng);
  Rng r1(5), r2(5);
  Tensor a = model.Forward(ex, {true, &r1});
  Tensor b = model.Forward(ex, {true, &r2});
  Tensor c = model.Forward(ex);
  EXPECT_EQ(MaxAbsDiff(a.data(), b.data()), 0.0);
  EXPECT_GT(MaxAbsDiff(a.data(), c.data()), 0.0);
}

class ModelGradTest : public ::testing::TestWithParam<Architecture> {};

TEST_P(ModelGradTest, MeanLossOnMicroBatch) {
  Rng rng(12);
  Model model(MicroConfig(GetParam()), 19);
  RandomizeOutput(model, 20);
  std::vector<SequenceExample> batch = {RandomExample(model, 6, 2, 3, rng),
                                        RandomExample(model, 9, 3, 2, rng)};
  auto loss = [&](const Tensor &) { return MeanNll(model.ForwardBatch(batch)); };
  EXPECT_LT(GradCheck(loss, batch[0].frames), 1e-4);
  for (const auto &[name, param] : model.parameters().entries()) {
    if (name.find("gain") != std::string::npos) continue;
    EXPECT_LT(GradCheck(loss, param), 1e-4) << name;
  }
}

INSTANTIATE_TEST_SUITE_P(AllArchitectures, ModelGradTest,
                         ::testing::ValuesIn(kAllArchs),
                         [](const auto &info) {
                           return ArchitectureName(info.param);
                         });

}  // namespace
}  // namespace ncm
