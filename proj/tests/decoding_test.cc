// tests/decoding_test.cc

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
#include <functional>
#include <limits>
#include <map>

#include "ncm/common/error.h"
#include "ncm/decoding/search.h"
#include "ncm/numerics/ops.h"
#include "testing/test_util.h"

namespace ncm {
namespace {

using testing::RandomTensor;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Next-token distribution is a fixed random function of the prefix.
class TableScorer : public StepScorer {
 public:
  TableScorer(int vocab, uint64_t seed, double temperature = 1.5)
      : vocab_(vocab), seed_(seed), temperature_(temperature) {}
  int vocab_size() const override { return vocab_; }
  std::any Start() const override { return std::vector<int>{}; }
  std::vector<double> Advance(std::any &state, int token) const override {
    auto &prefix = std::any_cast<std::vector<int> &>(state);
    prefix.push_back(token);
    return Distribution(prefix);
  }
  std::vector<double> Distribution(const std::vector<int> &prefix) const {
    uint64_t h = seed_;
    for (int t : prefix) h = DeriveSeed(h, {static_cast<uint64_t>(t)});
    Rng rng(h);
    std::vector<double> logits(vocab_);
    for (double &l : logits) l = std::normal_distribution<>(0, temperature_)(rng);
    if (override_) override_(prefix, logits);
    double z = 0.0;
    for (double l : logits) z += std::exp(l);
    for (double &l : logits) l -= std::log(z);
    return logits;
  }
  std::function<void(const std::vector<int> &, std::vector<double> &)> override_;

 private:
  int vocab_;
  uint64_t seed_;
  double temperature_;
};

// Every finished sequence of at most max_len tokens, scored directly.
std::vector<Hypothesis> Enumerate(std::span<const WeightedScorer> scorers,
                                  int vocab, int max_len) {
  std::vector<Hypothesis> out;
  std::function<void(std::vector<int> &)> rec = [&](std::vector<int> &prefix) {
    if (static_cast<int>(prefix.size()) >= max_len) return;
    std::vector<int> done = prefix;
    done.push_back(Vocabulary::kEos);
    out.push_back({done, SequenceScore(scorers, done), true, false});
    for (int v = Vocabulary::kNumReserved; v < vocab; ++v) {
      prefix.push_back(v);
      rec(prefix);
      prefix.pop_back();
    }
  };
  std::vector<int> empty;
  rec(empty);
  std::sort(out.begin(), out.end(), [](const Hypothesis &a, const Hypothesis &b) {
    if (a.score != b.score) return a.score > b.score;
    return a.tokens < b.tokens;
  });
  return out;
}

TEST(FusedStepScoreTest, Arithmetic) {
  EXPECT_EQ(FusedStepScore(-1.0, -3.0, 0.5), -2.0);
  EXPECT_EQ(FusedStepScore(-1.25, kNegInf, 0.0), -1.25);
  EXPECT_EQ(FusedStepScore(kNegInf, -0.75, 1.0), -0.75);
  EXPECT_NEAR(FusedStepScore(-2.0, -4.0, 0.3), -2.6, 1e-15);
}

TEST(FusionConfigTest, LengthBudgetAndJson) {
  FusionConfig c;
  EXPECT_EQ(c.beam_size, 20);
  EXPECT_EQ(c.MaxLength(41), 22);
  c.alpha = 0.4;
  c.beam_size = 8;
  FusionConfig back = FusionConfig::FromJson(c.ToJson());
  EXPECT_EQ(back.alpha, 0.4);
  EXPECT_EQ(back.beam_size, 8);
  EXPECT_THROW(FusionConfig::FromJson({{"alpha", 1.5}}), ValidationError);
  EXPECT_THROW(FusionConfig::FromJson({{"beam", 3}}), ValidationError);
  EXPECT_THROW(FusionConfig::FromJson({{"beam_size", 2.5}}), ValidationError);
}

TEST(BeamSearchTest, EqualsExhaustiveEnumeration) {
  for (int max_len : {1, 2, 3, 4}) {
    for (uint64_t seed = 0; seed < 25; ++seed) {
      TableScorer scorer(6, seed);
      const WeightedScorer ws[1] = {{&scorer, 1.0}};
      std::vector<Hypothesis> oracle = Enumerate(ws, 6, max_len);
      std::vector<Hypothesis> beam = BeamSearch(ws, 1000, max_len);
      ASSERT_EQ(beam.size(), oracle.size());
      for (size_t i = 0; i < beam.size(); ++i) {
        EXPECT_EQ(beam[i].tokens, oracle[i].tokens);
        EXPECT_NEAR(beam[i].score, oracle[i].score, 1e-12);
      }
    }
  }
}

TEST(BeamSearchTest, FusedEqualsExhaustiveEnumeration) {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    TableScorer a(7, seed), c(7, seed + 100);
    std::vector<WeightedScorer> ws = FusionWeights(a, &c, 0.35);
    std::vector<Hypothesis> oracle = Enumerate(ws, 7, 3);
    std::vector<Hypothesis> beam = BeamSearch(ws, 1000, 3);
    EXPECT_EQ(beam[0].tokens, oracle[0].tokens);
    EXPECT_NEAR(beam[0].score, oracle[0].score, 1e-12);
  }
}

TEST(BeamSearchTest, BeamOneIsGreedy) {
  for (uint64_t seed = 0; seed < 30; ++seed) {
    TableScorer scorer(12, seed, 3.0);
    const WeightedScorer ws[1] = {{&scorer, 1.0}};
    Hypothesis greedy = GreedySearch(ws, 6);
    std::vector<Hypothesis> beam = BeamSearch(ws, 1, 6);
    ASSERT_EQ(beam.size(), 1u);
    EXPECT_EQ(beam[0].tokens, greedy.tokens);
    EXPECT_EQ(beam[0].score, greedy.score);
    EXPECT_EQ(beam[0].forced, greedy.forced);
  }
}

TEST(BeamSearchTest, TiesAreLexicographic) {
  TableScorer scorer(6, 1);
  scorer.override_ = [](const std::vector<int> &, std::vector<double> &l) {
    std::fill(l.begin(), l.end(), 0.0);
  };
  const WeightedScorer ws[1] = {{&scorer, 1.0}};
  std::vector<Hypothesis> beam = BeamSearch(ws, 1000, 2);
  // Uniform steps: shorter sequences score higher; equal scores order by
  // ascending ids.
  ASSERT_EQ(beam.size(), 3u);
  EXPECT_EQ(beam[0].tokens, (std::vector<int>{2}));
  EXPECT_EQ(beam[1].tokens, (std::vector<int>{4, 2}));
  EXPECT_EQ(beam[2].tokens, (std::vector<int>{5, 2}));
  Hypothesis greedy = GreedySearch(ws, 3);
  EXPECT_EQ(greedy.tokens, (std::vector<int>{2}));
}

TEST(BeamSearchTest, ForcedTerminationWhenEosImpossible) {
  TableScorer scorer(8, 3);
  scorer.override_ = [](const std::vector<int> &, std::vector<double> &l) {
    l[Vocabulary::kEos] = kNegInf;
  };
  const WeightedScorer ws[1] = {{&scorer, 1.0}};
  std::vector<Hypothesis> beam = BeamSearch(ws, 3, 4);
  ASSERT_FALSE(beam.empty());
  for (const Hypothesis &h : beam) {
    EXPECT_TRUE(h.forced);
    EXPECT_FALSE(h.finished);
    EXPECT_EQ(h.tokens.size(), 4u);
  }
  EXPECT_TRUE(GreedySearch(ws, 4).forced);
}

TEST(BeamSearchTest, NeverEmitsReservedTokens) {
  TableScorer scorer(9, 4);
  scorer.override_ = [](const std::vector<int> &, std::vector<double> &l) {
    l[Vocabulary::kPad] = l[Vocabulary::kBos] = l[Vocabulary::kSep] = 10.0;
  };
  const WeightedScorer ws[1] = {{&scorer, 1.0}};
  for (const Hypothesis &h : BeamSearch(ws, 4, 5))
    for (int t : h.tokens) EXPECT_TRUE(t == Vocabulary::kEos || t >= 4);
}

TEST(BeamSearchTest, OracleCorrectorAtAlphaOneReturnsReference) {
  const std::vector<int> reference = {5, 7, 4, 6};
  TableScorer asr(9, 5), oracle(9, 6);
  oracle.override_ = [&](const std::vector<int> &prefix, std::vector<double> &l) {
    const size_t t = prefix.size() - 1;  // tokens emitted so far
    const int want = t < reference.size() ? reference[t] : Vocabulary::kEos;
    l[want] += 40.0;
  };
  std::vector<WeightedScorer> ws = FusionWeights(asr, &oracle, 1.0);
  ASSERT_EQ(ws.size(), 1u);
  std::vector<Hypothesis> beam = BeamSearch(ws, 4, 10);
  EXPECT_EQ(beam[0].Content(), reference);
}

class ModelDecodingTest : public ::testing::Test {
 protected:
  ModelDecodingTest()
      : asr_(ModelConfig::Toy(Architecture::kAsr), 21),
        corr_(ModelConfig::Toy(Architecture::kCrossModal), 22) {
    // Sharpen the untrained output layers so searches are non-trivial.
    for (Model *m : {&asr_, &corr_}) {
      Rng rng(m == &asr_ ? 1 : 2);
      Tensor w = m->parameters().Get("output.weight");
      for (double &v : w.mutable_data()) v = std::normal_distribution<>(0, 0.6)(rng);
    }
    Rng rng(3);
    frames_ = RandomTensor({30, 16}, rng);
  }
  Model asr_, corr_;
  Tensor frames_;
};

TEST_F(ModelDecodingTest, AlphaZeroFusionIsRecognizerOnly) {
  ModelScorer a(asr_, asr_.Encode(frames_, {}));
  ModelScorer c(corr_, corr_.Encode(frames_, std::vector<int>{4, 9, 12}));
  const WeightedScorer alone[1] = {{&a, 1.0}};
  std::vector<Hypothesis> x = BeamSearch(alone, 5, 12);
  std::vector<Hypothesis> y = BeamSearch(FusionWeights(a, &c, 0.0), 5, 12);
  ASSERT_EQ(x.size(), y.size());
  for (size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x[i].tokens, y[i].tokens);
    EXPECT_EQ(x[i].score, y[i].score);
  }
}

TEST_F(ModelDecodingTest, BeamOneIsGreedyOnModels) {
  ModelScorer a(asr_, asr_.Encode(frames_, {}));
  ModelScorer c(corr_, corr_.Encode(frames_, std::vector<int>{4, 9}));
  std::vector<WeightedScorer> ws = FusionWeights(a, &c, 0.4);
  Hypothesis greedy = GreedySearch(ws, 12);
  Hypothesis beam = BeamSearch(ws, 1, 12)[0];
  EXPECT_EQ(beam.tokens, greedy.tokens);
  EXPECT_EQ(beam.score, greedy.score);
}

TEST_F(ModelDecodingTest, ScoresMatchTeacherForcedEvaluation) {
  const std::vector<int> hyp = {6, 6, 10};
  const double alpha = 0.3;
  ModelScorer a(asr_, asr_.Encode(frames_, {}));
  ModelScorer c(corr_, corr_.Encode(frames_, hyp));
  std::vector<WeightedScorer> ws = FusionWeights(a, &c, alpha);
  for (const Hypothesis &h : BeamSearch(ws, 4, 12)) {
    if (!h.finished) continue;
    SequenceExample ex{frames_, hyp, h.Content()};
    Tensor la = asr_.Forward(ex), lc = corr_.Forward(ex);
    double expected = 0.0;
    for (size_t t = 0; t < h.tokens.size(); ++t)
      expected += FusedStepScore(la.at(t, h.tokens[t]), lc.at(t, h.tokens[t]),
                                 alpha);
    EXPECT_NEAR(h.score, expected, 1e-9);
  }
}

TEST_F(ModelDecodingTest, TwoPassEndpointsAndDeterminism) {
  FusionConfig cfg;
  cfg.beam_size = 4;
  cfg.alpha = 0.0;
  TwoPassResult zero = TwoPassDecode(asr_, &corr_, frames_, cfg);
  EXPECT_EQ(zero.final.tokens, zero.first_pass.tokens);
  EXPECT_EQ(zero.final.score, zero.first_pass.score);
  Hypothesis first = FirstPassDecode(asr_, frames_, cfg);
  EXPECT_EQ(first.tokens, zero.first_pass.tokens);
  cfg.alpha = 0.5;
  TwoPassResult a = TwoPassDecode(asr_, &corr_, frames_, cfg);
  TwoPassResult b = TwoPassDecode(asr_, &corr_, frames_, cfg);
  EXPECT_EQ(a.final.tokens, b.final.tokens);
  EXPECT_EQ(a.final.score, b.final.score);
  EXPECT_EQ(a.first_pass.tokens, zero.first_pass.tokens);
  EXPECT_THROW(TwoPassDecode(asr_, nullptr, frames_, cfg), ValidationError);
  EXPECT_THROW(TwoPassDecode(corr_, &corr_, frames_, cfg), ValidationError);
}

TEST_F(ModelDecodingTest, SeparateCorrectorAcceptsEmptyFirstPass) {
  Model sep(ModelConfig::Toy(Architecture::kSeparate), 23);
  ModelScorer a(asr_, asr_.Encode(frames_, {}));
  ModelScorer c(sep, sep.Encode(frames_, std::vector<int>{}));
  std::vector<Hypothesis> beam = BeamSearch(FusionWeights(a, &c, 0.5), 3, 8);
  EXPECT_FALSE(beam.empty());
}

}  // namespace
}  // namespace ncm
