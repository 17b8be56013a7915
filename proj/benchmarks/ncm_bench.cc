// benchmarks/ncm_bench.cc

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

#include <benchmark/benchmark.h>

#include "ncm/decoding/search.h"
#include "ncm/evaluation/cer.h"
#include "ncm/numerics/autograd.h"
#include "ncm/numerics/ops.h"
#include "ncm/numerics/optimizer.h"
#include "ncm/synthdata/task.h"
#include "ncm/training/trainer.h"

namespace ncm {
namespace {

Tensor RandomMatrix(int64_t rows, int64_t cols, uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(rows * cols);
  for (double &x : v) x = normal(rng);
  return Tensor::FromData({rows, cols}, std::move(v));
}

std::vector<Utterance> SmallCorpus(int n, bool with_hyp) {
  TaskSpec spec;
  spec.train_size = n;
  std::vector<Utterance> data =
      SyntheticTask(spec, 1).GenerateSplit(CorpusSplit::kTrain);
  if (with_hyp)
    for (Utterance &u : data) u.hyp = u.tokens;
  return data;
}

void BM_MatMul(benchmark::State &state) {
  const int64_t n = state.range(0);
  Tensor a = RandomMatrix(n, n, 1), b = RandomMatrix(n, n, 2);
  NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(MatMul(a, b).data().data());
  state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(BM_MatMul)->Arg(64)->Arg(256);

void BM_SoftmaxBackward(benchmark::State &state) {
  Tensor x = RandomMatrix(64, 64, 3).Clone(true);
  for (auto _ : state) {
    Tensor loss = ReduceSum(Mul(Softmax(x), x));
    Backward(loss);
    x.ZeroGrad();
  }
}
BENCHMARK(BM_SoftmaxBackward);

void BM_TrainStep(benchmark::State &state) {
  const auto arch = static_cast<Architecture>(state.range(0));
  Model model(ModelConfig::Toy(arch), 1);
  const std::vector<Utterance> data = SmallCorpus(16, arch != Architecture::kAsr);
  std::vector<SequenceExample> batch;
  for (const Utterance &u : data) batch.push_back(ToExample(model, u));
  AdamOptimizer adam(model.parameters());
  Rng rng(4);
  int step = 0;
  for (auto _ : state) {
    BatchScores s = model.ForwardBatch(batch, {true, &rng});
    Tensor loss = CrossEntropyLoss(s.logp, s.targets);
    Backward(loss);
    for (const auto &[name, t] : model.parameters().entries())
      if (!t.has_grad()) Tensor(t).mutable_grad();
    ClipGradNorm(model.parameters(), 5.0);
    adam.Step(model.parameters(), NoamLearningRate(++step, 64, 400));
  }
  state.SetLabel(ArchitectureName(arch));
}
BENCHMARK(BM_TrainStep)
    ->Arg(static_cast<int>(Architecture::kAsr))
    ->Arg(static_cast<int>(Architecture::kCrossModal))
    ->Arg(static_cast<int>(Architecture::kSeparate))
    ->Unit(benchmark::kMillisecond);

void BM_BeamSearch(benchmark::State &state) {
  Model asr(ModelConfig::Toy(Architecture::kAsr), 1);
  // Non-zero output layer so hypotheses grow to the length budget.
  Tensor w = asr.parameters().Get("output.weight");
  Rng rng(5);
  std::normal_distribution<double> normal(0.0, 0.5);
  for (double &v : w.mutable_data()) v = normal(rng);
  const Utterance u = SmallCorpus(1, false)[0];
  FusionConfig cfg;
  cfg.beam_size = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(FirstPassDecode(asr, u.frames, cfg).score);
}
BENCHMARK(BM_BeamSearch)->Arg(1)->Arg(4)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_Align(benchmark::State &state) {
  Rng rng(6);
  std::uniform_int_distribution<int> sym(0, 25);
  std::vector<int> a(state.range(0)), b(state.range(0));
  for (int &x : a) x = sym(rng);
  for (int &x : b) x = sym(rng);
  for (auto _ : state) benchmark::DoNotOptimize(Align(a, b).errors());
}
BENCHMARK(BM_Align)->Arg(20)->Arg(200);

}  // namespace
}  // namespace ncm

BENCHMARK_MAIN();
