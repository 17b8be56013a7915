// ncm/synthdata/task.h

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

#ifndef NCM_SYNTHDATA_TASK_H_
#define NCM_SYNTHDATA_TASK_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncm/numerics/random.h"
#include "ncm/numerics/tensor.h"

namespace ncm {

// Content tokens are indexed from 0 here; corpora store vocabulary ids
// (index + 4).
struct ConfusablePair {
  int a = 0;
  int b = 1;
  double distance = 0.6;
};

struct TaskSpec {
  int vocab_size = 26;  // content tokens
  int feature_dim = 16;
  int min_frames_per_token = 2;
  int max_frames_per_token = 4;
  double noise_sigma = 0.5;
  double mean_radius = 3.0;
  std::vector<ConfusablePair> confusable_pairs = {
      {0, 1, 0.6}, {2, 3, 0.6}, {4, 5, 0.6}, {6, 7, 0.6}};
  int markov_order = 2;
  // Logit scale of the random transition table; larger is more predictable.
  double markov_sharpness = 2.0;
  int min_length = 5;
  int max_length = 20;
  int train_size = 8000;
  int dev_size = 500;
  int eval_size = 500;
  // Hypothesis generation for correction triples.
  double triple_noise_sigma = 0.5;
  int triple_beam_size = 4;

  void Validate() const;
  nlohmann::json ToJson() const;
  static TaskSpec FromJson(const nlohmann::json &j);
};

// One utterance; `hyp` is present for correction triples.
struct Utterance {
  std::string id;
  std::vector<int> tokens;  // vocabulary ids
  Tensor frames;            // I x feature_dim
  std::optional<std::vector<int>> hyp;
};

enum class CorpusSplit { kTrain = 0, kDev = 1, kEval = 2 };
std::string SplitName(CorpusSplit split);
CorpusSplit ParseSplit(const std::string &name);

// The random world drawn from (spec, seed): token means and the order-n
// transition table.
class SyntheticTask {
 public:
  SyntheticTask(const TaskSpec &spec, uint64_t seed);

  const TaskSpec &spec() const { return spec_; }
  uint64_t seed() const { return seed_; }
  // Mean of content token k (0-based), feature_dim values.
  std::span<const double> mean(int k) const;
  // P(next | context) for the context of the last `markov_order` tokens,
  // padded on the left with a start symbol.
  std::span<const double> transition(std::span<const int> history) const;

  // Content indices (0-based) sampled from the chain, length uniform in
  // [min_length, max_length].
  std::vector<int> SampleTokens(Rng &rng) const;
  // Frames for content indices: per token n ~ U{min, max} frames of
  // mean + N(0, sigma^2 I), rounded to 1e-6.
  Tensor RenderFeatures(std::span<const int> content, Rng &rng) const;

  Utterance MakeUtterance(CorpusSplit split, int index) const;
  std::vector<Utterance> GenerateSplit(CorpusSplit split, int workers = 1) const;

 private:
  size_t ContextIndex(std::span<const int> history) const;

  TaskSpec spec_;
  uint64_t seed_;
  std::vector<double> means_;        // vocab x feature_dim
  std::vector<double> transitions_;  // contexts x vocab
};

struct Corpora {
  std::vector<Utterance> train, dev, eval;
};
Corpora GenerateCorpora(const TaskSpec &spec, uint64_t seed, int workers = 1);

// JSON-lines: {"id", "tokens", "frames"} plus "hyp" for triples.
void WriteCorpus(const std::string &path, std::span<const Utterance> corpus);
// Validates every line; errors name the file and line.
std::vector<Utterance> ReadCorpus(const std::string &path);

nlohmann::json CorpusManifest(const TaskSpec &spec, uint64_t seed,
                              const std::string &split, size_t count);

constexpr const char *kGeneratorVersion = "ncm-synth-1";

}  // namespace ncm

#endif  // NCM_SYNTHDATA_TASK_H_
