// ncm/decoding/search.h

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

#ifndef NCM_DECODING_SEARCH_H_
#define NCM_DECODING_SEARCH_H_

#include <any>
#include <memory>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncm/models/model.h"

namespace ncm {

struct FusionConfig {
  double alpha = 0.3;  // corrector weight
  int beam_size = 20;
  double max_len_factor = 0.5;
  int max_len_offset = 2;

  void Validate() const;
  // Emission budget for a source of `source_frames` frames:
  // floor(max_len_factor * frames) + max_len_offset.
  int MaxLength(int64_t source_frames) const;

  nlohmann::json ToJson() const;
  static FusionConfig FromJson(const nlohmann::json &j);
};

// (1 - alpha) * asr_logp + alpha * corr_logp. The endpoints return one
// argument untouched, so -inf on the unused side never produces NaN.
double FusedStepScore(double asr_logp, double corr_logp, double alpha);

// Left-to-right next-token distributions for one input. States are opaque
// values; copying one must yield an independent continuation.
class StepScorer {
 public:
  virtual ~StepScorer() = default;
  virtual int vocab_size() const = 0;
  virtual std::any Start() const = 0;
  // Feeds `token` (bos first) and returns log-probabilities for the next one.
  virtual std::vector<double> Advance(std::any &state, int token) const = 0;
};

// Adapts a Model and one encoded input.
class ModelScorer : public StepScorer {
 public:
  ModelScorer(const Model &model, EncodedMemory memory);
  int vocab_size() const override;
  std::any Start() const override;
  std::vector<double> Advance(std::any &state, int token) const override;

 private:
  const Model &model_;
  EncodedMemory memory_;
};

struct WeightedScorer {
  const StepScorer *scorer;
  double weight;
};

struct Hypothesis {
  std::vector<int> tokens;  // emitted tokens, eos last when finished
  double score = 0.0;
  bool finished = false;
  bool forced = false;  // cut at the length budget without eos

  // Content tokens only (eos stripped).
  std::vector<int> Content() const;
};

// Beam search over the weighted sum of the scorers' log-probabilities.
// Candidates are content tokens and eos. The `beam_size` best expansions are
// kept each step; those ending in eos are set aside as finished. The search
// stops once `beam_size` entries have finished, no live entry remains, or
// `max_len` tokens have been emitted. Scores are not length-normalized.
// Ties are broken by ascending token sequence. If nothing finished, the live
// entries are returned flagged as forced. Result is sorted best first.
std::vector<Hypothesis> BeamSearch(std::span<const WeightedScorer> scorers,
                                   int beam_size, int max_len);

// Repeated argmax (lowest id on ties) until eos or `max_len` tokens.
Hypothesis GreedySearch(std::span<const WeightedScorer> scorers, int max_len);

// Scorer weights for shallow fusion: recognizer (1 - alpha), corrector
// alpha; a zero-weight side is dropped.
std::vector<WeightedScorer> FusionWeights(const StepScorer &asr,
                                          const StepScorer *corrector,
                                          double alpha);

struct TwoPassResult {
  Hypothesis first_pass;
  Hypothesis final;
};

// Recognizer-only beam search gives hypothesis C; a second beam search then
// scores every prefix with both the recognizer and the corrector
// conditioned on (frames, C). `corrector` may be null only when alpha is 0.
TwoPassResult TwoPassDecode(const Model &asr, const Model *corrector,
                            const Tensor &frames, const FusionConfig &config);

// Recognizer-only beam search.
Hypothesis FirstPassDecode(const Model &asr, const Tensor &frames,
                           const FusionConfig &config);

// The fused search of TwoPassDecode for a given first-pass result. Returns
// `first_pass` itself when alpha is 0.
Hypothesis SecondPassDecode(const Model &asr, const Model *corrector,
                            const Tensor &frames, const Hypothesis &first_pass,
                            const FusionConfig &config);

// Sum of per-step weighted log-probabilities of `tokens` fed through the
// scorers; used to audit search scores.
double SequenceScore(std::span<const WeightedScorer> scorers,
                     std::span<const int> tokens);

}  // namespace ncm

#endif  // NCM_DECODING_SEARCH_H_
