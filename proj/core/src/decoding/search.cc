// decoding/search.cc

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

#include "ncm/decoding/search.h"

#include <algorithm>
#include <cmath>

#include "ncm/common/error.h"
#include "ncm/common/json_util.h"

namespace ncm {

void FusionConfig::Validate() const {
  NCM_CHECK(alpha >= 0.0 && alpha <= 1.0, "decode.alpha must lie in [0, 1], got ",
            alpha);
  NCM_CHECK(beam_size >= 1, "decode.beam_size must be >= 1, got ", beam_size);
  NCM_CHECK(max_len_factor >= 0.0, "decode.max_len_factor must be >= 0, got ",
            max_len_factor);
  NCM_CHECK(max_len_offset >= 1, "decode.max_len_offset must be >= 1, got ",
            max_len_offset);
}

int FusionConfig::MaxLength(int64_t source_frames) const {
  return static_cast<int>(std::floor(max_len_factor * source_frames)) +
         max_len_offset;
}

nlohmann::json FusionConfig::ToJson() const {
  return {{"alpha", alpha},
          {"beam_size", beam_size},
          {"max_len_factor", max_len_factor},
          {"max_len_offset", max_len_offset}};
}

FusionConfig FusionConfig::FromJson(const nlohmann::json &j) {
  CheckKeys(j, "decode",
            {"alpha", "beam_size", "max_len_factor", "max_len_offset"});
  FusionConfig c;
  ReadField(j, "decode", "alpha", c.alpha);
  ReadField(j, "decode", "beam_size", c.beam_size);
  ReadField(j, "decode", "max_len_factor", c.max_len_factor);
  ReadField(j, "decode", "max_len_offset", c.max_len_offset);
  c.Validate();
  return c;
}

double FusedStepScore(double asr_logp, double corr_logp, double alpha) {
  if (alpha == 0.0) return asr_logp;
  if (alpha == 1.0) return corr_logp;
  return (1.0 - alpha) * asr_logp + alpha * corr_logp;
}

ModelScorer::ModelScorer(const Model &model, EncodedMemory memory)
    : model_(model), memory_(std::move(memory)) {}

int ModelScorer::vocab_size() const { return model_.config().vocab_size(); }

std::any ModelScorer::Start() const { return model_.Start(memory_); }

std::vector<double> ModelScorer::Advance(std::any &state, int token) const {
  return model_.Step(std::any_cast<DecoderState &>(state), token);
}

std::vector<int> Hypothesis::Content() const {
  std::vector<int> out;
  for (int t : tokens)
    if (t != Vocabulary::kEos) out.push_back(t);
  return out;
}

namespace {

int CheckScorers(std::span<const WeightedScorer> scorers) {
  NCM_CHECK(!scorers.empty(), "search: no scorers");
  const int v = scorers[0].scorer->vocab_size();
  for (const WeightedScorer &s : scorers)
    NCM_CHECK(s.scorer->vocab_size() == v,
              "search: scorers disagree on vocabulary size (", v, " vs ",
              s.scorer->vocab_size(), ")");
  return v;
}

bool Emittable(int token) {
  return token == Vocabulary::kEos || token >= Vocabulary::kNumReserved;
}

// Weighted sum over scorers of the next-token log-probabilities.
std::vector<double> Combine(std::span<const WeightedScorer> scorers,
                            std::vector<std::any> &states, int token) {
  std::vector<double> total;
  for (size_t i = 0; i < scorers.size(); ++i) {
    std::vector<double> logp = scorers[i].scorer->Advance(states[i], token);
    if (i == 0) {
      total.assign(logp.size(), 0.0);
      for (size_t v = 0; v < logp.size(); ++v)
        total[v] = scorers[i].weight * logp[v];
    } else {
      for (size_t v = 0; v < logp.size(); ++v)
        total[v] += scorers[i].weight * logp[v];
    }
  }
  return total;
}

std::vector<std::any> StartAll(std::span<const WeightedScorer> scorers) {
  std::vector<std::any> states;
  for (const WeightedScorer &s : scorers) states.push_back(s.scorer->Start());
  return states;
}

bool Better(const Hypothesis &a, const Hypothesis &b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

struct LiveEntry {
  Hypothesis hyp;
  std::vector<std::any> states;
  int last = Vocabulary::kBos;
};

}  // namespace

std::vector<Hypothesis> BeamSearch(std::span<const WeightedScorer> scorers,
                                   int beam_size, int max_len) {
  NoGradGuard no_grad;
  const int vocab = CheckScorers(scorers);
  NCM_CHECK(beam_size >= 1, "search: beam_size must be >= 1, got ", beam_size);
  NCM_CHECK(max_len >= 1, "search: max_len must be >= 1, got ", max_len);
  std::vector<LiveEntry> live(1);
  live[0].states = StartAll(scorers);
  std::vector<Hypothesis> finished;

  struct Candidate {
    double score;
    size_t parent;
    int token;
  };
  for (int len = 0; len < max_len && !live.empty() &&
                    static_cast<int>(finished.size()) < beam_size;
       ++len) {
    std::vector<Candidate> candidates;
    for (size_t p = 0; p < live.size(); ++p) {
      std::vector<double> step = Combine(scorers, live[p].states, live[p].last);
      for (int v = 0; v < vocab; ++v)
        if (Emittable(v))
          candidates.push_back({live[p].hyp.score + step[v], p, v});
    }
    auto better = [&](const Candidate &a, const Candidate &b) {
      if (a.score != b.score) return a.score > b.score;
      const auto &ta = live[a.parent].hyp.tokens;
      const auto &tb = live[b.parent].hyp.tokens;
      if (ta != tb) return ta < tb;
      return a.token < b.token;
    };
    const size_t keep =
        std::min(candidates.size(), static_cast<size_t>(beam_size));
    std::partial_sort(candidates.begin(), candidates.begin() + keep,
                      candidates.end(), better);
    std::vector<LiveEntry> next;
    for (size_t c = 0; c < keep; ++c) {
      const Candidate &cand = candidates[c];
      const LiveEntry &parent = live[cand.parent];
      Hypothesis hyp;
      hyp.tokens = parent.hyp.tokens;
      hyp.tokens.push_back(cand.token);
      hyp.score = cand.score;
      if (cand.token == Vocabulary::kEos) {
        hyp.finished = true;
        finished.push_back(std::move(hyp));
      } else {
        next.push_back({std::move(hyp), parent.states, cand.token});
      }
    }
    live = std::move(next);
  }

  std::vector<Hypothesis> result = std::move(finished);
  if (result.empty()) {
    for (LiveEntry &e : live) {
      e.hyp.forced = true;
      result.push_back(std::move(e.hyp));
    }
  }
  std::sort(result.begin(), result.end(), Better);
  return result;
}

Hypothesis GreedySearch(std::span<const WeightedScorer> scorers, int max_len) {
  NoGradGuard no_grad;
  const int vocab = CheckScorers(scorers);
  NCM_CHECK(max_len >= 1, "search: max_len must be >= 1, got ", max_len);
  std::vector<std::any> states = StartAll(scorers);
  Hypothesis hyp;
  int last = Vocabulary::kBos;
  for (int len = 0; len < max_len; ++len) {
    std::vector<double> step = Combine(scorers, states, last);
    int best = -1;
    for (int v = 0; v < vocab; ++v)
      if (Emittable(v) && (best < 0 || step[v] > step[best])) best = v;
    hyp.score = hyp.score + step[best];
    hyp.tokens.push_back(best);
    if (best == Vocabulary::kEos) {
      hyp.finished = true;
      return hyp;
    }
    last = best;
  }
  hyp.forced = true;
  return hyp;
}

std::vector<WeightedScorer> FusionWeights(const StepScorer &asr,
                                          const StepScorer *corrector,
                                          double alpha) {
  NCM_CHECK(alpha >= 0.0 && alpha <= 1.0, "fusion: alpha must lie in [0, 1], got ",
            alpha);
  std::vector<WeightedScorer> out;
  if (alpha < 1.0) out.push_back({&asr, 1.0 - alpha});
  if (alpha > 0.0) {
    NCM_CHECK(corrector != nullptr, "fusion: alpha ", alpha,
              " needs a corrector");
    out.push_back({corrector, alpha});
  }
  return out;
}

namespace {

int SearchLength(const Model &asr, const Model *corrector, int64_t frames,
                 const FusionConfig &config) {
  int limit = asr.config().max_target_len + 1;
  if (corrector) limit = std::min(limit, corrector->config().max_target_len + 1);
  return std::min(config.MaxLength(frames), limit);
}

}  // namespace

Hypothesis FirstPassDecode(const Model &asr, const Tensor &frames,
                           const FusionConfig &config) {
  config.Validate();
  NCM_CHECK(asr.config().arch == Architecture::kAsr,
            "decode: first pass needs an asr model, got ",
            ArchitectureName(asr.config().arch));
  NoGradGuard no_grad;
  ModelScorer scorer(asr, asr.Encode(frames, {}));
  const WeightedScorer ws[1] = {{&scorer, 1.0}};
  return BeamSearch(ws, config.beam_size,
                    SearchLength(asr, nullptr, frames.dim(0), config))[0];
}

Hypothesis SecondPassDecode(const Model &asr, const Model *corrector,
                            const Tensor &frames, const Hypothesis &first_pass,
                            const FusionConfig &config) {
  config.Validate();
  NCM_CHECK(asr.config().arch == Architecture::kAsr,
            "decode: first pass needs an asr model, got ",
            ArchitectureName(asr.config().arch));
  NCM_CHECK(corrector != nullptr || config.alpha == 0.0, "decode: alpha ",
            config.alpha, " needs a corrector");
  // A zero corrector weight leaves exactly the first-pass search.
  if (config.alpha == 0.0) return first_pass;
  NCM_CHECK(corrector->config().uses_hypothesis(),
            "decode: second pass needs a corrector, got ",
            ArchitectureName(corrector->config().arch));
  NCM_CHECK(corrector->config().vocab_size() == asr.config().vocab_size(),
            "decode: recognizer and corrector vocabularies differ (",
            asr.config().vocab_size(), " vs ",
            corrector->config().vocab_size(), ")");
  NoGradGuard no_grad;
  ModelScorer asr_scorer(asr, asr.Encode(frames, {}));
  ModelScorer corr_scorer(*corrector,
                          corrector->Encode(frames, first_pass.Content()));
  std::vector<WeightedScorer> ws =
      FusionWeights(asr_scorer, &corr_scorer, config.alpha);
  return BeamSearch(ws, config.beam_size,
                    SearchLength(asr, corrector, frames.dim(0), config))[0];
}

TwoPassResult TwoPassDecode(const Model &asr, const Model *corrector,
                            const Tensor &frames, const FusionConfig &config) {
  TwoPassResult result;
  result.first_pass = FirstPassDecode(asr, frames, config);
  result.final =
      SecondPassDecode(asr, corrector, frames, result.first_pass, config);
  return result;
}

double SequenceScore(std::span<const WeightedScorer> scorers,
                     std::span<const int> tokens) {
  NoGradGuard no_grad;
  CheckScorers(scorers);
  std::vector<std::any> states = StartAll(scorers);
  double score = 0.0;
  int last = Vocabulary::kBos;
  for (int t : tokens) {
    score = score + Combine(scorers, states, last)[t];
    last = t;
  }
  return score;
}

}  // namespace ncm
