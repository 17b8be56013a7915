// ncm/evaluation/experiments.h

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

#ifndef NCM_EVALUATION_EXPERIMENTS_H_
#define NCM_EVALUATION_EXPERIMENTS_H_

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncm/decoding/search.h"
#include "ncm/evaluation/cer.h"
#include "ncm/synthdata/task.h"

namespace ncm {

enum class SystemKind {
  kBaseline,
  kSeparate,
  kSeparateFused,
  kCrossModal,
  kCrossModalFused,
};

// "baseline", "separate", "separate+SF", "cross_modal", "cross_modal+SF".
std::string SystemName(SystemKind kind);
SystemKind ParseSystem(const std::string &name);
// Corrector architecture a system needs; kAsr for the baseline.
Architecture SystemArchitecture(SystemKind kind);
// Corrector weight used by a system: 0, 1, or `fused_alpha`.
double SystemAlpha(SystemKind kind, double fused_alpha);

// Recognizer beam search over every utterance (utterance-parallel).
std::vector<Hypothesis> DecodeFirstPass(const Model &asr,
                                        std::span<const Utterance> data,
                                        const FusionConfig &config,
                                        int workers = 1);

// Per-utterance vectors follow the input order; the report leaves out
// empty references.
struct SystemResult {
  CerReport report;
  std::vector<std::string> ids;
  std::vector<std::vector<int>> references, first_pass, outputs;
  double alpha = 0.0;
};

// Scores one system on `data`. `first_pass` may carry precomputed
// DecodeFirstPass output for the same recognizer and beam.
SystemResult EvaluateSystem(SystemKind kind, const Model &asr,
                            const Model *corrector,
                            std::span<const Utterance> data,
                            const FusionConfig &config, int workers = 1,
                            const std::vector<Hypothesis> *first_pass = nullptr);

// JSON-lines {"id", "reference", "first_pass", "output", "sub", "ins", "del"}.
void WriteTranscripts(const std::string &path, const SystemResult &result,
                      const Vocabulary &vocab);

struct SweepRow {
  double alpha = 0.0;
  double cer = 0.0;
  EditCounts totals;
};

// One fused decode per alpha over a shared first pass. `results`, when
// given, receives the full SystemResult of every alpha.
std::vector<SweepRow> SweepAlpha(const Model &asr, const Model &corrector,
                                 std::span<const Utterance> data,
                                 const FusionConfig &config,
                                 std::span<const double> alphas,
                                 int workers = 1,
                                 std::vector<SystemResult> *results = nullptr);

// Lowest CER; the earlier row wins a tie.
const SweepRow &BestRow(std::span<const SweepRow> rows);

// "alpha,cer,sub,ins,del" with a header row.
std::string SweepCsv(std::span<const SweepRow> rows);

// 0, 0.1, ..., 1.
std::vector<double> DefaultAlphaGrid();

struct HeadModalityStats {
  int block = 0;
  int head = 0;
  // Attention mass per query row, averaged over the rows of the query
  // segment; the separator row and column belong to neither segment.
  double text_to_speech = 0.0;
  double speech_to_text = 0.0;
  double within_speech = 0.0;
  double within_text = 0.0;
  // Mass crossing between speech and text over all speech and text rows.
  double cross_segment = 0.0;

  nlohmann::json ToJson() const;
};

// Statistics of one row-major (L x L) weight matrix laid out as speech rows
// [0, speech_len), the separator, then text_len text rows.
HeadModalityStats ComputeModalityStats(std::span<const double> weights,
                                       int64_t speech_len, int64_t text_len);

// Self-attention of the cross-modal joint encoder for one input.
struct AttentionDump {
  std::string utterance_id;
  int64_t speech_len = 0;  // rows [0, speech_len)
  int64_t separator = 0;   // == speech_len
  int64_t text_len = 0;    // rows [separator + 1, separator + 1 + text_len)
  // weights[block] is (heads x L x L), L = speech_len + 1 + text_len.
  std::vector<Tensor> weights;
  std::vector<HeadModalityStats> stats;

  int64_t length() const { return speech_len + 1 + text_len; }
  nlohmann::json BoundariesJson() const;
};

AttentionDump ComputeAttentionDump(const Model &cross_modal,
                                   const Utterance &utterance);

// Writes block<b>_head<h>.csv and .pgm per matrix plus boundaries.json into
// `dir`; returns the written paths.
std::vector<std::string> WriteAttentionDump(const AttentionDump &dump,
                                            const std::string &dir);

}  // namespace ncm

#endif  // NCM_EVALUATION_EXPERIMENTS_H_
