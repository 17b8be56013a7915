// tools/cli/pipeline.h

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

#ifndef NCM_TOOLS_CLI_PIPELINE_H_
#define NCM_TOOLS_CLI_PIPELINE_H_

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "cli/run_config.h"
#include "ncm/evaluation/experiments.h"
#include "ncm/training/trainer.h"

namespace ncm::cli {

// Seeds of the individual stages, all derived from RunConfig::seed.
uint64_t DataSeed(const RunConfig &cfg);
uint64_t InitSeed(const RunConfig &cfg, Architecture arch);
uint64_t TripleNoiseSeed(const RunConfig &cfg, CorpusSplit split);

// Writes effective config.json into the run directory.
void WriteEffectiveConfig(const RunConfig &cfg);

// data/{train,dev,eval}.jsonl plus manifest.json.
void StageGenData(const RunConfig &cfg, int workers, std::ostream &log);

// Trains a recognizer on data/ into run_dir/asr.
TrainResult StageTrainAsr(const RunConfig &cfg, int workers, std::ostream &log);

// triples/{train,dev}.jsonl from noisy-feature decoding and
// triples/eval.jsonl from the plain first pass, plus summary.json.
void StageMakeTriples(const RunConfig &cfg, int workers, std::ostream &log);

// Trains a corrector on triples/ into run_dir/<arch>.
TrainResult StageTrainCorrector(const RunConfig &cfg, Architecture arch,
                                int workers, std::ostream &log);

struct ExperimentSummary {
  // Alpha chosen on the dev sweep of each corrector.
  std::map<std::string, double> selected_alpha;
  std::map<std::string, std::vector<SweepRow>> dev_sweeps, eval_sweeps;
  // Eval CER per system name.
  std::map<std::string, double> cer;

  nlohmann::json ToJson() const;
};

// Dev sweeps select alpha per corrector; eval sweeps and the five systems
// are then scored on data/eval.jsonl. Writes run_dir/eval.
ExperimentSummary StageEvaluate(const RunConfig &cfg, int workers,
                                std::ostream &log);

// Attention of the cross-modal corrector on one eval triple (the first one
// when `utterance_id` is empty). Writes run_dir/attention.
AttentionDump StageDumpAttention(const RunConfig &cfg,
                                 const std::string &utterance_id,
                                 std::ostream &log);

struct PipelineResult {
  TrainResult asr, cross_modal, separate;
  ExperimentSummary summary;
  AttentionDump attention;
};

// Every stage above in order.
PipelineResult RunPipeline(const RunConfig &cfg, int workers,
                           std::ostream &log);

}  // namespace ncm::cli

#endif  // NCM_TOOLS_CLI_PIPELINE_H_
