// tools/cli/run_config.h

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

#ifndef NCM_TOOLS_CLI_RUN_CONFIG_H_
#define NCM_TOOLS_CLI_RUN_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncm/decoding/search.h"
#include "ncm/evaluation/experiments.h"
#include "ncm/models/model_config.h"
#include "ncm/synthdata/task.h"
#include "ncm/training/trainer.h"

namespace ncm::cli {

// Locations of inputs and outputs. Empty entries resolve under run_dir.
struct PathsConfig {
  std::string run_dir = "run";
  std::string data_dir;                // run_dir/data
  std::string triples_dir;             // run_dir/triples
  std::string asr_checkpoint;          // run_dir/asr/best.ckpt
  std::string cross_modal_checkpoint;  // run_dir/cross_modal/best.ckpt
  std::string separate_checkpoint;     // run_dir/separate/best.ckpt

  std::string Data() const;
  std::string Triples() const;
  std::string Asr() const;
  std::string Corrector(Architecture arch) const;
  nlohmann::json ToJson() const;
};

// One JSON document with sections task, model, train, decode and paths, plus
// the top-level master seed. The model section omits the architecture, which
// each subcommand fixes; the train section omits the seed, which is derived
// per stage from the master seed.
struct RunConfig {
  uint64_t seed = 7;
  TaskSpec task;
  ModelConfig model;
  TrainConfig train;
  FusionConfig decode;
  std::vector<double> alphas = DefaultAlphaGrid();
  PathsConfig paths;

  ModelConfig ModelFor(Architecture arch) const;
  TrainConfig TrainFor(const std::string &stage) const;
  // Cross-section consistency (vocabulary, feature dimension, lengths).
  void Validate() const;
  // Effective configuration with every default filled in.
  nlohmann::json ToJson() const;
  static RunConfig FromJson(const nlohmann::json &j);
  // Errors name the file.
  static RunConfig Load(const std::string &path);
};

// Parses "0,0.1,0.5" into a list of alphas in [0, 1].
std::vector<double> ParseAlphaList(const std::string &text);

}  // namespace ncm::cli

#endif  // NCM_TOOLS_CLI_RUN_CONFIG_H_
