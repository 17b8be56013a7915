// ncm/training/trainer.h

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

#ifndef NCM_TRAINING_TRAINER_H_
#define NCM_TRAINING_TRAINER_H_

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncm/models/model.h"
#include "ncm/synthdata/task.h"

namespace ncm {

// Mean of -logp[r, targets[r]] over rows whose target is not `pad_id`.
Tensor CrossEntropyLoss(const Tensor &logp, std::span<const int> targets,
                        int pad_id = Vocabulary::kPad);

struct TrainConfig {
  int batch_size = 16;
  int total_steps = 3000;
  int warmup = 400;
  double lr_scale = 1.0;
  int eval_every = 250;
  // Dev utterances used for the periodic loss/CER (0 = all).
  int dev_limit = 0;
  uint64_t seed = 1;
  bool dropout = true;
  double clip_norm = 5.0;

  void Validate() const;
  nlohmann::json ToJson() const;
  static TrainConfig FromJson(const nlohmann::json &j);
};

struct MetricsRecord {
  int64_t step = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double dev_cer = 0.0;

  nlohmann::json ToJson() const;
};

struct TrainResult {
  double initial_dev_loss = 0.0;
  std::vector<MetricsRecord> log;
  int64_t best_step = 0;
  double best_dev_loss = 0.0;
  // Parameter values at best_step, in registry order.
  std::vector<std::vector<double>> best_values;
};

// Overwrites the model's parameters with result.best_values.
void RestoreBest(Model &model, const TrainResult &result);

struct TeacherForcedStats {
  double loss = 0.0;      // mean token NLL
  double accuracy = 0.0;  // argmax == target fraction
  int64_t tokens = 0;
};

// Builds model inputs; correctors read `hyp`, which must be present.
SequenceExample ToExample(const Model &model, const Utterance &u);

TeacherForcedStats EvaluateTeacherForced(const Model &model,
                                         std::span<const Utterance> data,
                                         int batch_size = 16);

// Greedy decoding CER of the model on its own inputs (recognizer: frames;
// corrector: frames and hypothesis).
double GreedyCer(const Model &model, std::span<const Utterance> data,
                 int workers = 1);

// Adam with the Noam schedule and global-norm clipping on shuffled
// mini-batches. Metrics are computed every `eval_every` steps and at the
// last step. When `out_dir` is non-empty it receives metrics.jsonl,
// best.ckpt (lowest dev loss) and final.ckpt. On return the model holds the
// final parameters. A non-finite loss aborts with RuntimeFailure after
// writing last_good.ckpt. Each metrics record is also echoed to `progress`
// when given.
TrainResult TrainModel(Model &model, std::span<const Utterance> train,
                       std::span<const Utterance> dev, const TrainConfig &config,
                       const std::string &out_dir = "", int workers = 1,
                       std::ostream *progress = nullptr);

}  // namespace ncm

#endif  // NCM_TRAINING_TRAINER_H_
