// ncm/training/checkpoint.h

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

#ifndef NCM_TRAINING_CHECKPOINT_H_
#define NCM_TRAINING_CHECKPOINT_H_

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "ncm/models/model.h"

namespace ncm {

// Layout: the 5 bytes "NCMK1", a little-endian uint64 header length, the
// JSON header {format_version, model_config, parameters: [{name, shape}],
// step, metrics}, then every parameter as little-endian float64 in registry
// order.
constexpr int kCheckpointFormatVersion = 1;

void SaveCheckpoint(const std::string &path, const Model &model, int64_t step,
                    const nlohmann::json &metrics = nlohmann::json::object());

struct LoadedCheckpoint {
  std::unique_ptr<Model> model;
  int64_t step = 0;
  nlohmann::json metrics;
};

// Rebuilds the model from the stored config and fills its parameters.
LoadedCheckpoint LoadCheckpoint(const std::string &path);

// Fills an existing model; its config must equal the stored one.
void LoadCheckpointInto(const std::string &path, Model &model);

}  // namespace ncm

#endif  // NCM_TRAINING_CHECKPOINT_H_
