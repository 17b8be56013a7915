// ncm/models/model_config.h

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

#ifndef NCM_MODELS_MODEL_CONFIG_H_
#define NCM_MODELS_MODEL_CONFIG_H_

#include <string>

#include <nlohmann/json.hpp>

#include "ncm/layers/layer_config.h"

namespace ncm {

enum class Architecture { kAsr, kCrossModal, kSeparate };

// "asr", "cross_modal", "separate".
std::string ArchitectureName(Architecture arch);
Architecture ParseArchitecture(const std::string &name);

struct ModelConfig {
  Architecture arch = Architecture::kAsr;
  LayerConfig layer;
  int encoder_blocks = 2;         // M: speech encoder (asr), joint encoder
                                  // (cross_modal), text encoder (separate)
  int decoder_blocks = 2;         // N
  int speech_encoder_blocks = 2;  // L, separate model only
  int conv_channels = 16;
  int num_content_tokens = 26;
  int feature_dim = 16;
  int max_source_frames = 400;
  int max_target_len = 64;

  // d_model 64, 4 heads, ffn 256, two blocks everywhere.
  static ModelConfig Toy(Architecture arch);
  // d_model 256, 4 heads, ffn 2048, six blocks everywhere.
  static ModelConfig Large(Architecture arch);

  int vocab_size() const { return num_content_tokens + 4; }
  bool uses_hypothesis() const { return arch != Architecture::kAsr; }

  void Validate() const;
  nlohmann::json ToJson() const;
  // Missing keys keep their defaults; unknown keys and ill-typed values are
  // rejected with the offending field named.
  static ModelConfig FromJson(const nlohmann::json &j);

  bool operator==(const ModelConfig &other) const {
    return ToJson() == other.ToJson();
  }
};

}  // namespace ncm

#endif  // NCM_MODELS_MODEL_CONFIG_H_
