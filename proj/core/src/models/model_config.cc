// models/model_config.cc

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

#include "ncm/models/model_config.h"

#include "ncm/common/error.h"
#include "ncm/common/json_util.h"

namespace ncm {

std::string ArchitectureName(Architecture arch) {
  switch (arch) {
    case Architecture::kAsr: return "asr";
    case Architecture::kCrossModal: return "cross_modal";
    case Architecture::kSeparate: return "separate";
  }
  return "?";
}

Architecture ParseArchitecture(const std::string &name) {
  if (name == "asr") return Architecture::kAsr;
  if (name == "cross_modal" || name == "cross-modal")
    return Architecture::kCrossModal;
  if (name == "separate") return Architecture::kSeparate;
  throw ValidationError("unknown architecture '" + name +
                        "' (expected asr, cross_modal or separate)");
}

ModelConfig ModelConfig::Toy(Architecture arch) {
  ModelConfig c;
  c.arch = arch;
  return c;
}

ModelConfig ModelConfig::Large(Architecture arch) {
  ModelConfig c;
  c.arch = arch;
  c.layer.d_model = 256;
  c.layer.num_heads = 4;
  c.layer.ffn_dim = 2048;
  c.encoder_blocks = c.decoder_blocks = c.speech_encoder_blocks = 6;
  c.conv_channels = 64;
  return c;
}

void ModelConfig::Validate() const {
  layer.Validate();
  NCM_CHECK(encoder_blocks >= 1, "model.encoder_blocks must be >= 1, got ",
            encoder_blocks);
  NCM_CHECK(decoder_blocks >= 1, "model.decoder_blocks must be >= 1, got ",
            decoder_blocks);
  NCM_CHECK(arch != Architecture::kSeparate || speech_encoder_blocks >= 1,
            "model.speech_encoder_blocks must be >= 1, got ",
            speech_encoder_blocks);
  NCM_CHECK(conv_channels >= 1, "model.conv_channels must be >= 1, got ",
            conv_channels);
  NCM_CHECK(num_content_tokens >= 1,
            "model.num_content_tokens must be >= 1, got ", num_content_tokens);
  NCM_CHECK(feature_dim >= 1, "model.feature_dim must be >= 1, got ",
            feature_dim);
  NCM_CHECK(max_source_frames >= 4,
            "model.max_source_frames must be >= 4, got ", max_source_frames);
  NCM_CHECK(max_target_len >= 1, "model.max_target_len must be >= 1, got ",
            max_target_len);
}

nlohmann::json ModelConfig::ToJson() const {
  return {{"arch", ArchitectureName(arch)},
          {"d_model", layer.d_model},
          {"num_heads", layer.num_heads},
          {"ffn_dim", layer.ffn_dim},
          {"dropout", layer.dropout},
          {"encoder_blocks", encoder_blocks},
          {"decoder_blocks", decoder_blocks},
          {"speech_encoder_blocks", speech_encoder_blocks},
          {"conv_channels", conv_channels},
          {"num_content_tokens", num_content_tokens},
          {"feature_dim", feature_dim},
          {"max_source_frames", max_source_frames},
          {"max_target_len", max_target_len}};
}

ModelConfig ModelConfig::FromJson(const nlohmann::json &j) {
  CheckKeys(j, "model",
            {"arch", "d_model", "num_heads", "ffn_dim", "dropout",
             "encoder_blocks", "decoder_blocks", "speech_encoder_blocks",
             "conv_channels", "num_content_tokens", "feature_dim",
             "max_source_frames", "max_target_len"});
  ModelConfig c;
  std::string arch = ArchitectureName(c.arch);
  ReadField(j, "model", "arch", arch);
  c.arch = ParseArchitecture(arch);
  ReadField(j, "model", "d_model", c.layer.d_model);
  ReadField(j, "model", "num_heads", c.layer.num_heads);
  ReadField(j, "model", "ffn_dim", c.layer.ffn_dim);
  ReadField(j, "model", "dropout", c.layer.dropout);
  ReadField(j, "model", "encoder_blocks", c.encoder_blocks);
  ReadField(j, "model", "decoder_blocks", c.decoder_blocks);
  ReadField(j, "model", "speech_encoder_blocks", c.speech_encoder_blocks);
  ReadField(j, "model", "conv_channels", c.conv_channels);
  ReadField(j, "model", "num_content_tokens", c.num_content_tokens);
  ReadField(j, "model", "feature_dim", c.feature_dim);
  ReadField(j, "model", "max_source_frames", c.max_source_frames);
  ReadField(j, "model", "max_target_len", c.max_target_len);
  c.Validate();
  return c;
}

}  // namespace ncm
