// tools/cli/run_config.cc

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

#include "cli/run_config.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ncm/common/error.h"
#include "ncm/common/json_util.h"
#include "ncm/evaluation/experiments.h"

namespace ncm::cli {

namespace fs = std::filesystem;

namespace {

std::string Under(const std::string &explicit_path, const std::string &root,
                  const std::string &rel) {
  return explicit_path.empty() ? (fs::path(root) / rel).string() : explicit_path;
}

}  // namespace

std::string PathsConfig::Data() const { return Under(data_dir, run_dir, "data"); }

std::string PathsConfig::Triples() const {
  return Under(triples_dir, run_dir, "triples");
}

std::string PathsConfig::Asr() const {
  return Under(asr_checkpoint, run_dir, "asr/best.ckpt");
}

std::string PathsConfig::Corrector(Architecture arch) const {
  NCM_CHECK(arch != Architecture::kAsr, "paths: no corrector for arch asr");
  if (arch == Architecture::kSeparate)
    return Under(separate_checkpoint, run_dir, "separate/best.ckpt");
  return Under(cross_modal_checkpoint, run_dir, "cross_modal/best.ckpt");
}

nlohmann::json PathsConfig::ToJson() const {
  return {{"run_dir", run_dir},
          {"data_dir", data_dir},
          {"triples_dir", triples_dir},
          {"asr_checkpoint", asr_checkpoint},
          {"cross_modal_checkpoint", cross_modal_checkpoint},
          {"separate_checkpoint", separate_checkpoint}};
}

ModelConfig RunConfig::ModelFor(Architecture arch) const {
  ModelConfig c = model;
  c.arch = arch;
  return c;
}

TrainConfig RunConfig::TrainFor(const std::string &stage) const {
  TrainConfig t = train;
  uint64_t h = 0;
  for (unsigned char ch : stage) h = h * 131 + ch;
  t.seed = DeriveSeed(seed, {0x747261696eULL, h});
  return t;
}

void RunConfig::Validate() const {
  task.Validate();
  model.Validate();
  train.Validate();
  decode.Validate();
  NCM_CHECK(model.num_content_tokens == task.vocab_size,
            "model.num_content_tokens (", model.num_content_tokens,
            ") must equal task.vocab_size (", task.vocab_size, ")");
  NCM_CHECK(model.feature_dim == task.feature_dim, "model.feature_dim (",
            model.feature_dim, ") must equal task.feature_dim (",
            task.feature_dim, ")");
  NCM_CHECK(model.max_target_len >= task.max_length, "model.max_target_len (",
            model.max_target_len, ") is below task.max_length (",
            task.max_length, ")");
  NCM_CHECK(model.max_source_frames >=
                task.max_length * task.max_frames_per_token,
            "model.max_source_frames (", model.max_source_frames,
            ") is below the longest utterance (",
            task.max_length * task.max_frames_per_token, " frames)");
  NCM_CHECK(!alphas.empty(), "decode.alphas must not be empty");
  for (double a : alphas)
    NCM_CHECK(a >= 0.0 && a <= 1.0, "decode.alphas: ", a, " outside [0, 1]");
  NCM_CHECK(!paths.run_dir.empty(), "paths.run_dir must not be empty");
}

nlohmann::json RunConfig::ToJson() const {
  nlohmann::json m = model.ToJson();
  m.erase("arch");
  nlohmann::json t = train.ToJson();
  t.erase("seed");
  nlohmann::json d = decode.ToJson();
  d["alphas"] = alphas;
  return {{"seed", seed},  {"task", task.ToJson()}, {"model", m},
          {"train", t},    {"decode", d},           {"paths", paths.ToJson()}};
}

RunConfig RunConfig::FromJson(const nlohmann::json &j) {
  CheckKeys(j, "config", {"seed", "task", "model", "train", "decode", "paths"});
  RunConfig c;
  ReadField(j, "config", "seed", c.seed);
  if (j.contains("task")) c.task = TaskSpec::FromJson(j["task"]);
  if (j.contains("model")) {
    NCM_CHECK(j["model"].is_object(), "model: expected a JSON object");
    NCM_CHECK(!j["model"].contains("arch"),
              "model.arch: the architecture is chosen by the subcommand");
    c.model = ModelConfig::FromJson(j["model"]);
  }
  if (j.contains("train")) {
    NCM_CHECK(j["train"].is_object(), "train: expected a JSON object");
    NCM_CHECK(!j["train"].contains("seed"),
              "train.seed: training seeds derive from the top-level seed");
    c.train = TrainConfig::FromJson(j["train"]);
  }
  if (j.contains("decode")) {
    nlohmann::json d = j["decode"];
    NCM_CHECK(d.is_object(), "decode: expected a JSON object");
    if (d.contains("alphas")) {
      NCM_CHECK(d["alphas"].is_array(), "decode.alphas: wrong type (expected an array)");
      c.alphas.clear();
      for (const auto &a : d["alphas"]) {
        NCM_CHECK(a.is_number(), "decode.alphas: wrong type (expected numbers)");
        c.alphas.push_back(a.get<double>());
      }
      d.erase("alphas");
    }
    c.decode = FusionConfig::FromJson(d);
  }
  if (j.contains("paths")) {
    const auto &p = j["paths"];
    CheckKeys(p, "paths",
              {"run_dir", "data_dir", "triples_dir", "asr_checkpoint",
               "cross_modal_checkpoint", "separate_checkpoint"});
    ReadField(p, "paths", "run_dir", c.paths.run_dir);
    ReadField(p, "paths", "data_dir", c.paths.data_dir);
    ReadField(p, "paths", "triples_dir", c.paths.triples_dir);
    ReadField(p, "paths", "asr_checkpoint", c.paths.asr_checkpoint);
    ReadField(p, "paths", "cross_modal_checkpoint",
              c.paths.cross_modal_checkpoint);
    ReadField(p, "paths", "separate_checkpoint", c.paths.separate_checkpoint);
  }
  c.Validate();
  return c;
}

RunConfig RunConfig::Load(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open config");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error &e) {
    throw ValidationError(path + ": not valid JSON (" + e.what() + ")");
  }
  try {
    return FromJson(j);
  } catch (const ValidationError &e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::vector<double> ParseAlphaList(const std::string &text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    NCM_CHECK(used > 0 && used == item.size(), "--alphas: '", item,
              "' is not a number");
    NCM_CHECK(v >= 0.0 && v <= 1.0, "--alphas: ", v, " outside [0, 1]");
    out.push_back(v);
  }
  NCM_CHECK(!out.empty(), "--alphas: empty list");
  return out;
}

}  // namespace ncm::cli
