// training/checkpoint.cc

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

#include "ncm/training/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ncm/common/error.h"

namespace ncm {

namespace {

constexpr char kMagic[5] = {'N', 'C', 'M', 'K', '1'};

uint64_t ToLittle(uint64_t x) {
  if constexpr (std::endian::native == std::endian::big) {
    uint64_t y = 0;
    for (int i = 0; i < 8; ++i) y = (y << 8) | ((x >> (8 * i)) & 0xff);
    return y;
  }
  return x;
}

void AppendU64(std::string &out, uint64_t x) {
  x = ToLittle(x);
  char buf[8];
  std::memcpy(buf, &x, 8);
  out.append(buf, 8);
}

uint64_t ReadU64(const char *p) {
  uint64_t x;
  std::memcpy(&x, p, 8);
  return ToLittle(x);
}

nlohmann::json Header(const Model &model, int64_t step,
                      const nlohmann::json &metrics) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto &[name, t] : model.parameters().entries())
    params.push_back({{"name", name}, {"shape", t.shape()}});
  return {{"format_version", kCheckpointFormatVersion},
          {"model_config", model.config().ToJson()},
          {"parameters", params},
          {"step", step},
          {"metrics", metrics}};
}

struct RawCheckpoint {
  nlohmann::json header;
  std::string payload;
};

RawCheckpoint ReadRaw(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("checkpoint '" + path + "': cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  const std::string where = "checkpoint '" + path + "': ";
  NCM_CHECK(bytes.size() >= 13 && std::memcmp(bytes.data(), kMagic, 5) == 0,
            where, "bad magic (expected NCMK1)");
  const uint64_t header_len = ReadU64(bytes.data() + 5);
  NCM_CHECK(header_len <= bytes.size() - 13, where, "header length ",
            header_len, " exceeds file size ", bytes.size());
  RawCheckpoint raw;
  try {
    raw.header = nlohmann::json::parse(bytes.substr(13, header_len));
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(where + "header is not valid JSON (" + e.what() +
                          ")");
  }
  raw.payload = bytes.substr(13 + header_len);
  const nlohmann::json &h = raw.header;
  NCM_CHECK(h.is_object() && h.contains("format_version") &&
                h["format_version"].is_number_integer(),
            where, "header.format_version missing");
  NCM_CHECK(h["format_version"].get<int>() == kCheckpointFormatVersion, where,
            "header.format_version ", h["format_version"].dump(),
            " unsupported (expected ", kCheckpointFormatVersion, ")");
  for (const char *key : {"model_config", "parameters", "step", "metrics"})
    NCM_CHECK(h.contains(key), where, "header.", key, " missing");
  NCM_CHECK(h["parameters"].is_array(), where,
            "header.parameters must be an array");
  NCM_CHECK(h["step"].is_number_integer(), where,
            "header.step must be an integer");
  return raw;
}

void Fill(const RawCheckpoint &raw, Model &model, const std::string &path) {
  const std::string where = "checkpoint '" + path + "': ";
  const auto &entries = model.parameters().entries();
  const nlohmann::json &params = raw.header["parameters"];
  NCM_CHECK(params.size() == entries.size(), where, "header.parameters lists ",
            params.size(), " tensors, model has ", entries.size());
  uint64_t expected_bytes = 0;
  for (size_t i = 0; i < entries.size(); ++i) {
    const nlohmann::json &p = params[i];
    NCM_CHECK(p.is_object() && p.contains("name") && p.contains("shape"),
              where, "header.parameters[", i, "] malformed");
    NCM_CHECK(p["name"] == entries[i].first, where, "header.parameters[", i,
              "].name is ", p["name"].dump(), ", model expects '",
              entries[i].first, "'");
    Shape shape;
    try {
      shape = p["shape"].get<Shape>();
    } catch (const nlohmann::json::exception &) {
      throw ValidationError(where + "header.parameters[" + std::to_string(i) +
                            "].shape malformed");
    }
    NCM_CHECK(shape == entries[i].second.shape(), where, "parameter '",
              entries[i].first, "' has shape ", ShapeToString(shape),
              ", model expects ", ShapeToString(entries[i].second.shape()));
    expected_bytes += 8 * static_cast<uint64_t>(NumElements(shape));
  }
  NCM_CHECK(raw.payload.size() == expected_bytes, where, "payload is ",
            raw.payload.size(), " bytes, expected ", expected_bytes);
  const char *p = raw.payload.data();
  for (const auto &[name, t] : entries) {
    Tensor target = t;
    for (double &v : target.mutable_data()) {
      const uint64_t bits = ReadU64(p);
      std::memcpy(&v, &bits, 8);
      p += 8;
    }
  }
}

}  // namespace

void SaveCheckpoint(const std::string &path, const Model &model, int64_t step,
                    const nlohmann::json &metrics) {
  const std::string header = Header(model, step, metrics).dump();
  std::string bytes(kMagic, 5);
  AppendU64(bytes, header.size());
  bytes += header;
  for (const auto &[name, t] : model.parameters().entries())
    for (double v : t.data()) {
      uint64_t bits;
      std::memcpy(&bits, &v, 8);
      AppendU64(bytes, bits);
    }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("checkpoint '" + path + "': cannot write");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw RuntimeFailure("checkpoint '" + path + "': write failed");
}

LoadedCheckpoint LoadCheckpoint(const std::string &path) {
  RawCheckpoint raw = ReadRaw(path);
  ModelConfig config;
  try {
    config = ModelConfig::FromJson(raw.header["model_config"]);
  } catch (const ValidationError &e) {
    throw ValidationError("checkpoint '" + path + "': header." + e.what());
  }
  LoadedCheckpoint out;
  out.model = std::make_unique<Model>(config, 0);
  Fill(raw, *out.model, path);
  out.step = raw.header["step"].get<int64_t>();
  out.metrics = raw.header["metrics"];
  return out;
}

void LoadCheckpointInto(const std::string &path, Model &model) {
  RawCheckpoint raw = ReadRaw(path);
  NCM_CHECK(raw.header["model_config"] == model.config().ToJson(),
            "checkpoint '", path, "': header.model_config ",
            raw.header["model_config"].dump(), " differs from the model's ",
            model.config().ToJson().dump());
  Fill(raw, model, path);
}

}  // namespace ncm
