// evaluation/experiments.cc

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

#include "ncm/evaluation/experiments.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>

#include "ncm/common/error.h"
#include "ncm/numerics/autograd.h"

namespace ncm {

namespace {

// Runs fn(i) for i in [0, n) on `workers` threads; rethrows the first
// failure by index.
template <typename Fn>
void ParallelFor(int n, int workers, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers) if (workers > 1)
  for (int i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto &e : errors)
    if (e) std::rethrow_exception(e);
}

std::string Number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

std::string SystemName(SystemKind kind) {
  switch (kind) {
    case SystemKind::kBaseline: return "baseline";
    case SystemKind::kSeparate: return "separate";
    case SystemKind::kSeparateFused: return "separate+SF";
    case SystemKind::kCrossModal: return "cross_modal";
    case SystemKind::kCrossModalFused: return "cross_modal+SF";
  }
  return "?";
}

SystemKind ParseSystem(const std::string &name) {
  for (SystemKind k : {SystemKind::kBaseline, SystemKind::kSeparate,
                       SystemKind::kSeparateFused, SystemKind::kCrossModal,
                       SystemKind::kCrossModalFused})
    if (SystemName(k) == name) return k;
  if (name == "cross-modal") return SystemKind::kCrossModal;
  if (name == "cross-modal+SF") return SystemKind::kCrossModalFused;
  throw ValidationError("unknown system '" + name +
                        "' (expected baseline, separate, separate+SF, "
                        "cross_modal or cross_modal+SF)");
}

Architecture SystemArchitecture(SystemKind kind) {
  switch (kind) {
    case SystemKind::kBaseline: return Architecture::kAsr;
    case SystemKind::kSeparate:
    case SystemKind::kSeparateFused: return Architecture::kSeparate;
    default: return Architecture::kCrossModal;
  }
}

double SystemAlpha(SystemKind kind, double fused_alpha) {
  switch (kind) {
    case SystemKind::kBaseline: return 0.0;
    case SystemKind::kSeparate:
    case SystemKind::kCrossModal: return 1.0;
    default: return fused_alpha;
  }
}

std::vector<Hypothesis> DecodeFirstPass(const Model &asr,
                                        std::span<const Utterance> data,
                                        const FusionConfig &config,
                                        int workers) {
  std::vector<Hypothesis> out(data.size());
  ParallelFor(static_cast<int>(data.size()), workers, [&](int i) {
    out[i] = FirstPassDecode(asr, data[i].frames, config);
  });
  return out;
}

SystemResult EvaluateSystem(SystemKind kind, const Model &asr,
                            const Model *corrector,
                            std::span<const Utterance> data,
                            const FusionConfig &config, int workers,
                            const std::vector<Hypothesis> *first_pass) {
  FusionConfig cfg = config;
  cfg.alpha = SystemAlpha(kind, config.alpha);
  cfg.Validate();
  if (kind == SystemKind::kBaseline) {
    corrector = nullptr;
  } else {
    NCM_CHECK(corrector != nullptr, "evaluate: system ", SystemName(kind),
              " needs a corrector checkpoint");
    NCM_CHECK(corrector->config().arch == SystemArchitecture(kind),
              "evaluate: system ", SystemName(kind), " needs a ",
              ArchitectureName(SystemArchitecture(kind)), " corrector, got ",
              ArchitectureName(corrector->config().arch));
  }
  std::vector<Hypothesis> computed;
  if (first_pass == nullptr) {
    computed = DecodeFirstPass(asr, data, cfg, workers);
    first_pass = &computed;
  }
  NCM_CHECK(first_pass->size() == data.size(), "evaluate: ",
            first_pass->size(), " first-pass results for ", data.size(),
            " utterances");
  std::vector<Hypothesis> finals(data.size());
  ParallelFor(static_cast<int>(data.size()), workers, [&](int i) {
    finals[i] =
        SecondPassDecode(asr, corrector, data[i].frames, (*first_pass)[i], cfg);
  });
  SystemResult result;
  result.report = CerReport(SystemName(kind));
  result.alpha = cfg.alpha;
  for (size_t i = 0; i < data.size(); ++i) {
    result.report.Add(data[i].id, data[i].tokens, finals[i].Content());
    result.ids.push_back(data[i].id);
    result.references.push_back(data[i].tokens);
    result.first_pass.push_back((*first_pass)[i].Content());
    result.outputs.push_back(finals[i].Content());
  }
  return result;
}

void WriteTranscripts(const std::string &path, const SystemResult &result,
                      const Vocabulary &vocab) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write transcripts '" + path + "'");
  for (size_t i = 0; i < result.ids.size(); ++i) {
    const EditCounts c = Align(result.references[i], result.outputs[i]);
    nlohmann::json line = {{"id", result.ids[i]},
                           {"reference", vocab.Render(result.references[i])},
                           {"first_pass", vocab.Render(result.first_pass[i])},
                           {"output", vocab.Render(result.outputs[i])},
                           {"sub", c.substitutions},
                           {"ins", c.insertions},
                           {"del", c.deletions}};
    out << line.dump() << "\n";
  }
  if (!out) throw RuntimeFailure("write failed for '" + path + "'");
}

std::vector<SweepRow> SweepAlpha(const Model &asr, const Model &corrector,
                                 std::span<const Utterance> data,
                                 const FusionConfig &config,
                                 std::span<const double> alphas, int workers,
                                 std::vector<SystemResult> *results) {
  NCM_CHECK(!alphas.empty(), "sweep: empty alpha list");
  for (double a : alphas)
    NCM_CHECK(a >= 0.0 && a <= 1.0, "sweep: alpha ", a, " outside [0, 1]");
  NCM_CHECK(corrector.config().uses_hypothesis(),
            "sweep: needs a corrector, got ",
            ArchitectureName(corrector.config().arch));
  const SystemKind kind = corrector.config().arch == Architecture::kSeparate
                              ? SystemKind::kSeparateFused
                              : SystemKind::kCrossModalFused;
  const std::vector<Hypothesis> first = DecodeFirstPass(asr, data, config, workers);
  std::vector<SweepRow> rows;
  for (double a : alphas) {
    FusionConfig cfg = config;
    cfg.alpha = a;
    SystemResult r =
        EvaluateSystem(kind, asr, &corrector, data, cfg, workers, &first);
    rows.push_back({a, r.report.cer(), r.report.totals()});
    if (results) results->push_back(std::move(r));
  }
  return rows;
}

const SweepRow &BestRow(std::span<const SweepRow> rows) {
  NCM_CHECK(!rows.empty(), "sweep: no rows");
  size_t best = 0;
  for (size_t i = 1; i < rows.size(); ++i)
    if (rows[i].cer < rows[best].cer) best = i;
  return rows[best];
}

std::string SweepCsv(std::span<const SweepRow> rows) {
  std::string out = "alpha,cer,sub,ins,del\n";
  for (const SweepRow &r : rows)
    out += Number(r.alpha) + "," + Number(r.cer) + "," +
           std::to_string(r.totals.substitutions) + "," +
           std::to_string(r.totals.insertions) + "," +
           std::to_string(r.totals.deletions) + "\n";
  return out;
}

std::vector<double> DefaultAlphaGrid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
  return grid;
}

nlohmann::json HeadModalityStats::ToJson() const {
  return {{"block", block},
          {"head", head},
          {"text_to_speech", text_to_speech},
          {"speech_to_text", speech_to_text},
          {"within_speech", within_speech},
          {"within_text", within_text},
          {"cross_segment", cross_segment}};
}

nlohmann::json AttentionDump::BoundariesJson() const {
  nlohmann::json stats_json = nlohmann::json::array();
  for (const HeadModalityStats &s : stats) stats_json.push_back(s.ToJson());
  return {{"utterance", utterance_id},
          {"length", length()},
          {"speech", {0, speech_len}},
          {"separator", separator},
          {"text", {separator + 1, separator + 1 + text_len}},
          {"heads", stats_json}};
}

HeadModalityStats ComputeModalityStats(std::span<const double> weights,
                                       int64_t speech_len, int64_t text_len) {
  const int64_t len = speech_len + 1 + text_len;
  NCM_CHECK(speech_len >= 0 && text_len >= 0 &&
                static_cast<int64_t>(weights.size()) == len * len,
            "attention statistics: ", weights.size(), " weights for length ",
            len);
  double ss = 0, st = 0, ts = 0, tt = 0;
  for (int64_t r = 0; r < len; ++r) {
    if (r == speech_len) continue;
    const double *row = weights.data() + r * len;
    double to_speech = 0, to_text = 0;
    for (int64_t c = 0; c < speech_len; ++c) to_speech += row[c];
    for (int64_t c = speech_len + 1; c < len; ++c) to_text += row[c];
    if (r < speech_len) {
      ss += to_speech;
      st += to_text;
    } else {
      ts += to_speech;
      tt += to_text;
    }
  }
  HeadModalityStats out;
  const double ns = static_cast<double>(speech_len);
  const double nt = static_cast<double>(text_len);
  if (ns > 0) {
    out.within_speech = ss / ns;
    out.speech_to_text = st / ns;
  }
  if (nt > 0) {
    out.text_to_speech = ts / nt;
    out.within_text = tt / nt;
  }
  if (ns + nt > 0) out.cross_segment = (st + ts) / (ns + nt);
  return out;
}

AttentionDump ComputeAttentionDump(const Model &cross_modal,
                                   const Utterance &utterance) {
  NCM_CHECK(cross_modal.config().arch == Architecture::kCrossModal,
            "dump-attention: needs a cross_modal checkpoint, got ",
            ArchitectureName(cross_modal.config().arch));
  NCM_CHECK(utterance.hyp.has_value(), "dump-attention: utterance '",
            utterance.id, "' has no hypothesis");
  NoGradGuard no_grad;
  AttentionDump dump;
  dump.utterance_id = utterance.id;
  EncodedMemory mem =
      cross_modal.Encode(utterance.frames, *utterance.hyp, {}, &dump.weights);
  dump.speech_len = mem.speech_len;
  dump.separator = mem.separator_index();
  dump.text_len = mem.text_len;
  const int64_t len = dump.length();
  for (size_t b = 0; b < dump.weights.size(); ++b) {
    const Tensor &w = dump.weights[b];
    NCM_CHECK(w.rank() == 3 && w.dim(1) == len && w.dim(2) == len,
              "dump-attention: block ", b, " weights have shape ",
              ShapeToString(w.shape()));
    auto data = w.data();
    for (int64_t h = 0; h < w.dim(0); ++h) {
      HeadModalityStats st_h = ComputeModalityStats(
          data.subspan(h * len * len, len * len), dump.speech_len,
          dump.text_len);
      st_h.block = static_cast<int>(b);
      st_h.head = static_cast<int>(h);
      dump.stats.push_back(st_h);
    }
  }
  return dump;
}

std::vector<std::string> WriteAttentionDump(const AttentionDump &dump,
                                            const std::string &dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> written;
  const int64_t len = dump.length();
  for (size_t b = 0; b < dump.weights.size(); ++b) {
    auto data = dump.weights[b].data();
    for (int64_t h = 0; h < dump.weights[b].dim(0); ++h) {
      const std::string stem = (fs::path(dir) / ("block" + std::to_string(b) +
                                                 "_head" + std::to_string(h)))
                                   .string();
      std::string csv;
      std::string pgm = "P5\n" + std::to_string(len) + " " +
                        std::to_string(len) + "\n255\n";
      for (int64_t r = 0; r < len; ++r) {
        for (int64_t c = 0; c < len; ++c) {
          const double v = data[(h * len + r) * len + c];
          if (c) csv += ",";
          csv += Number(v);
          pgm += static_cast<char>(static_cast<unsigned char>(
              std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
        }
        csv += "\n";
      }
      for (const auto &[ext, body] : {std::pair<const char *, const std::string *>{
                                          ".csv", &csv},
                                      {".pgm", &pgm}}) {
        std::ofstream out(stem + ext, std::ios::binary | std::ios::trunc);
        out << *body;
        if (!out) throw RuntimeFailure("cannot write '" + stem + ext + "'");
        written.push_back(stem + ext);
      }
    }
  }
  const std::string meta = (fs::path(dir) / "boundaries.json").string();
  std::ofstream out(meta, std::ios::binary | std::ios::trunc);
  out << dump.BoundariesJson().dump(2) << "\n";
  if (!out) throw RuntimeFailure("cannot write '" + meta + "'");
  written.push_back(meta);
  return written;
}

}  // namespace ncm
