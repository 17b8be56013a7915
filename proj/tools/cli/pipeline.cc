// tools/cli/pipeline.cc

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

#include "cli/pipeline.h"

#include <filesystem>
#include <fstream>

#include "ncm/common/error.h"
#include "ncm/synthdata/triples.h"
#include "ncm/training/checkpoint.h"

namespace ncm::cli {

namespace fs = std::filesystem;

namespace {

enum SeedLabel : uint64_t {
  kDataLabel = 0x64617461ULL,
  kInitLabel = 0x696e6974ULL,
  kNoiseLabel = 0x6e6f6973ULL,
};

std::string Join(const std::string &dir, const std::string &name) {
  return (fs::path(dir) / name).string();
}

void WriteJson(const std::string &path, const nlohmann::json &j) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << j.dump(2) << "\n";
  if (!out) throw RuntimeFailure("cannot write '" + path + "'");
}

void WriteText(const std::string &path, const std::string &text) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw RuntimeFailure("cannot write '" + path + "'");
}

std::vector<Utterance> ReadSplit(const std::string &dir, CorpusSplit split) {
  return ReadCorpus(Join(dir, SplitName(split) + ".jsonl"));
}

std::unique_ptr<Model> LoadChecked(const std::string &path, Architecture arch,
                                   const RunConfig &cfg) {
  LoadedCheckpoint c = LoadCheckpoint(path);
  NCM_CHECK(c.model->config().arch == arch, "checkpoint '", path, "' holds a ",
            ArchitectureName(c.model->config().arch), " model, expected ",
            ArchitectureName(arch));
  NCM_CHECK(c.model->config().vocab_size() == cfg.model.vocab_size(),
            "checkpoint '", path, "' vocabulary size ",
            c.model->config().vocab_size(), " does not match the config (",
            cfg.model.vocab_size(), ")");
  return std::move(c.model);
}

TrainResult Train(const RunConfig &cfg, Architecture arch,
                  std::span<const Utterance> train,
                  std::span<const Utterance> dev, int workers,
                  std::ostream &log) {
  const std::string name = ArchitectureName(arch);
  const std::string out = Join(cfg.paths.run_dir, name);
  Model model(cfg.ModelFor(arch), InitSeed(cfg, arch));
  log << "[" << name << "] training " << model.NumParameters()
      << " parameters on " << train.size() << " utterances\n";
  TrainResult r =
      TrainModel(model, train, dev, cfg.TrainFor(name), out, workers, &log);
  log << "[" << name << "] best dev loss " << r.best_dev_loss << " at step "
      << r.best_step << "\n";
  return r;
}

}  // namespace

uint64_t DataSeed(const RunConfig &cfg) {
  return DeriveSeed(cfg.seed, {kDataLabel});
}

uint64_t InitSeed(const RunConfig &cfg, Architecture arch) {
  return DeriveSeed(cfg.seed, {kInitLabel, static_cast<uint64_t>(arch)});
}

uint64_t TripleNoiseSeed(const RunConfig &cfg, CorpusSplit split) {
  return DeriveSeed(cfg.seed, {kNoiseLabel, static_cast<uint64_t>(split)});
}

void WriteEffectiveConfig(const RunConfig &cfg) {
  WriteJson(Join(cfg.paths.run_dir, "config.json"), cfg.ToJson());
}

void StageGenData(const RunConfig &cfg, int workers, std::ostream &log) {
  const std::string dir = cfg.paths.Data();
  fs::create_directories(dir);
  const uint64_t seed = DataSeed(cfg);
  Corpora c = GenerateCorpora(cfg.task, seed, workers);
  nlohmann::json manifest = nlohmann::json::object();
  for (auto [split, data] : {std::pair{CorpusSplit::kTrain, &c.train},
                             std::pair{CorpusSplit::kDev, &c.dev},
                             std::pair{CorpusSplit::kEval, &c.eval}}) {
    WriteCorpus(Join(dir, SplitName(split) + ".jsonl"), *data);
    manifest[SplitName(split)] =
        CorpusManifest(cfg.task, seed, SplitName(split), data->size());
  }
  WriteJson(Join(dir, "manifest.json"), manifest);
  log << "[data] " << c.train.size() << "/" << c.dev.size() << "/"
      << c.eval.size() << " utterances in " << dir << "\n";
}

TrainResult StageTrainAsr(const RunConfig &cfg, int workers, std::ostream &log) {
  const std::string dir = cfg.paths.Data();
  return Train(cfg, Architecture::kAsr, ReadSplit(dir, CorpusSplit::kTrain),
               ReadSplit(dir, CorpusSplit::kDev), workers, log);
}

void StageMakeTriples(const RunConfig &cfg, int workers, std::ostream &log) {
  std::unique_ptr<Model> asr =
      LoadChecked(cfg.paths.Asr(), Architecture::kAsr, cfg);
  const std::string in = cfg.paths.Data(), out = cfg.paths.Triples();
  fs::create_directories(out);
  nlohmann::json summary = nlohmann::json::object();
  for (CorpusSplit split : {CorpusSplit::kTrain, CorpusSplit::kDev}) {
    TripleSummary s;
    std::vector<Utterance> t =
        MakeTriples(*asr, ReadSplit(in, split), cfg.task,
                    TripleNoiseSeed(cfg, split), workers, &s);
    WriteCorpus(Join(out, SplitName(split) + ".jsonl"), t);
    summary[SplitName(split)] = {{"count", s.count},
                                 {"hypothesis_cer", s.hypothesis_cer},
                                 {"feature_noise_sigma", cfg.task.triple_noise_sigma},
                                 {"beam_size", cfg.task.triple_beam_size}};
    log << "[triples] " << SplitName(split) << ": " << s.count
        << " triples, hypothesis CER " << s.hypothesis_cer << "\n";
  }
  // Eval triples carry the plain first pass the fused decoder would see.
  std::vector<Utterance> eval = ReadSplit(in, CorpusSplit::kEval);
  std::vector<Hypothesis> first = DecodeFirstPass(*asr, eval, cfg.decode, workers);
  CerReport report("first_pass");
  for (size_t i = 0; i < eval.size(); ++i) {
    eval[i].hyp = first[i].Content();
    report.Add(eval[i].id, eval[i].tokens, *eval[i].hyp);
  }
  WriteCorpus(Join(out, "eval.jsonl"), eval);
  summary["eval"] = {{"count", eval.size()},
                     {"hypothesis_cer", report.cer()},
                     {"feature_noise_sigma", 0.0},
                     {"beam_size", cfg.decode.beam_size}};
  WriteJson(Join(out, "summary.json"), summary);
  log << "[triples] eval: first-pass CER " << report.cer() << "\n";
}

TrainResult StageTrainCorrector(const RunConfig &cfg, Architecture arch,
                                int workers, std::ostream &log) {
  NCM_CHECK(arch != Architecture::kAsr,
            "train-corrector: --arch must be cross-modal or separate");
  const std::string dir = cfg.paths.Triples();
  return Train(cfg, arch, ReadSplit(dir, CorpusSplit::kTrain),
               ReadSplit(dir, CorpusSplit::kDev), workers, log);
}

nlohmann::json ExperimentSummary::ToJson() const {
  nlohmann::json j = {{"selected_alpha", selected_alpha}, {"cer", cer}};
  auto sweeps = [](const std::map<std::string, std::vector<SweepRow>> &m) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto &[name, rows] : m) {
      nlohmann::json arr = nlohmann::json::array();
      for (const SweepRow &r : rows) arr.push_back({r.alpha, r.cer});
      out[name] = arr;
    }
    return out;
  };
  j["dev_sweeps"] = sweeps(dev_sweeps);
  j["eval_sweeps"] = sweeps(eval_sweeps);
  return j;
}

ExperimentSummary StageEvaluate(const RunConfig &cfg, int workers,
                                std::ostream &log) {
  std::unique_ptr<Model> asr =
      LoadChecked(cfg.paths.Asr(), Architecture::kAsr, cfg);
  const std::vector<Utterance> dev = ReadSplit(cfg.paths.Data(), CorpusSplit::kDev);
  const std::vector<Utterance> eval =
      ReadSplit(cfg.paths.Data(), CorpusSplit::kEval);
  const std::string out = Join(cfg.paths.run_dir, "eval");
  fs::create_directories(out);
  const Vocabulary &vocab = asr->vocabulary();

  ExperimentSummary summary;
  const std::vector<Hypothesis> eval_first =
      DecodeFirstPass(*asr, eval, cfg.decode, workers);
  SystemResult base = EvaluateSystem(SystemKind::kBaseline, *asr, nullptr, eval,
                                     cfg.decode, workers, &eval_first);
  auto record = [&](const SystemResult &r) {
    const std::string name = r.report.label();
    nlohmann::json j = r.report.ToJson();
    j["alpha"] = r.alpha;
    WriteJson(Join(out, name + ".json"), j);
    WriteTranscripts(Join(out, name + ".transcripts.jsonl"), r, vocab);
    summary.cer[name] = r.report.cer();
    log << "[eval] " << name << " (alpha " << r.alpha << "): CER "
        << r.report.cer() << "\n";
  };
  record(base);

  for (Architecture arch : {Architecture::kSeparate, Architecture::kCrossModal}) {
    const std::string name = ArchitectureName(arch);
    std::unique_ptr<Model> corr =
        LoadChecked(cfg.paths.Corrector(arch), arch, cfg);
    std::vector<SweepRow> dev_rows =
        SweepAlpha(*asr, *corr, dev, cfg.decode, cfg.alphas, workers);
    WriteText(Join(out, "sweep_dev_" + name + ".csv"), SweepCsv(dev_rows));
    FusionConfig fused = cfg.decode;
    fused.alpha = BestRow(dev_rows).alpha;
    summary.selected_alpha[name] = fused.alpha;
    summary.dev_sweeps[name] = dev_rows;
    log << "[eval] " << name << ": dev-selected alpha " << fused.alpha << "\n";

    const SystemKind only = arch == Architecture::kSeparate
                                ? SystemKind::kSeparate
                                : SystemKind::kCrossModal;
    const SystemKind sf = arch == Architecture::kSeparate
                              ? SystemKind::kSeparateFused
                              : SystemKind::kCrossModalFused;
    std::vector<SystemResult> results;
    std::vector<SweepRow> eval_rows = SweepAlpha(
        *asr, *corr, eval, fused, cfg.alphas, workers, &results);
    WriteText(Join(out, "sweep_eval_" + name + ".csv"), SweepCsv(eval_rows));
    summary.eval_sweeps[name] = eval_rows;
    // Corrector alone and the fused system at the selected alpha, reusing
    // sweep points where the grid has them.
    for (auto [kind, alpha] : {std::pair{only, 1.0}, std::pair{sf, fused.alpha}}) {
      SystemResult r;
      bool found = false;
      for (size_t i = 0; i < eval_rows.size() && !found; ++i)
        if (eval_rows[i].alpha == alpha) {
          r = results[i];
          found = true;
        }
      if (!found) {
        FusionConfig c = fused;
        c.alpha = alpha;
        r = EvaluateSystem(kind, *asr, corr.get(), eval, c, workers, &eval_first);
      }
      r.report = [&] {
        CerReport relabeled(SystemName(kind));
        for (size_t i = 0; i < r.ids.size(); ++i)
          relabeled.Add(r.ids[i], r.references[i], r.outputs[i]);
        return relabeled;
      }();
      record(r);
    }
  }
  WriteJson(Join(out, "summary.json"), summary.ToJson());
  return summary;
}

AttentionDump StageDumpAttention(const RunConfig &cfg,
                                 const std::string &utterance_id,
                                 std::ostream &log) {
  std::unique_ptr<Model> cm = LoadChecked(
      cfg.paths.Corrector(Architecture::kCrossModal), Architecture::kCrossModal,
      cfg);
  const std::vector<Utterance> triples =
      ReadSplit(cfg.paths.Triples(), CorpusSplit::kEval);
  NCM_CHECK(!triples.empty(), "dump-attention: no eval triples");
  const Utterance *u = &triples[0];
  if (!utterance_id.empty()) {
    u = nullptr;
    for (const Utterance &t : triples)
      if (t.id == utterance_id) u = &t;
    NCM_CHECK(u != nullptr, "dump-attention: --utterance '", utterance_id,
              "' not found in the eval triples");
  }
  AttentionDump dump = ComputeAttentionDump(*cm, *u);
  const std::string dir = Join(cfg.paths.run_dir, "attention");
  WriteAttentionDump(dump, dir);
  double best = 0.0;
  for (const HeadModalityStats &s : dump.stats) best = std::max(best, s.cross_segment);
  log << "[attention] " << dump.stats.size() << " heads for " << u->id
      << ", max cross-segment mass " << best << "\n";
  return dump;
}

PipelineResult RunPipeline(const RunConfig &cfg, int workers,
                           std::ostream &log) {
  cfg.Validate();
  fs::create_directories(cfg.paths.run_dir);
  WriteEffectiveConfig(cfg);
  PipelineResult r;
  StageGenData(cfg, workers, log);
  r.asr = StageTrainAsr(cfg, workers, log);
  StageMakeTriples(cfg, workers, log);
  r.cross_modal = StageTrainCorrector(cfg, Architecture::kCrossModal, workers, log);
  r.separate = StageTrainCorrector(cfg, Architecture::kSeparate, workers, log);
  r.summary = StageEvaluate(cfg, workers, log);
  r.attention = StageDumpAttention(cfg, "", log);
  return r;
}

}  // namespace ncm::cli
