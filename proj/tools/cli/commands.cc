// tools/cli/commands.cc

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

#include "cli/commands.h"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "cli/pipeline.h"
#include "ncm/common/error.h"
#include "ncm/training/checkpoint.h"
#include "ncm/training/grad_suite.h"

#ifndef NCM_VERSION
#define NCM_VERSION "unknown"
#endif

namespace ncm::cli {

namespace fs = std::filesystem;

namespace {

std::string Now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

// Flags shared by every subcommand; each overrides one RunConfig field.
struct Overrides {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<std::string> run_dir, data_dir, triples_dir, asr, cross_modal,
      separate;
  std::optional<double> alpha;
  std::optional<int> beam_size, total_steps, eval_every, batch_size, dev_limit;
  std::optional<std::string> alphas;
  int workers = 1;

  void Attach(CLI::App *app) {
    app->add_option("--config", config_path,
                    "RunConfig JSON (sections task, model, train, decode, "
                    "paths); defaults when omitted")
        ->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "Master seed (seed)");
    app->add_option("--run-dir", run_dir, "Output directory (paths.run_dir)");
    app->add_option("--data-dir", data_dir,
                    "Corpus directory (paths.data_dir; default run_dir/data)");
    app->add_option("--triples-dir", triples_dir,
                    "Triples directory (paths.triples_dir; default "
                    "run_dir/triples)");
    app->add_option("--asr", asr,
                    "Recognizer checkpoint (paths.asr_checkpoint; default "
                    "run_dir/asr/best.ckpt)");
    app->add_option("--cross-modal", cross_modal,
                    "Cross-modal corrector checkpoint "
                    "(paths.cross_modal_checkpoint)");
    app->add_option("--separate", separate,
                    "Separate-attention corrector checkpoint "
                    "(paths.separate_checkpoint)");
    app->add_option("--beam", beam_size, "Beam size (decode.beam_size)");
    app->add_option("--steps", total_steps, "Training steps (train.total_steps)");
    app->add_option("--eval-every", eval_every, "Steps between evaluations (train.eval_every)");
    app->add_option("--batch-size", batch_size, "Utterances per batch (train.batch_size)");
    app->add_option("--dev-limit", dev_limit,
                    "Dev utterances used during training, 0 for all "
                    "(train.dev_limit)");
    app->add_option("--workers", workers,
                    "Utterance-parallel threads; results do not depend on it")
        ->check(CLI::PositiveNumber);
  }

  RunConfig Resolve() const {
    nlohmann::json j = nlohmann::json::object();
    RunConfig c = config_path.empty() ? RunConfig() : RunConfig::Load(config_path);
    if (seed) c.seed = *seed;
    if (run_dir) c.paths.run_dir = *run_dir;
    if (data_dir) c.paths.data_dir = *data_dir;
    if (triples_dir) c.paths.triples_dir = *triples_dir;
    if (asr) c.paths.asr_checkpoint = *asr;
    if (cross_modal) c.paths.cross_modal_checkpoint = *cross_modal;
    if (separate) c.paths.separate_checkpoint = *separate;
    if (alpha) c.decode.alpha = *alpha;
    if (beam_size) c.decode.beam_size = *beam_size;
    if (total_steps) c.train.total_steps = *total_steps;
    if (eval_every) c.train.eval_every = *eval_every;
    if (batch_size) c.train.batch_size = *batch_size;
    if (dev_limit) c.train.dev_limit = *dev_limit;
    if (alphas) c.alphas = ParseAlphaList(*alphas);
    // Re-validate the combined result; flag values name their field.
    return RunConfig::FromJson(c.ToJson());
  }
};

// Records the invocation in run_dir/metadata.json, the only file that holds
// timestamps.
void RecordMetadata(const RunConfig &cfg, const std::string &command,
                    const std::vector<std::string> &argv,
                    const std::string &started) {
  const fs::path path = fs::path(cfg.paths.run_dir) / "metadata.json";
  nlohmann::json meta = nlohmann::json::object();
  if (fs::exists(path)) {
    std::ifstream in(path);
    meta = nlohmann::json::parse(in, nullptr, false);
    if (!meta.is_object()) meta = nlohmann::json::object();
  }
  meta["version"] = NCM_VERSION;
  meta["generator_version"] = kGeneratorVersion;
  meta["checkpoint_format_version"] = kCheckpointFormatVersion;
  meta["commands"][command] = {{"argv", argv},
                               {"started", started},
                               {"finished", Now()}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << meta.dump(2) << "\n";
}

Architecture ParseCorrectorArch(const std::string &name) {
  Architecture a = ParseArchitecture(name);
  NCM_CHECK(a != Architecture::kAsr, "--arch: expected cross-modal or separate, got '",
            name, "'");
  return a;
}

}  // namespace

int Run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Neural correction of speech recognition output with shallow "
               "fusion on a synthetic transduction task"};
  app.require_subcommand(1);
  app.set_version_flag("--version", NCM_VERSION);

  Overrides o;
  std::string arch_name = "cross-modal", split_name = "eval", system_name = "all",
              utterance;
  std::function<void(const RunConfig &)> action;
  std::string command;

  auto add = [&](const std::string &name, const std::string &help,
                 std::function<void(const RunConfig &)> fn) {
    CLI::App *sub = app.add_subcommand(name, help);
    o.Attach(sub);
    sub->callback([&, name, fn] {
      command = name;
      action = fn;
    });
    return sub;
  };

  add("gen-data", "Generate train/dev/eval corpora into paths.data_dir",
      [&](const RunConfig &c) { StageGenData(c, o.workers, err); });
  add("train-asr", "Train the recognizer into run_dir/asr",
      [&](const RunConfig &c) { StageTrainAsr(c, o.workers, err); });
  add("decode", "First-pass beam search over one split into run_dir/decode",
      [&](const RunConfig &c) {
        const CorpusSplit split = ParseSplit(split_name);
        LoadedCheckpoint asr = LoadCheckpoint(c.paths.Asr());
        NCM_CHECK(asr.model->config().arch == Architecture::kAsr,
                  "--asr: checkpoint holds a ",
                  ArchitectureName(asr.model->config().arch), " model");
        auto data = ReadCorpus((fs::path(c.paths.Data()) /
                                (SplitName(split) + ".jsonl")).string());
        SystemResult r = EvaluateSystem(SystemKind::kBaseline, *asr.model,
                                        nullptr, data, c.decode, o.workers);
        const fs::path dir = fs::path(c.paths.run_dir) / "decode";
        fs::create_directories(dir);
        WriteTranscripts((dir / (SplitName(split) + ".transcripts.jsonl")).string(),
                         r, asr.model->vocabulary());
        std::ofstream((dir / (SplitName(split) + ".json")).string())
            << r.report.ToJson().dump(2) << "\n";
        out << "cer " << r.report.cer() << "\n";
      })
      ->add_option("--split", split_name, "Corpus split: train, dev or eval");
  add("make-triples", "Decode train/dev/eval into correction triples",
      [&](const RunConfig &c) { StageMakeTriples(c, o.workers, err); });
  add("train-corrector", "Train a corrector on paths.triples_dir",
      [&](const RunConfig &c) {
        StageTrainCorrector(c, ParseCorrectorArch(arch_name), o.workers, err);
      })
      ->add_option("--arch", arch_name, "cross-modal or separate");
  {
    CLI::App *sub = add(
        "fused-decode", "Two-pass decoding with shallow fusion into run_dir/fused",
        [&](const RunConfig &c) {
          const Architecture arch = ParseCorrectorArch(arch_name);
          const CorpusSplit split = ParseSplit(split_name);
          LoadedCheckpoint asr = LoadCheckpoint(c.paths.Asr());
          LoadedCheckpoint corr = LoadCheckpoint(c.paths.Corrector(arch));
          auto data = ReadCorpus((fs::path(c.paths.Data()) /
                                  (SplitName(split) + ".jsonl")).string());
          const SystemKind kind = arch == Architecture::kSeparate
                                      ? SystemKind::kSeparateFused
                                      : SystemKind::kCrossModalFused;
          SystemResult r = EvaluateSystem(kind, *asr.model, corr.model.get(),
                                          data, c.decode, o.workers);
          const fs::path dir = fs::path(c.paths.run_dir) / "fused";
          fs::create_directories(dir);
          const std::string stem = ArchitectureName(arch) + "_" + SplitName(split);
          WriteTranscripts((dir / (stem + ".transcripts.jsonl")).string(), r,
                           asr.model->vocabulary());
          nlohmann::json j = r.report.ToJson();
          j["alpha"] = r.alpha;
          std::ofstream((dir / (stem + ".json")).string()) << j.dump(2) << "\n";
          out << "cer " << r.report.cer() << "\n";
        });
    sub->add_option("--alpha", o.alpha, "Corrector weight (decode.alpha)");
    sub->add_option("--arch", arch_name, "cross-modal or separate");
    sub->add_option("--split", split_name, "Corpus split: train, dev or eval");
  }
  add("eval", "Score systems on the eval split into run_dir/eval",
      [&](const RunConfig &c) {
        if (system_name == "all") {
          ExperimentSummary s = StageEvaluate(c, o.workers, err);
          out << s.ToJson()["cer"].dump(2) << "\n";
          return;
        }
        const SystemKind kind = ParseSystem(system_name);
        LoadedCheckpoint asr = LoadCheckpoint(c.paths.Asr());
        std::optional<LoadedCheckpoint> corr;
        if (kind != SystemKind::kBaseline)
          corr = LoadCheckpoint(c.paths.Corrector(SystemArchitecture(kind)));
        auto data = ReadCorpus((fs::path(c.paths.Data()) / "eval.jsonl").string());
        SystemResult r = EvaluateSystem(kind, *asr.model,
                                        corr ? corr->model.get() : nullptr, data,
                                        c.decode, o.workers);
        const fs::path dir = fs::path(c.paths.run_dir) / "eval";
        fs::create_directories(dir);
        nlohmann::json j = r.report.ToJson();
        j["alpha"] = r.alpha;
        std::ofstream((dir / (SystemName(kind) + ".json")).string())
            << j.dump(2) << "\n";
        WriteTranscripts((dir / (SystemName(kind) + ".transcripts.jsonl")).string(),
                         r, asr.model->vocabulary());
        out << SystemName(kind) << " cer " << r.report.cer() << "\n";
      })
      ->add_option("--system", system_name,
                   "all, baseline, separate, separate+SF, cross_modal or "
                   "cross_modal+SF");
  {
    CLI::App *sub = add(
        "sweep-alpha", "Fused CER per alpha into run_dir/sweep as CSV",
        [&](const RunConfig &c) {
          const Architecture arch = ParseCorrectorArch(arch_name);
          const CorpusSplit split = ParseSplit(split_name);
          LoadedCheckpoint asr = LoadCheckpoint(c.paths.Asr());
          LoadedCheckpoint corr = LoadCheckpoint(c.paths.Corrector(arch));
          auto data = ReadCorpus((fs::path(c.paths.Data()) /
                                  (SplitName(split) + ".jsonl")).string());
          auto rows = SweepAlpha(*asr.model, *corr.model, data, c.decode,
                                 c.alphas, o.workers);
          const fs::path dir = fs::path(c.paths.run_dir) / "sweep";
          fs::create_directories(dir);
          const std::string csv = SweepCsv(rows);
          std::ofstream((dir / (ArchitectureName(arch) + "_" + SplitName(split) +
                                ".csv")).string())
              << csv;
          out << csv;
        });
    sub->add_option("--alphas", o.alphas,
                    "Comma-separated weights in [0, 1] (decode.alphas)");
    sub->add_option("--arch", arch_name, "cross-modal or separate");
    sub->add_option("--split", split_name, "Corpus split: train, dev or eval");
  }
  add("dump-attention",
      "Cross-modal encoder self-attention for one eval triple into "
      "run_dir/attention",
      [&](const RunConfig &c) {
        AttentionDump d = StageDumpAttention(c, utterance, err);
        for (const HeadModalityStats &s : d.stats) out << s.ToJson().dump() << "\n";
      })
      ->add_option("--utterance", utterance, "Eval utterance id (default: first)");
  add("grad-check", "Finite-difference gradient checks per primitive, layer and model",
      [&](const RunConfig &c) {
        double worst = 0.0;
        for (const GradSuiteEntry &e : RunGradSuite(c.seed)) {
          out << std::left << std::setw(10) << e.group << std::setw(26) << e.name
              << std::scientific << std::setprecision(3) << e.max_relative_error
              << std::defaultfloat << "\n";
          worst = std::max(worst, e.max_relative_error);
        }
        out << "max relative error " << worst << "\n";
        if (!(worst < 1e-4))
          throw RuntimeFailure("gradient check failed: max relative error " +
                               std::to_string(worst));
      });
  add("pipeline", "Data, recognizer, triples, both correctors, evaluation and attention",
      [&](const RunConfig &c) {
        PipelineResult r = RunPipeline(c, o.workers, err);
        out << r.summary.ToJson()["cer"].dump(2) << "\n";
      });

  const std::string started = Now();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }
  std::vector<std::string> args(argv, argv + argc);
  try {
    RunConfig cfg = o.Resolve();
    if (command != "grad-check") {
      fs::create_directories(cfg.paths.run_dir);
      WriteEffectiveConfig(cfg);
    }
    action(cfg);
    if (command != "grad-check") RecordMetadata(cfg, command, args, started);
    return kExitOk;
  } catch (const ValidationError &e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception &e) {
    err << "failure: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace ncm::cli
