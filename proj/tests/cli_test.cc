// tests/cli_test.cc

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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

#include "cli/commands.h"
#include "cli/run_config.h"
#include "ncm/common/error.h"

namespace ncm::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out, err;
};

Result Call(std::vector<std::string> args) {
  args.insert(args.begin(), "ncm");
  std::vector<const char *> argv;
  for (const auto &a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = Run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path TempDir(const std::string &name) {
  fs::path p = fs::temp_directory_path() /
               ("ncm_cli_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string Slurp(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Relative path -> contents for every file under `root`.
std::map<std::string, std::string> Snapshot(const fs::path &root) {
  std::map<std::string, std::string> files;
  for (const auto &e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file())
      files[fs::relative(e.path(), root).string()] = Slurp(e.path());
  return files;
}

nlohmann::json TinyConfig() {
  return {{"task",
           {{"train_size", 24},
            {"dev_size", 4},
            {"eval_size", 4},
            {"min_length", 3},
            {"max_length", 5}}},
          {"model",
           {{"d_model", 16},
            {"num_heads", 2},
            {"ffn_dim", 32},
            {"encoder_blocks", 1},
            {"decoder_blocks", 1},
            {"speech_encoder_blocks", 1},
            {"conv_channels", 4}}},
          {"train", {{"total_steps", 6}, {"eval_every", 3}, {"batch_size", 4}}},
          {"decode", {{"beam_size", 2}, {"alphas", {0.0, 0.5, 1.0}}}}};
}

std::string WriteConfig(const fs::path &dir, const nlohmann::json &j) {
  const std::string path = (dir / "config_in.json").string();
  std::ofstream(path) << j.dump();
  return path;
}

TEST(RunConfigTest, DefaultsRoundTrip) {
  RunConfig c;
  nlohmann::json j = c.ToJson();
  EXPECT_EQ(RunConfig::FromJson(j).ToJson(), j);
  for (const char *s : {"seed", "task", "model", "train", "decode", "paths"})
    EXPECT_TRUE(j.contains(s)) << s;
  EXPECT_FALSE(j["model"].contains("arch"));
  EXPECT_FALSE(j["train"].contains("seed"));
  EXPECT_EQ(j["decode"]["alphas"].size(), 11u);
  EXPECT_EQ(c.ModelFor(Architecture::kSeparate).arch, Architecture::kSeparate);
  EXPECT_NE(c.TrainFor("asr").seed, c.TrainFor("cross_modal").seed);
}

TEST(RunConfigTest, RejectsUnknownAndMisplacedKeys) {
  auto message = [](const nlohmann::json &j) -> std::string {
    try {
      RunConfig::FromJson(j);
    } catch (const ValidationError &e) {
      return e.what();
    }
    return "";
  };
  EXPECT_NE(message({{"extra", 1}}).find("extra"), std::string::npos);
  EXPECT_NE(message({{"task", {{"vocab", 3}}}}).find("vocab"), std::string::npos);
  EXPECT_NE(message({{"model", {{"arch", "asr"}}}}).find("model.arch"),
            std::string::npos);
  EXPECT_NE(message({{"train", {{"seed", 3}}}}).find("train.seed"),
            std::string::npos);
  EXPECT_NE(message({{"decode", {{"alpha", 1.5}}}}).find("alpha"),
            std::string::npos);
  EXPECT_NE(message({{"decode", {{"alphas", {0.5, 2.0}}}}}).find("decode.alphas"),
            std::string::npos);
  EXPECT_NE(message({{"paths", {{"out", "x"}}}}).find("out"), std::string::npos);
  EXPECT_NE(message({{"train", {{"batch_size", "8"}}}}).find("train.batch_size"),
            std::string::npos);
  // Cross-section consistency.
  EXPECT_NE(message({{"task", {{"vocab_size", 20}}}}).find("num_content_tokens"),
            std::string::npos);
  EXPECT_NE(message({{"model", {{"feature_dim", 8}}}}).find("feature_dim"),
            std::string::npos);
}

TEST(RunConfigTest, LoadNamesTheFile) {
  const fs::path dir = TempDir("load");
  const std::string path = WriteConfig(dir, {{"train", {{"warmup", 0}}}});
  try {
    RunConfig::Load(path);
    FAIL();
  } catch (const ValidationError &e) {
    EXPECT_NE(std::string(e.what()).find(path), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("train.warmup"), std::string::npos);
  }
  std::ofstream((dir / "broken.json").string()) << "{not json";
  EXPECT_THROW(RunConfig::Load((dir / "broken.json").string()), ValidationError);
  fs::remove_all(dir);
}

TEST(RunConfigTest, AlphaList) {
  EXPECT_EQ(ParseAlphaList("0,0.25,1"), (std::vector<double>{0.0, 0.25, 1.0}));
  EXPECT_THROW(ParseAlphaList("0,x"), ValidationError);
  EXPECT_THROW(ParseAlphaList("0.5,1.5"), ValidationError);
  EXPECT_THROW(ParseAlphaList(""), ValidationError);
  EXPECT_THROW(ParseAlphaList("0.1x"), ValidationError);
}

TEST(CliTest, HelpDocumentsEveryFlag) {
  for (const char *sub :
       {"gen-data", "train-asr", "decode", "make-triples", "train-corrector",
        "fused-decode", "eval", "sweep-alpha", "dump-attention", "grad-check",
        "pipeline"}) {
    Result r = Call({sub, "--help"});
    EXPECT_EQ(r.code, kExitOk) << sub;
    for (const char *flag : {"--config", "--seed", "--run-dir", "--workers",
                             "--asr", "--beam", "--steps"})
      EXPECT_NE(r.out.find(flag), std::string::npos) << sub << " " << flag;
  }
  EXPECT_NE(Call({"sweep-alpha", "--help"}).out.find("--alphas"), std::string::npos);
  EXPECT_NE(Call({"fused-decode", "--help"}).out.find("--alpha"), std::string::npos);
  EXPECT_NE(Call({"train-corrector", "--help"}).out.find("--arch"), std::string::npos);
}

TEST(CliTest, ExitCodes) {
  EXPECT_EQ(Call({}).code, kExitValidation);
  EXPECT_EQ(Call({"frobnicate"}).code, kExitValidation);
  EXPECT_EQ(Call({"gen-data", "--workers", "0"}).code, kExitValidation);
  const fs::path dir = TempDir("codes");
  const std::string cfg = WriteConfig(dir, {{"model", {{"d_model", 30}}}});
  Result bad = Call({"gen-data", "--config", cfg});
  EXPECT_EQ(bad.code, kExitValidation);
  EXPECT_NE(bad.err.find(cfg), std::string::npos);
  EXPECT_NE(bad.err.find("num_heads"), std::string::npos);
  // A missing checkpoint is an input problem.
  EXPECT_EQ(Call({"decode", "--run-dir", (dir / "r").string()}).code,
            kExitValidation);
  // An unwritable run directory is a runtime failure.
  std::ofstream((dir / "file").string()) << "x";
  EXPECT_EQ(Call({"gen-data", "--run-dir", (dir / "file" / "sub").string()}).code,
            kExitRuntime);
  Result bad_arch = Call({"train-corrector", "--arch", "asr", "--run-dir",
                          (dir / "r").string()});
  EXPECT_EQ(bad_arch.code, kExitValidation);
  fs::remove_all(dir);
}

TEST(CliTest, GradCheckPassesPerLayer) {
  Result r = Call({"grad-check"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  for (const char *name : {"matmul", "conv2d_stride2", "encoder_block",
                           "decoder_block_2mem", "loss_asr", "loss_cross_modal",
                           "loss_separate"})
    EXPECT_NE(r.out.find(name), std::string::npos) << name;
}

TEST(CliTest, PipelineIsReproducibleAndSubcommandsWork) {
  const fs::path dir = TempDir("pipe");
  const std::string cfg = WriteConfig(dir, TinyConfig());
  const fs::path a = dir / "a", b = dir / "b";
  Result ra = Call({"pipeline", "--config", cfg, "--seed", "7", "--run-dir", a.string()});
  ASSERT_EQ(ra.code, kExitOk) << ra.err;
  Result rb = Call({"pipeline", "--config", cfg, "--seed", "7", "--run-dir",
                    b.string(), "--workers", "2"});
  ASSERT_EQ(rb.code, kExitOk) << rb.err;
  auto sa = Snapshot(a), sb = Snapshot(b);
  ASSERT_TRUE(sa.count("metadata.json"));
  sa.erase("metadata.json");
  sb.erase("metadata.json");
  // The effective config records its own run directory.
  sa.erase("config.json");
  sb.erase("config.json");
  ASSERT_EQ(sa.size(), sb.size());
  for (const auto &[name, bytes] : sa) EXPECT_EQ(bytes, sb[name]) << name;
  for (const char *f :
       {"data/train.jsonl", "data/manifest.json", "asr/best.ckpt",
        "asr/final.ckpt", "asr/metrics.jsonl", "triples/train.jsonl",
        "triples/eval.jsonl", "cross_modal/best.ckpt", "separate/best.ckpt",
        "eval/baseline.json", "eval/cross_modal+SF.json",
        "eval/separate+SF.transcripts.jsonl", "eval/sweep_dev_cross_modal.csv",
        "eval/summary.json", "attention/boundaries.json"})
    EXPECT_TRUE(sa.count(f)) << f;
  nlohmann::json effective = nlohmann::json::parse(Slurp(a / "config.json"));
  EXPECT_EQ(effective["seed"], 7);
  EXPECT_EQ(effective["paths"]["run_dir"], a.string());
  EXPECT_EQ(effective["train"]["clip_norm"], 5.0);  // defaults resolved
  nlohmann::json meta = nlohmann::json::parse(Slurp(a / "metadata.json"));
  EXPECT_TRUE(meta["commands"]["pipeline"].contains("started"));

  // Inputs are not modified by later subcommands.
  const std::string data_before = Slurp(a / "data/eval.jsonl");
  Result sweep = Call({"sweep-alpha", "--config", cfg, "--run-dir", a.string(),
                       "--alphas", "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1"});
  ASSERT_EQ(sweep.code, kExitOk) << sweep.err;
  const std::string csv = Slurp(a / "sweep/cross_modal_eval.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 12);
  EXPECT_EQ(csv, sweep.out);
  EXPECT_EQ(Slurp(a / "data/eval.jsonl"), data_before);

  Result fused = Call({"fused-decode", "--config", cfg, "--run-dir", a.string(),
                       "--alpha", "0", "--arch", "separate"});
  ASSERT_EQ(fused.code, kExitOk) << fused.err;
  Result dec = Call({"decode", "--config", cfg, "--run-dir", a.string()});
  ASSERT_EQ(dec.code, kExitOk) << dec.err;
  EXPECT_EQ(fused.out, dec.out);  // alpha 0 is the first pass

  Result one = Call({"eval", "--config", cfg, "--run-dir", a.string(), "--system",
                     "cross_modal"});
  ASSERT_EQ(one.code, kExitOk) << one.err;
  Result attn = Call({"dump-attention", "--config", cfg, "--run-dir", a.string(),
                      "--utterance", "eval-000001"});
  ASSERT_EQ(attn.code, kExitOk) << attn.err;
  int pgms = 0;
  for (const auto &e : fs::directory_iterator(a / "attention"))
    pgms += e.path().extension() == ".pgm";
  EXPECT_EQ(pgms, 1 * 2);  // blocks x heads of the tiny model
  EXPECT_EQ(Call({"dump-attention", "--config", cfg, "--run-dir", a.string(),
                  "--utterance", "nope"})
                .code,
            kExitValidation);
  fs::remove_all(dir);
}

TEST(CliTest, StagesMatchPipeline) {
  const fs::path dir = TempDir("stages");
  const std::string cfg = WriteConfig(dir, TinyConfig());
  const fs::path p = dir / "p", s = dir / "s";
  ASSERT_EQ(Call({"pipeline", "--config", cfg, "--run-dir", p.string()}).code, 0);
  for (std::vector<std::string> args :
       {std::vector<std::string>{"gen-data"}, {"train-asr"}, {"make-triples"},
        {"train-corrector", "--arch", "cross-modal"},
        {"train-corrector", "--arch", "separate"}, {"eval"}, {"dump-attention"}}) {
    args.insert(args.end(), {"--config", cfg, "--run-dir", s.string()});
    Result r = Call(args);
    ASSERT_EQ(r.code, kExitOk) << args[0] << ": " << r.err;
  }
  auto sp = Snapshot(p), ss = Snapshot(s);
  for (const char *f : {"asr/best.ckpt", "cross_modal/final.ckpt",
                        "separate/metrics.jsonl", "eval/summary.json",
                        "attention/block0_head1.csv"})
    EXPECT_EQ(sp[f], ss[f]) << f;
  fs::remove_all(dir);
}

}  // namespace
}  // namespace ncm::cli
