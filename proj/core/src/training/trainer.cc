// training/trainer.cc

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

#include "ncm/training/trainer.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "ncm/common/error.h"
#include "ncm/common/json_util.h"
#include "ncm/decoding/search.h"
#include "ncm/evaluation/cer.h"
#include "ncm/numerics/autograd.h"
#include "ncm/numerics/ops.h"
#include "ncm/training/checkpoint.h"

namespace ncm {

Tensor CrossEntropyLoss(const Tensor &logp, std::span<const int> targets,
                        int pad_id) {
  NCM_CHECK(logp.rank() == 2 &&
                logp.dim(0) == static_cast<int64_t>(targets.size()),
            "cross-entropy: ", targets.size(), " targets for log-probs of shape ",
            ShapeToString(logp.shape()));
  const int64_t v = logp.dim(1);
  int64_t counted = 0;
  for (int t : targets) {
    NCM_CHECK(t >= 0 && t < v, "cross-entropy: target ", t, " outside [0, ", v,
              ")");
    counted += t != pad_id;
  }
  NCM_CHECK(counted > 0, "cross-entropy: every target is padding");
  std::vector<double> weights(logp.numel(), 0.0);
  const double w = -1.0 / static_cast<double>(counted);
  for (size_t r = 0; r < targets.size(); ++r)
    if (targets[r] != pad_id) weights[r * v + targets[r]] = w;
  return ReduceSum(Mul(logp, Tensor::FromData(logp.shape(), std::move(weights))));
}

void TrainConfig::Validate() const {
  NCM_CHECK(batch_size >= 1, "train.batch_size must be >= 1, got ", batch_size);
  NCM_CHECK(total_steps >= 1, "train.total_steps must be >= 1, got ",
            total_steps);
  NCM_CHECK(warmup >= 1, "train.warmup must be >= 1, got ", warmup);
  NCM_CHECK(lr_scale > 0.0, "train.lr_scale must be > 0, got ", lr_scale);
  NCM_CHECK(eval_every >= 1, "train.eval_every must be >= 1, got ", eval_every);
  NCM_CHECK(dev_limit >= 0, "train.dev_limit must be >= 0, got ", dev_limit);
  NCM_CHECK(clip_norm > 0.0, "train.clip_norm must be > 0, got ", clip_norm);
}

nlohmann::json TrainConfig::ToJson() const {
  return {{"batch_size", batch_size}, {"total_steps", total_steps},
          {"warmup", warmup},         {"lr_scale", lr_scale},
          {"eval_every", eval_every}, {"dev_limit", dev_limit},
          {"seed", seed},             {"dropout", dropout},
          {"clip_norm", clip_norm}};
}

TrainConfig TrainConfig::FromJson(const nlohmann::json &j) {
  CheckKeys(j, "train",
            {"batch_size", "total_steps", "warmup", "lr_scale", "eval_every",
             "dev_limit", "seed", "dropout", "clip_norm"});
  TrainConfig c;
  ReadField(j, "train", "batch_size", c.batch_size);
  ReadField(j, "train", "total_steps", c.total_steps);
  ReadField(j, "train", "warmup", c.warmup);
  ReadField(j, "train", "lr_scale", c.lr_scale);
  ReadField(j, "train", "eval_every", c.eval_every);
  ReadField(j, "train", "dev_limit", c.dev_limit);
  ReadField(j, "train", "seed", c.seed);
  ReadField(j, "train", "dropout", c.dropout);
  ReadField(j, "train", "clip_norm", c.clip_norm);
  c.Validate();
  return c;
}

nlohmann::json MetricsRecord::ToJson() const {
  return {{"step", step},
          {"lr", lr},
          {"train_loss", train_loss},
          {"dev_loss", dev_loss},
          {"dev_cer", dev_cer}};
}

SequenceExample ToExample(const Model &model, const Utterance &u) {
  SequenceExample ex{u.frames, {}, u.tokens};
  if (model.config().uses_hypothesis()) {
    NCM_CHECK(u.hyp.has_value(), "utterance '", u.id,
              "' has no hypothesis; correctors train on triples");
    ex.hypothesis = *u.hyp;
  }
  return ex;
}

TeacherForcedStats EvaluateTeacherForced(const Model &model,
                                         std::span<const Utterance> data,
                                         int batch_size) {
  NCM_CHECK(batch_size >= 1, "evaluate: batch_size must be >= 1");
  NoGradGuard no_grad;
  TeacherForcedStats stats;
  double nll = 0.0;
  int64_t correct = 0;
  for (size_t begin = 0; begin < data.size(); begin += batch_size) {
    std::vector<SequenceExample> batch;
    for (size_t i = begin; i < std::min(data.size(), begin + batch_size); ++i)
      batch.push_back(ToExample(model, data[i]));
    BatchScores s = model.ForwardBatch(batch);
    const int64_t v = s.logp.dim(1);
    auto lp = s.logp.data();
    for (size_t r = 0; r < s.targets.size(); ++r) {
      const double *row = lp.data() + r * v;
      nll -= row[s.targets[r]];
      correct += std::max_element(row, row + v) - row == s.targets[r];
    }
    stats.tokens += static_cast<int64_t>(s.targets.size());
  }
  if (stats.tokens > 0) {
    stats.loss = nll / static_cast<double>(stats.tokens);
    stats.accuracy =
        static_cast<double>(correct) / static_cast<double>(stats.tokens);
  }
  return stats;
}

double GreedyCer(const Model &model, std::span<const Utterance> data,
                 int workers) {
  const int n = static_cast<int>(data.size());
  std::vector<EditCounts> counts(n);
  std::vector<std::exception_ptr> errors(n);
  const FusionConfig budget;
#pragma omp parallel for schedule(dynamic, 4) num_threads(workers) if (workers > 1)
  for (int i = 0; i < n; ++i) {
    try {
      NoGradGuard no_grad;
      SequenceExample ex = ToExample(model, data[i]);
      ModelScorer scorer(model, model.Encode(ex.frames, ex.hypothesis));
      const WeightedScorer ws[1] = {{&scorer, 1.0}};
      const int max_len = std::min(budget.MaxLength(ex.frames.dim(0)),
                                   model.config().max_target_len + 1);
      counts[i] = Align(data[i].tokens, GreedySearch(ws, max_len).Content());
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto &e : errors)
    if (e) std::rethrow_exception(e);
  EditCounts total;
  for (const EditCounts &c : counts) total += c;
  return total.ref_len == 0 ? 0.0
                            : static_cast<double>(total.errors()) /
                                  static_cast<double>(total.ref_len);
}

void RestoreBest(Model &model, const TrainResult &result) {
  const auto &entries = model.parameters().entries();
  NCM_CHECK(result.best_values.size() == entries.size(),
            "restore: snapshot has ", result.best_values.size(),
            " tensors, model has ", entries.size());
  for (size_t i = 0; i < entries.size(); ++i) {
    Tensor t = entries[i].second;
    NCM_CHECK(result.best_values[i].size() == static_cast<size_t>(t.numel()),
              "restore: size mismatch for '", entries[i].first, "'");
    std::copy(result.best_values[i].begin(), result.best_values[i].end(),
              t.mutable_data().begin());
  }
}

namespace {

enum StreamLabel : uint64_t {
  kShuffleStream = 0x73687566ULL,
  kDropoutStream = 0x64726f70ULL,
};

std::vector<std::vector<double>> Snapshot(const Model &model) {
  std::vector<std::vector<double>> out;
  for (const auto &[name, t] : model.parameters().entries())
    out.emplace_back(t.data().begin(), t.data().end());
  return out;
}

}  // namespace

TrainResult TrainModel(Model &model, std::span<const Utterance> train,
                       std::span<const Utterance> dev, const TrainConfig &config,
                       const std::string &out_dir, int workers,
                       std::ostream *progress) {
  namespace fs = std::filesystem;
  config.Validate();
  NCM_CHECK(!train.empty(), "train: empty training set");
  NCM_CHECK(!dev.empty(), "train: empty dev set");
  if (config.dev_limit > 0 && static_cast<size_t>(config.dev_limit) < dev.size())
    dev = dev.first(config.dev_limit);
  if (progress && config.warmup > config.total_steps)
    *progress << "warning: train.warmup " << config.warmup
              << " exceeds train.total_steps " << config.total_steps << "\n";
  std::ofstream metrics;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    metrics.open(fs::path(out_dir) / "metrics.jsonl",
                 std::ios::binary | std::ios::trunc);
    if (!metrics)
      throw RuntimeFailure("cannot write metrics log in '" + out_dir + "'");
  }

  ParameterRegistry &registry = model.parameters();
  AdamOptimizer adam(registry);
  Rng shuffle_rng = MakeRng(config.seed, {kShuffleStream});
  Rng dropout_rng = MakeRng(config.seed, {kDropoutStream});
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), shuffle_rng);
  const size_t batch_size =
      std::min(train.size(), static_cast<size_t>(config.batch_size));
  size_t cursor = 0;

  TrainResult result;
  result.initial_dev_loss = EvaluateTeacherForced(model, dev).loss;
  result.best_dev_loss = std::numeric_limits<double>::infinity();
  double loss_sum = 0.0;
  int loss_count = 0;
  for (int step = 1; step <= config.total_steps; ++step) {
    if (cursor + batch_size > order.size()) {
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      cursor = 0;
    }
    std::vector<SequenceExample> batch;
    for (size_t i = 0; i < batch_size; ++i)
      batch.push_back(ToExample(model, train[order[cursor++]]));
    const double lr = config.lr_scale *
                      NoamLearningRate(step, model.config().layer.d_model,
                                       config.warmup);
    ForwardContext ctx{config.dropout, &dropout_rng};
    BatchScores scores = model.ForwardBatch(batch, ctx);
    Tensor loss = CrossEntropyLoss(scores.logp, scores.targets);
    const double value = loss.item();
    if (!std::isfinite(value)) {
      std::string saved;
      if (!out_dir.empty()) {
        saved = (fs::path(out_dir) / "last_good.ckpt").string();
        SaveCheckpoint(saved, model, step - 1);
      }
      throw RuntimeFailure("training diverged at step " + std::to_string(step) +
                           ": loss " + std::to_string(value) +
                           (saved.empty() ? "" : "; last good parameters in " +
                                                     saved));
    }
    Backward(loss);
    // Parameters unreachable from this batch (e.g. a text encoder when every
    // hypothesis is empty) get an explicit zero gradient.
    for (const auto &[name, t] : registry.entries())
      if (!t.has_grad()) Tensor(t).mutable_grad();
    ClipGradNorm(registry, config.clip_norm);
    adam.Step(registry, lr);
    loss_sum += value;
    ++loss_count;

    if (step % config.eval_every == 0 || step == config.total_steps) {
      MetricsRecord rec;
      rec.step = step;
      rec.lr = lr;
      rec.train_loss = loss_sum / loss_count;
      rec.dev_loss = EvaluateTeacherForced(model, dev).loss;
      rec.dev_cer = GreedyCer(model, dev, workers);
      loss_sum = 0.0;
      loss_count = 0;
      result.log.push_back(rec);
      if (metrics) metrics << rec.ToJson().dump() << "\n" << std::flush;
      if (progress) *progress << rec.ToJson().dump() << "\n" << std::flush;
      if (rec.dev_loss < result.best_dev_loss) {
        result.best_dev_loss = rec.dev_loss;
        result.best_step = step;
        result.best_values = Snapshot(model);
        if (!out_dir.empty())
          SaveCheckpoint((fs::path(out_dir) / "best.ckpt").string(), model,
                         step, rec.ToJson());
      }
    }
  }
  if (!out_dir.empty())
    SaveCheckpoint((fs::path(out_dir) / "final.ckpt").string(), model,
                   config.total_steps, result.log.back().ToJson());
  return result;
}

}  // namespace ncm
