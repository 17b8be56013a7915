// synthdata/task.cc

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

#include "ncm/synthdata/task.h"

#include <cmath>
#include <fstream>
#include <set>

#include "ncm/common/error.h"
#include "ncm/common/json_util.h"
#include "ncm/models/vocabulary.h"

namespace ncm {

void TaskSpec::Validate() const {
  NCM_CHECK(vocab_size >= 4, "task.vocab_size must be >= 4, got ", vocab_size);
  NCM_CHECK(feature_dim >= 2, "task.feature_dim must be >= 2, got ",
            feature_dim);
  NCM_CHECK(min_frames_per_token >= 1 &&
                max_frames_per_token >= min_frames_per_token,
            "task.frames_per_token: need 1 <= min <= max, got ",
            min_frames_per_token, "..", max_frames_per_token);
  NCM_CHECK(noise_sigma >= 0.0, "task.noise_sigma must be >= 0, got ",
            noise_sigma);
  NCM_CHECK(mean_radius > 0.0, "task.mean_radius must be > 0, got ",
            mean_radius);
  std::set<int> used;
  for (const ConfusablePair &p : confusable_pairs) {
    NCM_CHECK(p.a >= 0 && p.a < vocab_size && p.b >= 0 && p.b < vocab_size &&
                  p.a != p.b,
              "task.confusable_pairs: bad pair (", p.a, ", ", p.b, ")");
    NCM_CHECK(used.insert(p.a).second && used.insert(p.b).second,
              "task.confusable_pairs: pairs must be disjoint, token reused in (",
              p.a, ", ", p.b, ")");
    NCM_CHECK(p.distance >= 0.0, "task.confusable_pairs: negative distance ",
              p.distance);
  }
  NCM_CHECK(markov_order >= 1 && markov_order <= 3,
            "task.markov_order must be 1, 2 or 3, got ", markov_order);
  NCM_CHECK(markov_sharpness >= 0.0, "task.markov_sharpness must be >= 0, got ",
            markov_sharpness);
  NCM_CHECK(min_length >= 1 && max_length >= min_length,
            "task.length range: need 1 <= min <= max, got ", min_length, "..",
            max_length);
  NCM_CHECK(train_size >= 0 && dev_size >= 0 && eval_size >= 0,
            "task split sizes must be >= 0");
  NCM_CHECK(triple_noise_sigma >= 0.0,
            "task.triple_noise_sigma must be >= 0, got ", triple_noise_sigma);
  NCM_CHECK(triple_beam_size >= 1, "task.triple_beam_size must be >= 1, got ",
            triple_beam_size);
}

nlohmann::json TaskSpec::ToJson() const {
  nlohmann::json pairs = nlohmann::json::array();
  for (const ConfusablePair &p : confusable_pairs)
    pairs.push_back({p.a, p.b, p.distance});
  return {{"vocab_size", vocab_size},
          {"feature_dim", feature_dim},
          {"min_frames_per_token", min_frames_per_token},
          {"max_frames_per_token", max_frames_per_token},
          {"noise_sigma", noise_sigma},
          {"mean_radius", mean_radius},
          {"confusable_pairs", pairs},
          {"markov_order", markov_order},
          {"markov_sharpness", markov_sharpness},
          {"min_length", min_length},
          {"max_length", max_length},
          {"train_size", train_size},
          {"dev_size", dev_size},
          {"eval_size", eval_size},
          {"triple_noise_sigma", triple_noise_sigma},
          {"triple_beam_size", triple_beam_size}};
}

TaskSpec TaskSpec::FromJson(const nlohmann::json &j) {
  CheckKeys(j, "task",
            {"vocab_size", "feature_dim", "min_frames_per_token",
             "max_frames_per_token", "noise_sigma", "mean_radius",
             "confusable_pairs", "markov_order", "markov_sharpness",
             "min_length", "max_length", "train_size", "dev_size",
             "eval_size", "triple_noise_sigma", "triple_beam_size"});
  TaskSpec s;
  ReadField(j, "task", "vocab_size", s.vocab_size);
  ReadField(j, "task", "feature_dim", s.feature_dim);
  ReadField(j, "task", "min_frames_per_token", s.min_frames_per_token);
  ReadField(j, "task", "max_frames_per_token", s.max_frames_per_token);
  ReadField(j, "task", "noise_sigma", s.noise_sigma);
  ReadField(j, "task", "mean_radius", s.mean_radius);
  ReadField(j, "task", "markov_order", s.markov_order);
  ReadField(j, "task", "markov_sharpness", s.markov_sharpness);
  ReadField(j, "task", "min_length", s.min_length);
  ReadField(j, "task", "max_length", s.max_length);
  ReadField(j, "task", "train_size", s.train_size);
  ReadField(j, "task", "dev_size", s.dev_size);
  ReadField(j, "task", "eval_size", s.eval_size);
  ReadField(j, "task", "triple_noise_sigma", s.triple_noise_sigma);
  ReadField(j, "task", "triple_beam_size", s.triple_beam_size);
  if (auto it = j.find("confusable_pairs"); it != j.end()) {
    NCM_CHECK(it->is_array(), "task.confusable_pairs: expected an array");
    s.confusable_pairs.clear();
    for (const auto &p : *it) {
      NCM_CHECK(p.is_array() && p.size() == 3 && p[0].is_number_integer() &&
                    p[1].is_number_integer() && p[2].is_number(),
                "task.confusable_pairs: each entry must be [a, b, distance], "
                "got ",
                p.dump());
      s.confusable_pairs.push_back(
          {p[0].get<int>(), p[1].get<int>(), p[2].get<double>()});
    }
  }
  s.Validate();
  return s;
}

std::string SplitName(CorpusSplit split) {
  switch (split) {
    case CorpusSplit::kTrain: return "train";
    case CorpusSplit::kDev: return "dev";
    case CorpusSplit::kEval: return "eval";
  }
  return "?";
}

CorpusSplit ParseSplit(const std::string &name) {
  if (name == "train") return CorpusSplit::kTrain;
  if (name == "dev") return CorpusSplit::kDev;
  if (name == "eval") return CorpusSplit::kEval;
  throw ValidationError("unknown split '" + name +
                        "' (expected train, dev or eval)");
}

namespace {

enum StreamLabel : uint64_t {
  kMeansStream = 0x6d65616e73ULL,
  kChainStream = 0x636861696eULL,
  kUttStream = 0x757474ULL,
};

double Quantize(double x) { return std::round(x * 1e6) / 1e6; }

}  // namespace

SyntheticTask::SyntheticTask(const TaskSpec &spec, uint64_t seed)
    : spec_(spec), seed_(seed) {
  spec_.Validate();
  const int v = spec_.vocab_size, f = spec_.feature_dim;
  Rng mean_rng = MakeRng(seed, {kMeansStream});
  std::normal_distribution<double> normal(0.0, 1.0);
  means_.resize(static_cast<size_t>(v) * f);
  for (int k = 0; k < v; ++k) {
    double norm = 0.0;
    for (int i = 0; i < f; ++i) {
      means_[k * f + i] = normal(mean_rng);
      norm += means_[k * f + i] * means_[k * f + i];
    }
    norm = std::sqrt(norm);
    for (int i = 0; i < f; ++i)
      means_[k * f + i] *= spec_.mean_radius / norm;
  }
  for (const ConfusablePair &p : spec_.confusable_pairs) {
    double *a = &means_[p.a * f], *b = &means_[p.b * f];
    std::vector<double> mid(f), dir(f);
    double len = 0.0;
    for (int i = 0; i < f; ++i) {
      mid[i] = 0.5 * (a[i] + b[i]);
      dir[i] = a[i] - b[i];
      len += dir[i] * dir[i];
    }
    len = std::sqrt(len);
    for (int i = 0; i < f; ++i) {
      a[i] = mid[i] + 0.5 * p.distance * dir[i] / len;
      b[i] = mid[i] - 0.5 * p.distance * dir[i] / len;
    }
  }

  Rng chain_rng = MakeRng(seed, {kChainStream});
  size_t contexts = 1;
  for (int i = 0; i < spec_.markov_order; ++i) contexts *= v + 1;
  transitions_.resize(contexts * v);
  for (size_t c = 0; c < contexts; ++c) {
    double *row = &transitions_[c * v];
    double z = 0.0;
    for (int k = 0; k < v; ++k) {
      row[k] = std::exp(spec_.markov_sharpness * normal(chain_rng));
      z += row[k];
    }
    for (int k = 0; k < v; ++k) row[k] /= z;
  }
}

std::span<const double> SyntheticTask::mean(int k) const {
  NCM_CHECK(k >= 0 && k < spec_.vocab_size, "task: token ", k,
            " out of range");
  return {means_.data() + static_cast<size_t>(k) * spec_.feature_dim,
          static_cast<size_t>(spec_.feature_dim)};
}

size_t SyntheticTask::ContextIndex(std::span<const int> history) const {
  const int v = spec_.vocab_size;
  size_t index = 0;
  for (int i = spec_.markov_order; i >= 1; --i) {
    const int pos = static_cast<int>(history.size()) - i;
    const int sym = pos >= 0 ? history[pos] : v;  // v = start symbol
    NCM_CHECK(sym >= 0 && sym <= v, "task: history token ", sym,
              " out of range");
    index = index * (v + 1) + sym;
  }
  return index;
}

std::span<const double> SyntheticTask::transition(
    std::span<const int> history) const {
  return {transitions_.data() + ContextIndex(history) * spec_.vocab_size,
          static_cast<size_t>(spec_.vocab_size)};
}

std::vector<int> SyntheticTask::SampleTokens(Rng &rng) const {
  std::uniform_int_distribution<int> length(spec_.min_length, spec_.max_length);
  const int n = length(rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<int> out;
  for (int t = 0; t < n; ++t) {
    std::span<const double> p = transition(out);
    double r = u(rng), acc = 0.0;
    int pick = spec_.vocab_size - 1;
    for (int k = 0; k < spec_.vocab_size; ++k) {
      acc += p[k];
      if (r < acc) {
        pick = k;
        break;
      }
    }
    out.push_back(pick);
  }
  return out;
}

Tensor SyntheticTask::RenderFeatures(std::span<const int> content,
                                     Rng &rng) const {
  NCM_CHECK(!content.empty(), "render: empty token sequence");
  const int f = spec_.feature_dim;
  std::uniform_int_distribution<int> frames(spec_.min_frames_per_token,
                                            spec_.max_frames_per_token);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> data;
  for (int k : content) {
    std::span<const double> mu = mean(k);
    const int n = frames(rng);
    for (int r = 0; r < n; ++r)
      for (int i = 0; i < f; ++i)
        data.push_back(Quantize(mu[i] + spec_.noise_sigma * noise(rng)));
  }
  const int64_t rows = static_cast<int64_t>(data.size()) / f;
  return Tensor::FromData({rows, f}, std::move(data));
}

Utterance SyntheticTask::MakeUtterance(CorpusSplit split, int index) const {
  Rng rng = MakeRng(seed_, {kUttStream, static_cast<uint64_t>(split),
                            static_cast<uint64_t>(index)});
  std::vector<int> content = SampleTokens(rng);
  Utterance u;
  char id[32];
  std::snprintf(id, sizeof(id), "%s-%06d", SplitName(split).c_str(), index);
  u.id = id;
  u.frames = RenderFeatures(content, rng);
  for (int k : content) u.tokens.push_back(k + Vocabulary::kNumReserved);
  return u;
}

std::vector<Utterance> SyntheticTask::GenerateSplit(CorpusSplit split,
                                                    int workers) const {
  const int n = split == CorpusSplit::kTrain ? spec_.train_size
                : split == CorpusSplit::kDev ? spec_.dev_size
                                       : spec_.eval_size;
  std::vector<Utterance> out(n);
#pragma omp parallel for schedule(dynamic, 16) num_threads(workers) if (workers > 1)
  for (int i = 0; i < n; ++i) out[i] = MakeUtterance(split, i);
  return out;
}

Corpora GenerateCorpora(const TaskSpec &spec, uint64_t seed, int workers) {
  SyntheticTask task(spec, seed);
  return {task.GenerateSplit(CorpusSplit::kTrain, workers),
          task.GenerateSplit(CorpusSplit::kDev, workers),
          task.GenerateSplit(CorpusSplit::kEval, workers)};
}

void WriteCorpus(const std::string &path, std::span<const Utterance> corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot open '" + path + "' for writing");
  for (const Utterance &u : corpus) {
    nlohmann::json frames = nlohmann::json::array();
    const int64_t rows = u.frames.dim(0), cols = u.frames.dim(1);
    for (int64_t r = 0; r < rows; ++r) {
      auto row = u.frames.data().subspan(r * cols, cols);
      frames.push_back(std::vector<double>(row.begin(), row.end()));
    }
    nlohmann::json line = {{"id", u.id}, {"tokens", u.tokens}, {"frames", frames}};
    if (u.hyp) line["hyp"] = *u.hyp;
    out << line.dump() << '\n';
  }
  if (!out) throw RuntimeFailure("write to '" + path + "' failed");
}

std::vector<Utterance> ReadCorpus(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open corpus '" + path + "'");
  std::vector<Utterance> out;
  std::string text;
  int line_no = 0;
  std::set<std::string> ids;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception &e) {
      throw ValidationError(where + ": invalid JSON (" + e.what() + ")");
    }
    try {
      CheckKeys(j, where, {"id", "tokens", "frames", "hyp"});
      NCM_CHECK(j.contains("id") && j["id"].is_string(),
                "missing string field 'id'");
      NCM_CHECK(j.contains("tokens") && j["tokens"].is_array(),
                "missing array field 'tokens'");
      NCM_CHECK(j.contains("frames") && j["frames"].is_array() &&
                    !j["frames"].empty(),
                "missing non-empty array field 'frames'");
      Utterance u;
      u.id = j["id"].get<std::string>();
      NCM_CHECK(ids.insert(u.id).second, "duplicate id '", u.id, "'");
      for (const auto &t : j["tokens"]) {
        NCM_CHECK(t.is_number_integer() &&
                      t.get<int>() >= Vocabulary::kNumReserved,
                  "field 'tokens': bad token ", t.dump());
        u.tokens.push_back(t.get<int>());
      }
      const size_t cols = j["frames"][0].is_array() ? j["frames"][0].size() : 0;
      NCM_CHECK(cols > 0, "field 'frames': rows must be non-empty arrays");
      std::vector<double> data;
      for (const auto &row : j["frames"]) {
        NCM_CHECK(row.is_array() && row.size() == cols,
                  "field 'frames': ragged rows");
        for (const auto &x : row) {
          NCM_CHECK(x.is_number(), "field 'frames': non-numeric value ",
                    x.dump());
          data.push_back(x.get<double>());
        }
      }
      const int64_t rows = static_cast<int64_t>(j["frames"].size());
      u.frames = Tensor::FromData({rows, static_cast<int64_t>(cols)},
                                  std::move(data));
      if (j.contains("hyp")) {
        NCM_CHECK(j["hyp"].is_array(), "field 'hyp' must be an array");
        std::vector<int> hyp;
        for (const auto &t : j["hyp"]) {
          NCM_CHECK(t.is_number_integer() &&
                        t.get<int>() >= Vocabulary::kNumReserved,
                    "field 'hyp': bad token ", t.dump());
          hyp.push_back(t.get<int>());
        }
        u.hyp = std::move(hyp);
      }
      out.push_back(std::move(u));
    } catch (const ValidationError &e) {
      const std::string msg = e.what();
      if (msg.rfind(where, 0) == 0) throw;
      throw ValidationError(where + ": " + msg);
    }
  }
  return out;
}

nlohmann::json CorpusManifest(const TaskSpec &spec, uint64_t seed,
                              const std::string &split, size_t count) {
  return {{"spec", spec.ToJson()},
          {"seed", seed},
          {"split", split},
          {"count", count},
          {"generator_version", kGeneratorVersion}};
}

}  // namespace ncm
