// synthdata/triples.cc

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

#include "ncm/synthdata/triples.h"

#include "ncm/common/error.h"
#include "ncm/decoding/search.h"

namespace ncm {

std::vector<Utterance> MakeTriples(const Model &asr,
                                   std::span<const Utterance> corpus,
                                   const TaskSpec &spec, uint64_t noise_seed,
                                   int workers, TripleSummary *summary) {
  spec.Validate();
  const ModelConfig &mc = asr.config();
  NCM_CHECK(mc.arch == Architecture::kAsr,
            "make-triples: checkpoint must be an asr model, got ",
            ArchitectureName(mc.arch));
  NCM_CHECK(mc.num_content_tokens == spec.vocab_size,
            "make-triples: recognizer has ", mc.num_content_tokens,
            " content tokens, task has ", spec.vocab_size);
  NCM_CHECK(mc.feature_dim == spec.feature_dim, "make-triples: recognizer "
            "expects feature_dim ", mc.feature_dim, ", task has ",
            spec.feature_dim);
  FusionConfig decode;
  decode.alpha = 0.0;
  decode.beam_size = spec.triple_beam_size;

  const int n = static_cast<int>(corpus.size());
  std::vector<Utterance> out(n);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic, 4) num_threads(workers) if (workers > 1)
  for (int i = 0; i < n; ++i) {
    try {
      const Utterance &u = corpus[i];
      Rng rng = MakeRng(noise_seed, {static_cast<uint64_t>(i)});
      std::normal_distribution<double> noise(0.0, spec.triple_noise_sigma);
      std::vector<double> noisy(u.frames.data().begin(), u.frames.data().end());
      if (spec.triple_noise_sigma > 0.0)
        for (double &x : noisy) x += noise(rng);
      Tensor frames = Tensor::FromData(u.frames.shape(), std::move(noisy));
      out[i] = {u.id, u.tokens, u.frames,
                FirstPassDecode(asr, frames, decode).Content()};
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto &e : errors)
    if (e) std::rethrow_exception(e);
  if (summary) {
    *summary = {};
    for (const Utterance &u : out) summary->counts += Align(u.tokens, *u.hyp);
    summary->count = out.size();
    summary->hypothesis_cer =
        summary->counts.ref_len == 0
            ? 0.0
            : static_cast<double>(summary->counts.errors()) /
                  static_cast<double>(summary->counts.ref_len);
  }
  return out;
}

}  // namespace ncm
