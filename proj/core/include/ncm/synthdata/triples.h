// ncm/synthdata/triples.h

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

#ifndef NCM_SYNTHDATA_TRIPLES_H_
#define NCM_SYNTHDATA_TRIPLES_H_

#include <span>
#include <vector>

#include "ncm/evaluation/cer.h"
#include "ncm/models/model.h"
#include "ncm/synthdata/task.h"

namespace ncm {

struct TripleSummary {
  size_t count = 0;
  EditCounts counts;  // hypotheses scored against references
  double hypothesis_cer = 0.0;
};

// For each utterance, decodes a copy of its frames with fresh additive
// N(0, triple_noise_sigma^2) noise (beam triple_beam_size) and stores the
// 1-best as `hyp` next to the clean frames and the reference tokens. The
// noise for utterance i depends only on (noise_seed, i).
std::vector<Utterance> MakeTriples(const Model &asr,
                                   std::span<const Utterance> corpus,
                                   const TaskSpec &spec, uint64_t noise_seed,
                                   int workers = 1,
                                   TripleSummary *summary = nullptr);

}  // namespace ncm

#endif  // NCM_SYNTHDATA_TRIPLES_H_
