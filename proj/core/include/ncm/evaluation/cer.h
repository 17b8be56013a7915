// ncm/evaluation/cer.h

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

#ifndef NCM_EVALUATION_CER_H_
#define NCM_EVALUATION_CER_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ncm {

struct EditCounts {
  int64_t substitutions = 0;
  int64_t insertions = 0;
  int64_t deletions = 0;
  int64_t ref_len = 0;

  int64_t errors() const { return substitutions + insertions + deletions; }
  EditCounts &operator+=(const EditCounts &o);
};

// Levenshtein alignment with unit costs. Among minimal alignments the
// backtrace prefers substitution, then insertion, then deletion, which fixes
// the S/I/D split.
EditCounts Align(std::span<const int> reference, std::span<const int> hypothesis);

struct UtteranceScore {
  std::string id;
  std::vector<int> reference;
  std::vector<int> hypothesis;
  EditCounts counts;
};

// Corpus-level character error rate: total edits over total reference
// length. Utterances with empty references are counted in `skipped_empty`
// and left out of the aggregate.
class CerReport {
 public:
  explicit CerReport(std::string label = "") : label_(std::move(label)) {}

  void Add(std::string id, std::vector<int> reference,
           std::vector<int> hypothesis);

  const std::string &label() const { return label_; }
  const std::vector<UtteranceScore> &utterances() const { return utts_; }
  EditCounts totals() const;
  double cer() const;
  // Mean of per-utterance rates; informational only.
  double mean_utterance_cer() const;
  int64_t skipped_empty() const { return skipped_empty_; }

  // Summary plus per-utterance counts and transcripts.
  nlohmann::json ToJson() const;

 private:
  std::string label_;
  std::vector<UtteranceScore> utts_;
  int64_t skipped_empty_ = 0;
};

}  // namespace ncm

#endif  // NCM_EVALUATION_CER_H_
