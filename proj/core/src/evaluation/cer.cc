// evaluation/cer.cc

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

#include "ncm/evaluation/cer.h"

#include <algorithm>

namespace ncm {

EditCounts &EditCounts::operator+=(const EditCounts &o) {
  substitutions += o.substitutions;
  insertions += o.insertions;
  deletions += o.deletions;
  ref_len += o.ref_len;
  return *this;
}

EditCounts Align(std::span<const int> reference,
                 std::span<const int> hypothesis) {
  const size_t n = reference.size(), m = hypothesis.size();
  // d[i][j]: distance between reference[0, i) and hypothesis[0, j).
  std::vector<int64_t> d((n + 1) * (m + 1));
  auto at = [&](size_t i, size_t j) -> int64_t & { return d[i * (m + 1) + j]; };
  for (size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<int64_t>(i);
  for (size_t j = 0; j <= m; ++j) at(0, j) = static_cast<int64_t>(j);
  for (size_t i = 1; i <= n; ++i)
    for (size_t j = 1; j <= m; ++j)
      at(i, j) = std::min({at(i - 1, j - 1) +
                               (reference[i - 1] != hypothesis[j - 1]),
                           at(i, j - 1) + 1, at(i - 1, j) + 1});
  EditCounts c;
  c.ref_len = static_cast<int64_t>(n);
  size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        at(i, j) == at(i - 1, j - 1) + (reference[i - 1] != hypothesis[j - 1])) {
      c.substitutions += reference[i - 1] != hypothesis[j - 1];
      --i;
      --j;
    } else if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
      ++c.insertions;
      --j;
    } else {
      ++c.deletions;
      --i;
    }
  }
  return c;
}

void CerReport::Add(std::string id, std::vector<int> reference,
                    std::vector<int> hypothesis) {
  if (reference.empty()) {
    ++skipped_empty_;
    return;
  }
  EditCounts counts = Align(reference, hypothesis);
  utts_.push_back({std::move(id), std::move(reference), std::move(hypothesis),
                   counts});
}

EditCounts CerReport::totals() const {
  EditCounts t;
  for (const UtteranceScore &u : utts_) t += u.counts;
  return t;
}

double CerReport::cer() const {
  EditCounts t = totals();
  return t.ref_len == 0 ? 0.0
                        : static_cast<double>(t.errors()) /
                              static_cast<double>(t.ref_len);
}

double CerReport::mean_utterance_cer() const {
  if (utts_.empty()) return 0.0;
  double sum = 0.0;
  for (const UtteranceScore &u : utts_)
    sum += static_cast<double>(u.counts.errors()) /
           static_cast<double>(u.counts.ref_len);
  return sum / static_cast<double>(utts_.size());
}

nlohmann::json CerReport::ToJson() const {
  EditCounts t = totals();
  nlohmann::json utts = nlohmann::json::array();
  for (const UtteranceScore &u : utts_)
    utts.push_back({{"id", u.id},
                    {"ref", u.reference},
                    {"hyp", u.hypothesis},
                    {"sub", u.counts.substitutions},
                    {"ins", u.counts.insertions},
                    {"del", u.counts.deletions},
                    {"ref_len", u.counts.ref_len}});
  return {{"system", label_},
          {"cer", cer()},
          {"mean_utterance_cer", mean_utterance_cer()},
          {"sub", t.substitutions},
          {"ins", t.insertions},
          {"del", t.deletions},
          {"ref_len", t.ref_len},
          {"num_utterances", utts_.size()},
          {"skipped_empty_references", skipped_empty_},
          {"utterances", utts}};
}

}  // namespace ncm
