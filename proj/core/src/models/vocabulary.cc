// models/vocabulary.cc

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

#include "ncm/models/vocabulary.h"

#include "ncm/common/error.h"

namespace ncm {

namespace {

std::vector<std::string> DefaultSymbols(int n) {
  NCM_CHECK(n > 0, "vocabulary: need at least one content symbol, got ", n);
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i)
    out.push_back(i < 26 ? std::string(1, static_cast<char>('a' + i))
                         : "c" + std::to_string(i));
  return out;
}

}  // namespace

Vocabulary::Vocabulary(int num_content) : Vocabulary(DefaultSymbols(num_content)) {}

Vocabulary::Vocabulary(std::vector<std::string> content_symbols) {
  symbols_ = {"<pad>", "<s>", "</s>", "<sep>"};
  for (auto &s : content_symbols) symbols_.push_back(std::move(s));
  for (int i = 0; i < size(); ++i) {
    NCM_CHECK(!symbols_[i].empty(), "vocabulary: empty symbol at id ", i);
    NCM_CHECK(ids_.emplace(symbols_[i], i).second,
              "vocabulary: duplicate symbol '", symbols_[i], "'");
  }
}

int Vocabulary::Id(const std::string &symbol) const {
  auto it = ids_.find(symbol);
  NCM_CHECK(it != ids_.end(), "vocabulary: unknown symbol '", symbol, "'");
  return it->second;
}

const std::string &Vocabulary::Symbol(int id) const {
  NCM_CHECK(id >= 0 && id < size(), "vocabulary: id ", id,
            " out of range [0, ", size(), ")");
  return symbols_[id];
}

std::string Vocabulary::Render(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    NCM_CHECK(IsContent(id), "vocabulary: cannot render non-content id ", id);
    out += symbols_[id];
  }
  return out;
}

}  // namespace ncm
