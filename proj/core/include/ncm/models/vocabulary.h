// ncm/models/vocabulary.h

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

#ifndef NCM_MODELS_VOCABULARY_H_
#define NCM_MODELS_VOCABULARY_H_

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace ncm {

// Token strings <-> contiguous ids. Ids 0..3 are reserved; content symbols
// follow from id 4.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kSep = 3;
  static constexpr int kNumReserved = 4;

  // Content symbols "a".."z" for the first 26, then "c26", "c27", ...
  explicit Vocabulary(int num_content = 26);
  explicit Vocabulary(std::vector<std::string> content_symbols);

  int size() const { return static_cast<int>(symbols_.size()); }
  int num_content() const { return size() - kNumReserved; }
  bool IsContent(int id) const { return id >= kNumReserved && id < size(); }

  int Id(const std::string &symbol) const;
  const std::string &Symbol(int id) const;

  // Concatenated symbols of content ids; reserved ids are rejected.
  std::string Render(std::span<const int> ids) const;

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> ids_;
};

}  // namespace ncm

#endif  // NCM_MODELS_VOCABULARY_H_
