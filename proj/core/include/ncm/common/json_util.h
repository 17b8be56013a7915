// ncm/common/json_util.h

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

#ifndef NCM_COMMON_JSON_UTIL_H_
#define NCM_COMMON_JSON_UTIL_H_

#include <initializer_list>
#include <string>
#include <type_traits>

#include <nlohmann/json.hpp>

#include "ncm/common/error.h"

namespace ncm {

// Rejects keys of object `j` outside `allowed`; `section` prefixes messages.
inline void CheckKeys(const nlohmann::json &j, const std::string &section,
                      std::initializer_list<const char *> allowed) {
  NCM_CHECK(j.is_object(), section, ": expected a JSON object, got ",
            j.type_name());
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char *k : allowed) known |= it.key() == k;
    NCM_CHECK(known, section, ": unknown key '", it.key(), "'");
  }
}

// Reads `key` into `out` when present; leaves the default otherwise.
template <typename T>
void ReadField(const nlohmann::json &j, const std::string &section,
               const char *key, T &out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  bool ok = true;
  if constexpr (std::is_same_v<T, bool>)
    ok = it->is_boolean();
  else if constexpr (std::is_integral_v<T>)
    ok = it->is_number_integer();
  else if constexpr (std::is_floating_point_v<T>)
    ok = it->is_number();
  else if constexpr (std::is_same_v<T, std::string>)
    ok = it->is_string();
  if (!ok)
    throw ValidationError(section + "." + key + ": wrong type (" + it->dump() +
                          ")");
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception &) {
    throw ValidationError(section + "." + key + ": wrong type (" + it->dump() +
                          ")");
  }
}

}  // namespace ncm

#endif  // NCM_COMMON_JSON_UTIL_H_
