// ncm/common/error.h

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

#ifndef NCM_COMMON_ERROR_H_
#define NCM_COMMON_ERROR_H_

#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace ncm {

// Raised when inputs violate a documented precondition (bad shapes, bad
// config fields, malformed files). The CLI maps it to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string &what)
      : std::invalid_argument(what) {}
};

// Raised when a well-formed computation fails while running (divergence,
// I/O failure). The CLI maps it to exit code 2.
class RuntimeFailure : public std::runtime_error {
 public:
  explicit RuntimeFailure(const std::string &what)
      : std::runtime_error(what) {}
};

namespace internal {

template <typename... Args>
std::string StrCat(Args &&...args) {
  std::ostringstream os;
  (os << ... << std::forward<Args>(args));
  return os.str();
}

}  // namespace internal

#define NCM_CHECK(cond, ...)                                       \
  do {                                                             \
    if (!(cond))                                                   \
      throw ::ncm::ValidationError(::ncm::internal::StrCat(__VA_ARGS__)); \
  } while (0)

}  // namespace ncm

#endif  // NCM_COMMON_ERROR_H_
