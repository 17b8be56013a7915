// ncm/training/grad_suite.h

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

#ifndef NCM_TRAINING_GRAD_SUITE_H_
#define NCM_TRAINING_GRAD_SUITE_H_

#include <cstdint>
#include <string>
#include <vector>

namespace ncm {

struct GradSuiteEntry {
  std::string group;  // "primitive", "layer" or "model"
  std::string name;
  double max_relative_error = 0.0;
  int tensors_checked = 0;
};

// Finite-difference checks of every primitive, every layer (inputs and
// parameters) and the mean cross-entropy of each architecture on a
// two-utterance micro-batch.
std::vector<GradSuiteEntry> RunGradSuite(uint64_t seed = 1);

}  // namespace ncm

#endif  // NCM_TRAINING_GRAD_SUITE_H_
