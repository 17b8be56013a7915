// ncm/numerics/random.h

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

#ifndef NCM_NUMERICS_RANDOM_H_
#define NCM_NUMERICS_RANDOM_H_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ncm {

// All stochastic code draws from explicitly passed streams of this type.
using Rng = std::mt19937_64;

// Mixes a base seed with stream labels into an independent 64-bit seed
// (splitmix64 finalizer applied per label).
uint64_t DeriveSeed(uint64_t base, std::initializer_list<uint64_t> labels);

inline Rng MakeRng(uint64_t base, std::initializer_list<uint64_t> labels) {
  return Rng(DeriveSeed(base, labels));
}

}  // namespace ncm

#endif  // NCM_NUMERICS_RANDOM_H_
