// ncm/numerics/autograd.h

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

#ifndef NCM_NUMERICS_AUTOGRAD_H_
#define NCM_NUMERICS_AUTOGRAD_H_

#include <functional>

#include "ncm/numerics/tensor.h"

namespace ncm {

// Reverse sweep from a scalar loss. Each graph node is visited once, in
// reverse topological order, and gradients are accumulated (never reset) into
// every reachable tensor that requires one. A loss can be swept only once.
void Backward(const Tensor &loss);

// Compares the analytic gradient of the scalar function `f` with respect to
// `x` against central differences with step `h`. `f` is called with `x`
// itself; it may also capture `x` (e.g. a model parameter perturbed in place).
// Returns max_i |analytic_i - numeric_i| / max(1, |analytic_i|, |numeric_i|).
// Any gradient already stored on `x` is discarded.
double GradCheck(const std::function<Tensor(const Tensor &)> &f, Tensor x,
                 double h = 1e-5);

}  // namespace ncm

#endif  // NCM_NUMERICS_AUTOGRAD_H_
