// ncm/numerics/ops.h

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

#ifndef NCM_NUMERICS_OPS_H_
#define NCM_NUMERICS_OPS_H_

#include <cstdint>
#include <span>
#include <vector>

#include "ncm/numerics/tensor.h"

// Differentiable primitives. Every function returns a fresh tensor; when any
// input requires a gradient (and grad mode is on) the result is linked into
// the graph with its backward rule. There is no implicit broadcasting: the
// only broadcasts are the ones spelled out in a primitive's name or attrs.
namespace ncm {

// Boolean array used by MaskedFill. Its shape must equal the trailing
// dimensions of the filled tensor; leading dimensions are broadcast.
struct BoolMask {
  Shape shape;
  std::vector<uint8_t> values;
};

// (m x k) . (k x n) -> (m x n).
Tensor MatMul(const Tensor &a, const Tensor &b);
Tensor Add(const Tensor &a, const Tensor &b);
// Adds a rank-1 `bias` over the last axis of `a`.
Tensor AddBias(const Tensor &a, const Tensor &bias);
Tensor Mul(const Tensor &a, const Tensor &b);
Tensor Scale(const Tensor &a, double factor);
Tensor Concat(std::span<const Tensor> parts, int axis);
Tensor Slice(const Tensor &a, int axis, int64_t begin, int64_t length);
std::vector<Tensor> Split(const Tensor &a, int axis,
                          std::span<const int64_t> sizes);
// Rank-2 transpose.
Tensor Transpose(const Tensor &a);
Tensor Softmax(const Tensor &a);
Tensor LogSoftmax(const Tensor &a);
Tensor Log(const Tensor &a);
Tensor Relu(const Tensor &a);
// Normalizes over the last axis; `gain` and `bias` are rank-1.
Tensor LayerNorm(const Tensor &x, const Tensor &gain, const Tensor &bias,
                 double eps = 1e-5);
// Rows of `table` (V x d) selected by `ids` -> (n x d).
Tensor EmbeddingLookup(const Tensor &table, std::span<const int> ids);
Tensor Reshape(const Tensor &a, const Shape &shape);
Tensor MaskedFill(const Tensor &a, const BoolMask &fill_where, double value);
Tensor ReduceSum(const Tensor &a);
Tensor ReduceMean(const Tensor &a);
// Channels-last 2-D convolution with "same" padding.
//   input  (H x W x Cin), kernel (kh x kw x Cin x Cout), bias (Cout)
//   output (ceil(H/stride) x ceil(W/stride) x Cout)
Tensor Conv2d(const Tensor &input, const Tensor &kernel, const Tensor &bias,
              int stride);

}  // namespace ncm

#endif  // NCM_NUMERICS_OPS_H_
