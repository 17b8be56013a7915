// ncm/layers/embedding.h

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

#ifndef NCM_LAYERS_EMBEDDING_H_
#define NCM_LAYERS_EMBEDDING_H_

#include <span>
#include <string>

#include "ncm/layers/linear.h"

namespace ncm {

// Sinusoidal table: PE(pos, 2i) = sin(pos / 10000^(2i/d)),
// PE(pos, 2i+1) = cos(pos / 10000^(2i/d)). `d_model` must be even.
Tensor PositionalEncoding(int64_t length, int d_model);

// Frames after two stride-2 "same" convolutions.
inline int64_t SubsampledLength(int64_t frames) {
  return ((frames + 1) / 2 + 1) / 2;
}

// Two 3x3 stride-2 convolutions over (time x feature) with ReLU after each,
// flatten per output frame, linear projection to d_model, then positional
// encoding.
class SpeechEmbedding {
 public:
  static constexpr int64_t kMinFrames = 4;

  SpeechEmbedding(ParameterRegistry &registry, const std::string &prefix,
                  int feature_dim, int channels, int d_model, Rng &rng);

  // frames (I x feature_dim) -> (ceil(ceil(I/2)/2) x d_model).
  Tensor Forward(const Tensor &frames) const;

 private:
  int feature_dim_;
  int d_model_;
  Tensor conv1_kernel_, conv1_bias_;
  Tensor conv2_kernel_, conv2_bias_;
  Linear proj_;
};

// Token table lookup scaled by sqrt(d_model); positions restart at 0 for each
// call. An empty sequence yields a (0 x d_model) tensor.
class TextEmbedding {
 public:
  TextEmbedding(ParameterRegistry &registry, const std::string &prefix,
                int vocab_size, int d_model, Rng &rng);

  Tensor Forward(std::span<const int> tokens) const;
  // Scaled lookup without positional encoding.
  Tensor Lookup(std::span<const int> tokens) const;
  // Embeds the token at position `position` (for incremental decoding).
  Tensor ForwardAt(int token, int64_t position) const;

  int vocab_size() const { return static_cast<int>(table_.dim(0)); }
  const Tensor &table() const { return table_; }

 private:
  Tensor table_;
  int d_model_;
};

}  // namespace ncm

#endif  // NCM_LAYERS_EMBEDDING_H_
