// layers/embedding.cc

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

#include "ncm/layers/embedding.h"

#include <cmath>

#include "ncm/common/error.h"
#include "ncm/numerics/ops.h"

namespace ncm {

namespace {

double PositionalValue(int64_t pos, int64_t col, int d_model) {
  const int64_t i = col / 2;
  const double angle =
      static_cast<double>(pos) /
      std::pow(10000.0, 2.0 * static_cast<double>(i) / d_model);
  return col % 2 == 0 ? std::sin(angle) : std::cos(angle);
}

}  // namespace

Tensor PositionalEncoding(int64_t length, int d_model) {
  NCM_CHECK(d_model > 0 && d_model % 2 == 0,
            "positional encoding: d_model must be even and positive, got ",
            d_model);
  NCM_CHECK(length >= 0, "positional encoding: negative length ", length);
  std::vector<double> data(length * d_model);
  for (int64_t p = 0; p < length; ++p)
    for (int64_t c = 0; c < d_model; ++c)
      data[p * d_model + c] = PositionalValue(p, c, d_model);
  return Tensor::FromData({length, d_model}, std::move(data));
}

SpeechEmbedding::SpeechEmbedding(ParameterRegistry &registry,
                                 const std::string &prefix, int feature_dim,
                                 int channels, int d_model, Rng &rng)
    : feature_dim_(feature_dim),
      d_model_(d_model),
      proj_(registry, prefix + ".proj",
            static_cast<int>(SubsampledLength(feature_dim)) * channels,
            d_model, rng) {
  NCM_CHECK(feature_dim > 0 && channels > 0,
            "speech embedding: feature_dim and channels must be positive");
  conv1_kernel_ = registry.Add(prefix + ".conv1.kernel",
                               XavierUniform({3, 3, 1, channels}, 9,
                                             9 * channels, rng));
  conv1_bias_ = registry.Add(prefix + ".conv1.bias", Tensor::Zeros({channels}));
  conv2_kernel_ = registry.Add(
      prefix + ".conv2.kernel",
      XavierUniform({3, 3, channels, channels}, 9 * channels, 9 * channels,
                    rng));
  conv2_bias_ = registry.Add(prefix + ".conv2.bias", Tensor::Zeros({channels}));
}

Tensor SpeechEmbedding::Forward(const Tensor &frames) const {
  NCM_CHECK(frames.rank() == 2 && frames.dim(1) == feature_dim_,
            "speech embedding: expected (frames x ", feature_dim_,
            ") features, got ", ShapeToString(frames.shape()));
  const int64_t num_frames = frames.dim(0);
  NCM_CHECK(num_frames >= kMinFrames, "speech embedding: need at least ",
            kMinFrames, " frames, got ", num_frames);
  Tensor x = Reshape(frames, {num_frames, feature_dim_, 1});
  x = Relu(Conv2d(x, conv1_kernel_, conv1_bias_, 2));
  x = Relu(Conv2d(x, conv2_kernel_, conv2_bias_, 2));
  const int64_t out_frames = x.dim(0);
  x = Reshape(x, {out_frames, x.dim(1) * x.dim(2)});
  return Add(proj_.Forward(x), PositionalEncoding(out_frames, d_model_));
}

TextEmbedding::TextEmbedding(ParameterRegistry &registry,
                             const std::string &prefix, int vocab_size,
                             int d_model, Rng &rng)
    : d_model_(d_model) {
  NCM_CHECK(vocab_size > 0, "text embedding: vocab_size must be positive");
  table_ = registry.Add(
      prefix + ".table",
      NormalInit({vocab_size, d_model}, 1.0 / std::sqrt(d_model), rng));
}

Tensor TextEmbedding::Lookup(std::span<const int> tokens) const {
  if (tokens.empty()) return Tensor::Zeros({0, d_model_});
  return Scale(EmbeddingLookup(table_, tokens), std::sqrt(d_model_));
}

Tensor TextEmbedding::Forward(std::span<const int> tokens) const {
  if (tokens.empty()) return Tensor::Zeros({0, d_model_});
  return Add(Lookup(tokens),
             PositionalEncoding(static_cast<int64_t>(tokens.size()), d_model_));
}

Tensor TextEmbedding::ForwardAt(int token, int64_t position) const {
  std::vector<double> pe(d_model_);
  for (int64_t c = 0; c < d_model_; ++c)
    pe[c] = PositionalValue(position, c, d_model_);
  const int ids[1] = {token};
  return Add(Lookup(ids), Tensor::FromData({1, d_model_}, std::move(pe)));
}

}  // namespace ncm
