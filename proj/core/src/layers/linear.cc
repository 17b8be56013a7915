// layers/linear.cc

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

#include "ncm/layers/linear.h"

#include <cmath>

#include "ncm/numerics/ops.h"

namespace ncm {

Tensor XavierUniform(const Shape &shape, int64_t fan_in, int64_t fan_out,
                     Rng &rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> uniform(-a, a);
  std::vector<double> data(NumElements(shape));
  for (double &v : data) v = uniform(rng);
  return Tensor::FromData(shape, std::move(data));
}

Tensor NormalInit(const Shape &shape, double stddev, Rng &rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  std::vector<double> data(NumElements(shape));
  for (double &v : data) v = normal(rng);
  return Tensor::FromData(shape, std::move(data));
}

Linear::Linear(ParameterRegistry &registry, const std::string &prefix, int in,
               int out, Rng &rng, LinearInit init) {
  Tensor w = init == LinearInit::kXavier ? XavierUniform({in, out}, in, out, rng)
                                         : Tensor::Zeros({in, out});
  weight_ = registry.Add(prefix + ".weight", w);
  bias_ = registry.Add(prefix + ".bias", Tensor::Zeros({out}));
}

Tensor Linear::Forward(const Tensor &x) const {
  return AddBias(MatMul(x, weight_), bias_);
}

LayerNormLayer::LayerNormLayer(ParameterRegistry &registry,
                               const std::string &prefix, int dim) {
  gain_ = registry.Add(prefix + ".gain", Tensor::Filled({dim}, 1.0));
  bias_ = registry.Add(prefix + ".bias", Tensor::Zeros({dim}));
}

Tensor LayerNormLayer::Forward(const Tensor &x) const {
  return LayerNorm(x, gain_, bias_, 1e-5);
}

FeedForward::FeedForward(ParameterRegistry &registry, const std::string &prefix,
                         const LayerConfig &config, Rng &rng)
    : in_(registry, prefix + ".in", config.d_model, config.ffn_dim, rng),
      out_(registry, prefix + ".out", config.ffn_dim, config.d_model, rng),
      dropout_(config.dropout) {}

Tensor FeedForward::Forward(const Tensor &x, const ForwardContext &ctx) const {
  return out_.Forward(Dropout(Relu(in_.Forward(x)), dropout_, ctx));
}

}  // namespace ncm
