// ncm/layers/linear.h

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

#ifndef NCM_LAYERS_LINEAR_H_
#define NCM_LAYERS_LINEAR_H_

#include <string>

#include "ncm/layers/layer_config.h"
#include "ncm/numerics/optimizer.h"

namespace ncm {

// Glorot/Xavier uniform: U(-a, a), a = sqrt(6 / (fan_in + fan_out)).
Tensor XavierUniform(const Shape &shape, int64_t fan_in, int64_t fan_out,
                     Rng &rng);
Tensor NormalInit(const Shape &shape, double stddev, Rng &rng);

enum class LinearInit { kXavier, kZero };

// y = x W + b with W (in x out).
class Linear {
 public:
  Linear(ParameterRegistry &registry, const std::string &prefix, int in,
         int out, Rng &rng, LinearInit init = LinearInit::kXavier);

  Tensor Forward(const Tensor &x) const;

  const Tensor &weight() const { return weight_; }
  const Tensor &bias() const { return bias_; }

 private:
  Tensor weight_;
  Tensor bias_;
};

class LayerNormLayer {
 public:
  LayerNormLayer(ParameterRegistry &registry, const std::string &prefix,
                 int dim);
  Tensor Forward(const Tensor &x) const;

 private:
  Tensor gain_;
  Tensor bias_;
};

// Position-wise two-layer network with ReLU and dropout on the hidden layer.
class FeedForward {
 public:
  FeedForward(ParameterRegistry &registry, const std::string &prefix,
              const LayerConfig &config, Rng &rng);
  Tensor Forward(const Tensor &x, const ForwardContext &ctx) const;

 private:
  Linear in_;
  Linear out_;
  double dropout_;
};

}  // namespace ncm

#endif  // NCM_LAYERS_LINEAR_H_
