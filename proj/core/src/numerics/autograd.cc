// numerics/autograd.cc

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

#include "ncm/numerics/autograd.h"

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ncm/common/error.h"

namespace ncm {

namespace {

using internal::TensorImpl;

// Post-order over the graph rooted at `root`: every tensor appears after all
// of its inputs.
std::vector<TensorImpl *> TopologicalOrder(TensorImpl *root) {
  std::vector<TensorImpl *> order;
  std::unordered_set<TensorImpl *> visited;
  std::vector<std::pair<TensorImpl *, size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto &[impl, next] = stack.back();
    const size_t num_inputs = impl->node ? impl->node->inputs.size() : 0;
    if (next < num_inputs) {
      TensorImpl *child = impl->node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second)
        stack.emplace_back(child, 0);
    } else {
      order.push_back(impl);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace

void Backward(const Tensor &loss) {
  NCM_CHECK(loss.defined() && loss.numel() == 1,
            "backward: loss must be a scalar, got shape ",
            loss.defined() ? ShapeToString(loss.shape()) : "<undefined>");
  TensorImpl *root = loss.impl().get();
  NCM_CHECK(root->requires_grad,
            "backward: loss does not depend on any tensor requiring grad");
  NCM_CHECK(!root->backward_done,
            "backward: this graph was already swept; rebuild the forward "
            "pass and zero gradients explicitly to accumulate again");
  std::vector<TensorImpl *> order = TopologicalOrder(root);
  root->GradBuffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl *impl = *it;
    if (!impl->node || impl->grad.empty()) continue;
    impl->node->backward(impl->grad, impl->data);
  }
  root->backward_done = true;
}

double GradCheck(const std::function<Tensor(const Tensor &)> &f, Tensor x,
                 double h) {
  NCM_CHECK(h >= 1e-7 && h <= 1e-3, "grad-check: step ", h,
            " outside [1e-7, 1e-3]");
  NCM_CHECK(x.defined() && !x.impl()->node,
            "grad-check: x must be a leaf tensor");
  x.impl()->requires_grad = true;
  x.ZeroGrad();
  Tensor y = f(x);
  NCM_CHECK(y.defined() && y.numel() == 1,
            "grad-check: f must return a scalar, got shape ",
            y.defined() ? ShapeToString(y.shape()) : "<undefined>");
  Backward(y);
  std::vector<double> analytic(x.numel(), 0.0);
  if (x.has_grad())
    std::copy(x.grad().begin(), x.grad().end(), analytic.begin());
  x.ZeroGrad();

  NoGradGuard no_grad;
  auto values = x.mutable_data();
  double worst = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + h;
    const double plus = f(x).item();
    values[i] = saved - h;
    const double minus = f(x).item();
    values[i] = saved;
    const double numeric = (plus - minus) / (2.0 * h);
    const double denom =
        std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace ncm
