// ncm/numerics/tensor.h

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

#ifndef NCM_NUMERICS_TENSOR_H_
#define NCM_NUMERICS_TENSOR_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ncm {

using Shape = std::vector<int64_t>;

int64_t NumElements(const Shape &shape);
std::string ShapeToString(const Shape &shape);

namespace internal {

struct TensorImpl;

// One recorded primitive application. The backward rule receives the
// gradient and value of the primitive's output and accumulates into the
// gradients of `inputs`.
struct Node {
  const char *primitive = "";
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  std::function<void(std::span<const double> out_grad,
                     std::span<const double> out_data)>
      backward;
};

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until the first accumulation
  bool requires_grad = false;
  bool backward_done = false;
  std::shared_ptr<Node> node;  // null for leaves and constants

  // Returns the gradient buffer, allocating zeros on first use.
  std::span<double> GradBuffer();
};

}  // namespace internal

// Dense row-major array of doubles with an optional gradient slot. Copies are
// shallow: two Tensor values may refer to the same storage, which is how
// parameters are shared between a model and its optimizer.
class Tensor {
 public:
  Tensor() = default;

  static Tensor Zeros(const Shape &shape, bool requires_grad = false);
  static Tensor Filled(const Shape &shape, double value);
  static Tensor FromData(const Shape &shape, std::vector<double> data,
                         bool requires_grad = false);
  static Tensor Scalar(double value);

  bool defined() const { return impl_ != nullptr; }
  const Shape &shape() const;
  int rank() const { return static_cast<int>(shape().size()); }
  int64_t dim(int axis) const;
  int64_t numel() const;

  std::span<const double> data() const;
  // Direct write access; only for leaves (parameters, inputs) that are not
  // yet part of a recorded graph.
  std::span<double> mutable_data();

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void ZeroGrad();

  double item() const;
  double at(int64_t row, int64_t col) const;

  // A leaf with the same values and no graph history.
  Tensor Detach() const;
  // A deep copy with its own storage and no graph history.
  Tensor Clone(bool requires_grad = false) const;

  bool SameStorage(const Tensor &other) const { return impl_ == other.impl_; }

  const std::shared_ptr<internal::TensorImpl> &impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<internal::TensorImpl> impl)
      : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<internal::TensorImpl> impl_;
};

// Thread-local switch: while a guard is alive, primitives record no graph.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard &) = delete;
  NoGradGuard &operator=(const NoGradGuard &) = delete;

 private:
  bool previous_;
};

bool GradModeEnabled();

}  // namespace ncm

#endif  // NCM_NUMERICS_TENSOR_H_
