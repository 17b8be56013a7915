// numerics/tensor.cc

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

#include "ncm/numerics/tensor.h"

#include <sstream>

#include "ncm/common/error.h"

namespace ncm {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

int64_t NumElements(const Shape &shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

std::string ShapeToString(const Shape &shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::span<double> internal::TensorImpl::GradBuffer() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
  return grad;
}

Tensor Tensor::Zeros(const Shape &shape, bool requires_grad) {
  return FromData(shape, std::vector<double>(NumElements(shape), 0.0),
                  requires_grad);
}

Tensor Tensor::Filled(const Shape &shape, double value) {
  return FromData(shape, std::vector<double>(NumElements(shape), value));
}

Tensor Tensor::FromData(const Shape &shape, std::vector<double> data,
                        bool requires_grad) {
  for (int64_t d : shape)
    NCM_CHECK(d >= 0, "tensor: negative dimension in shape ",
              ShapeToString(shape));
  NCM_CHECK(NumElements(shape) == static_cast<int64_t>(data.size()),
            "tensor: shape ", ShapeToString(shape), " needs ",
            NumElements(shape), " values, got ", data.size());
  auto impl = std::make_shared<internal::TensorImpl>();
  impl->shape = shape;
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::Scalar(double value) { return FromData({}, {value}); }

const Shape &Tensor::shape() const {
  NCM_CHECK(impl_, "tensor: use of undefined tensor");
  return impl_->shape;
}

int64_t Tensor::dim(int axis) const {
  const Shape &s = shape();
  if (axis < 0) axis += static_cast<int>(s.size());
  NCM_CHECK(axis >= 0 && axis < static_cast<int>(s.size()),
            "tensor: axis ", axis, " out of range for shape ",
            ShapeToString(s));
  return s[axis];
}

int64_t Tensor::numel() const { return NumElements(shape()); }

std::span<const double> Tensor::data() const {
  NCM_CHECK(impl_, "tensor: use of undefined tensor");
  return impl_->data;
}

std::span<double> Tensor::mutable_data() {
  NCM_CHECK(impl_, "tensor: use of undefined tensor");
  return impl_->data;
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  NCM_CHECK(impl_, "tensor: use of undefined tensor");
  return impl_->grad;
}

std::span<double> Tensor::mutable_grad() {
  NCM_CHECK(impl_, "tensor: use of undefined tensor");
  return impl_->GradBuffer();
}

void Tensor::ZeroGrad() {
  if (impl_) impl_->grad.clear();
}

double Tensor::item() const {
  NCM_CHECK(numel() == 1, "tensor: item() on shape ",
            ShapeToString(shape()));
  return impl_->data[0];
}

double Tensor::at(int64_t row, int64_t col) const {
  NCM_CHECK(rank() == 2, "tensor: at(row, col) on shape ",
            ShapeToString(shape()));
  return impl_->data[row * impl_->shape[1] + col];
}

Tensor Tensor::Detach() const {
  auto impl = std::make_shared<internal::TensorImpl>();
  impl->shape = shape();
  impl->data = impl_->data;
  return Tensor(std::move(impl));
}

Tensor Tensor::Clone(bool requires_grad) const {
  Tensor t = Detach();
  t.impl_->requires_grad = requires_grad;
  return t;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool GradModeEnabled() { return g_grad_enabled; }

}  // namespace ncm
