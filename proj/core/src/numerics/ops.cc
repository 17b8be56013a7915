// numerics/ops.cc

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

#include "ncm/numerics/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "ncm/common/error.h"

namespace ncm {

namespace {

using internal::Node;
using internal::TensorImpl;
using ImplPtr = std::shared_ptr<TensorImpl>;
using BackwardFn = std::function<void(std::span<const double>,
                                      std::span<const double>)>;

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using MatMap = Eigen::Map<RowMatrix>;

bool Tracks(std::initializer_list<const Tensor *> inputs) {
  if (!GradModeEnabled()) return false;
  for (const Tensor *t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

bool Tracks(std::span<const Tensor> inputs) {
  if (!GradModeEnabled()) return false;
  for (const Tensor &t : inputs)
    if (t.requires_grad()) return true;
  return false;
}

// Gradient sink for an input; empty when the input needs no gradient.
std::span<double> Sink(const ImplPtr &impl) {
  if (!impl->requires_grad) return {};
  return impl->GradBuffer();
}

Tensor Record(const char *primitive, Shape shape, std::vector<double> data,
              std::vector<ImplPtr> inputs, BackwardFn backward) {
  Tensor out = Tensor::FromData(shape, std::move(data));
  auto node = std::make_shared<Node>();
  node->primitive = primitive;
  node->inputs = std::move(inputs);
  node->backward = std::move(backward);
  out.impl()->requires_grad = true;
  out.impl()->node = std::move(node);
  return out;
}

void CheckSameShape(const char *primitive, const Tensor &a, const Tensor &b) {
  NCM_CHECK(a.shape() == b.shape(), primitive, ": shape mismatch ",
            ShapeToString(a.shape()), " vs ", ShapeToString(b.shape()));
}

int NormalizeAxis(const char *primitive, int axis, int rank) {
  if (axis < 0) axis += rank;
  NCM_CHECK(axis >= 0 && axis < rank, primitive, ": axis ", axis,
            " out of range for rank ", rank);
  return axis;
}

int64_t LastDim(const char *primitive, const Tensor &a) {
  NCM_CHECK(a.rank() >= 1, primitive, ": needs rank >= 1, got shape ",
            ShapeToString(a.shape()));
  return a.shape().back();
}

// Product of dims before and after `axis`.
std::pair<int64_t, int64_t> OuterInner(const Shape &s, int axis) {
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= s[i];
  for (size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  return {outer, inner};
}

}  // namespace

Tensor MatMul(const Tensor &a, const Tensor &b) {
  NCM_CHECK(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(0),
            "matmul: shape mismatch ", ShapeToString(a.shape()), " vs ",
            ShapeToString(b.shape()));
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n, 0.0);
  if (m && n && k) {
    MatMap(out.data(), m, n).noalias() =
        ConstMatMap(a.data().data(), m, k) * ConstMatMap(b.data().data(), k, n);
  }
  if (!Tracks({&a, &b})) return Tensor::FromData({m, n}, std::move(out));
  ImplPtr ai = a.impl(), bi = b.impl();
  return Record("matmul", {m, n}, std::move(out), {ai, bi},
                [ai, bi, m, k, n](std::span<const double> g,
                                  std::span<const double>) {
                  if (!m || !n || !k) return;
                  ConstMatMap gm(g.data(), m, n);
                  if (auto ga = Sink(ai); !ga.empty())
                    MatMap(ga.data(), m, k).noalias() +=
                        gm * ConstMatMap(bi->data.data(), k, n).transpose();
                  if (auto gb = Sink(bi); !gb.empty())
                    MatMap(gb.data(), k, n).noalias() +=
                        ConstMatMap(ai->data.data(), m, k).transpose() * gm;
                });
}

Tensor Add(const Tensor &a, const Tensor &b) {
  CheckSameShape("add", a, b);
  std::vector<double> out(a.data().begin(), a.data().end());
  auto bd = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] += bd[i];
  if (!Tracks({&a, &b})) return Tensor::FromData(a.shape(), std::move(out));
  ImplPtr ai = a.impl(), bi = b.impl();
  return Record("add", a.shape(), std::move(out), {ai, bi},
                [ai, bi](std::span<const double> g, std::span<const double>) {
                  for (const ImplPtr &p : {ai, bi})
                    if (auto s = Sink(p); !s.empty())
                      for (size_t i = 0; i < g.size(); ++i) s[i] += g[i];
                });
}

Tensor AddBias(const Tensor &a, const Tensor &bias) {
  const int64_t n = LastDim("add-bias", a);
  NCM_CHECK(bias.rank() == 1 && bias.dim(0) == n, "add-bias: shape mismatch ",
            ShapeToString(a.shape()), " vs ", ShapeToString(bias.shape()));
  std::vector<double> out(a.data().begin(), a.data().end());
  auto bd = bias.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] += bd[i % n];
  if (!Tracks({&a, &bias}))
    return Tensor::FromData(a.shape(), std::move(out));
  ImplPtr ai = a.impl(), bi = bias.impl();
  return Record("add-bias", a.shape(), std::move(out), {ai, bi},
                [ai, bi, n](std::span<const double> g,
                            std::span<const double>) {
                  if (auto s = Sink(ai); !s.empty())
                    for (size_t i = 0; i < g.size(); ++i) s[i] += g[i];
                  if (auto s = Sink(bi); !s.empty())
                    for (size_t i = 0; i < g.size(); ++i) s[i % n] += g[i];
                });
}

Tensor Mul(const Tensor &a, const Tensor &b) {
  CheckSameShape("mul", a, b);
  std::vector<double> out(a.data().begin(), a.data().end());
  auto bd = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] *= bd[i];
  if (!Tracks({&a, &b})) return Tensor::FromData(a.shape(), std::move(out));
  ImplPtr ai = a.impl(), bi = b.impl();
  return Record("mul", a.shape(), std::move(out), {ai, bi},
                [ai, bi](std::span<const double> g, std::span<const double>) {
                  if (auto s = Sink(ai); !s.empty())
                    for (size_t i = 0; i < g.size(); ++i)
                      s[i] += g[i] * bi->data[i];
                  if (auto s = Sink(bi); !s.empty())
                    for (size_t i = 0; i < g.size(); ++i)
                      s[i] += g[i] * ai->data[i];
                });
}

Tensor Scale(const Tensor &a, double factor) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double &v : out) v *= factor;
  if (!Tracks({&a})) return Tensor::FromData(a.shape(), std::move(out));
  ImplPtr ai = a.impl();
  return Record("scale", a.shape(), std::move(out), {ai},
                [ai, factor](std::span<const double> g,
                             std::span<const double>) {
                  auto s = Sink(ai);
                  for (size_t i = 0; i < g.size(); ++i) s[i] += g[i] * factor;
                });
}

Tensor Concat(std::span<const Tensor> parts, int axis) {
  NCM_CHECK(!parts.empty(), "concat: no inputs");
  const Shape &first = parts[0].shape();
  const int rank = static_cast<int>(first.size());
  axis = NormalizeAxis("concat", axis, rank);
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Tensor &p : parts) {
    Shape expect = first;
    expect[axis] = p.shape().size() == first.size() ? p.shape()[axis] : -1;
    NCM_CHECK(p.shape() == expect, "concat: shape mismatch ",
              ShapeToString(first), " vs ", ShapeToString(p.shape()),
              " along axis ", axis);
    out_shape[axis] += p.shape()[axis];
  }
  auto [outer, inner] = OuterInner(out_shape, axis);
  const int64_t out_chunk = out_shape[axis] * inner;
  std::vector<double> out(NumElements(out_shape));
  std::vector<int64_t> offsets;
  int64_t offset = 0;
  for (const Tensor &p : parts) {
    const int64_t chunk = p.shape()[axis] * inner;
    auto pd = p.data();
    for (int64_t o = 0; o < outer; ++o)
      std::copy_n(pd.begin() + o * chunk, chunk,
                  out.begin() + o * out_chunk + offset);
    offsets.push_back(offset);
    offset += chunk;
  }
  if (!Tracks(parts)) return Tensor::FromData(out_shape, std::move(out));
  std::vector<ImplPtr> impls;
  for (const Tensor &p : parts) impls.push_back(p.impl());
  return Record(
      "concat", out_shape, std::move(out), impls,
      [impls, offsets, outer = outer, inner = inner, out_chunk, axis](
          std::span<const double> g, std::span<const double>) {
        for (size_t k = 0; k < impls.size(); ++k) {
          auto s = Sink(impls[k]);
          if (s.empty()) continue;
          const int64_t chunk = impls[k]->shape[axis] * inner;
          for (int64_t o = 0; o < outer; ++o)
            for (int64_t i = 0; i < chunk; ++i)
              s[o * chunk + i] += g[o * out_chunk + offsets[k] + i];
        }
      });
}

Tensor Slice(const Tensor &a, int axis, int64_t begin, int64_t length) {
  const Shape &in_shape = a.shape();
  axis = NormalizeAxis("slice", axis, a.rank());
  NCM_CHECK(begin >= 0 && length >= 0 && begin + length <= in_shape[axis],
            "slice: range [", begin, ", ", begin + length,
            ") out of bounds for shape ", ShapeToString(in_shape),
            " axis ", axis);
  Shape out_shape = in_shape;
  out_shape[axis] = length;
  auto [outer, inner] = OuterInner(in_shape, axis);
  const int64_t in_chunk = in_shape[axis] * inner;
  const int64_t chunk = length * inner;
  const int64_t offset = begin * inner;
  std::vector<double> out(NumElements(out_shape));
  auto ad = a.data();
  for (int64_t o = 0; o < outer; ++o)
    std::copy_n(ad.begin() + o * in_chunk + offset, chunk,
                out.begin() + o * chunk);
  if (!Tracks({&a})) return Tensor::FromData(out_shape, std::move(out));
  ImplPtr ai = a.impl();
  return Record("slice", out_shape, std::move(out), {ai},
                [ai, outer = outer, in_chunk, chunk, offset](
                    std::span<const double> g, std::span<const double>) {
                  auto s = Sink(ai);
                  for (int64_t o = 0; o < outer; ++o)
                    for (int64_t i = 0; i < chunk; ++i)
                      s[o * in_chunk + offset + i] += g[o * chunk + i];
                });
}

std::vector<Tensor> Split(const Tensor &a, int axis,
                          std::span<const int64_t> sizes) {
  axis = NormalizeAxis("split", axis, a.rank());
  int64_t total = 0;
  for (int64_t s : sizes) total += s;
  NCM_CHECK(total == a.shape()[axis], "split: sizes sum to ", total,
            " but shape ", ShapeToString(a.shape()), " has ",
            a.shape()[axis], " along axis ", axis);
  std::vector<Tensor> pieces;
  int64_t begin = 0;
  for (int64_t s : sizes) {
    pieces.push_back(Slice(a, axis, begin, s));
    begin += s;
  }
  return pieces;
}

Tensor Transpose(const Tensor &a) {
  NCM_CHECK(a.rank() == 2, "transpose: needs rank 2, got shape ",
            ShapeToString(a.shape()));
  const int64_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n);
  auto ad = a.data();
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) out[j * m + i] = ad[i * n + j];
  if (!Tracks({&a})) return Tensor::FromData({n, m}, std::move(out));
  ImplPtr ai = a.impl();
  return Record("transpose", {n, m}, std::move(out), {ai},
                [ai, m, n](std::span<const double> g,
                           std::span<const double>) {
                  auto s = Sink(ai);
                  for (int64_t i = 0; i < m; ++i)
                    for (int64_t j = 0; j < n; ++j)
                      s[i * n + j] += g[j * m + i];
                });
}

Tensor Softmax(const Tensor &a) {
  const int64_t n = LastDim("softmax", a);
  const int64_t rows = n ? a.numel() / n : 0;
  std::vector<double> out(a.numel());
  auto ad = a.data();
  for (int64_t r = 0; r < rows; ++r) {
    const double *x = ad.data() + r * n;
    double *y = out.data() + r * n;
    const double mx = *std::max_element(x, x + n);
    NCM_CHECK(std::isfinite(mx), "softmax: row ", r,
              " has no finite entry (all keys masked?)");
    double sum = 0.0;
    for (int64_t i = 0; i < n; ++i) sum += (y[i] = std::exp(x[i] - mx));
    for (int64_t i = 0; i < n; ++i) y[i] /= sum;
  }
  if (!Tracks({&a})) return Tensor::FromData(a.shape(), std::move(out));
  ImplPtr ai = a.impl();
  return Record("softmax", a.shape(), std::move(out), {ai},
                [ai, n, rows](std::span<const double> g,
                              std::span<const double> y) {
                  auto s = Sink(ai);
                  for (int64_t r = 0; r < rows; ++r) {
                    const int64_t o = r * n;
                    double dot = 0.0;
                    for (int64_t i = 0; i < n; ++i) dot += g[o + i] * y[o + i];
                    for (int64_t i = 0; i < n; ++i)
                      s[o + i] += y[o + i] * (g[o + i] - dot);
                  }
                });
}

Tensor LogSoftmax(const Tensor &a) {
  const int64_t n = LastDim("log-softmax", a);
  const int64_t rows = n ? a.numel() / n : 0;
  std::vector<double> out(a.numel());
  auto ad = a.data();
  for (int64_t r = 0; r < rows; ++r) {
    const double *x = ad.data() + r * n;
    double *y = out.data() + r * n;
    const double mx = *std::max_element(x, x + n);
    NCM_CHECK(std::isfinite(mx), "log-softmax: row ", r,
              " has no finite entry");
    double sum = 0.0;
    for (int64_t i = 0; i < n; ++i) sum += std::exp(x[i] - mx);
    const double lse = mx + std::log(sum);
    for (int64_t i = 0; i < n; ++i) y[i] = x[i] - lse;
  }
  if (!Tracks({&a})) return Tensor::FromData(a.shape(), std::move(out));
  ImplPtr ai = a.impl();
  return Record("log-softmax", a.shape(), std::move(out), {ai},
                [ai, n, rows](std::span<const double> g,
                              std::span<const double> y) {
                  auto s = Sink(ai);
                  for (int64_t r = 0; r < rows; ++r) {
                    const int64_t o = r * n;
                    double gsum = 0.0;
                    for (int64_t i = 0; i < n; ++i) gsum += g[o + i];
                    for (int64_t i = 0; i < n; ++i)
                      s[o + i] += g[o + i] - std::exp(y[o + i]) * gsum;
                  }
                });
}

Tensor Log(const Tensor &a) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double &v : out) v = std::log(v);
  if (!Tracks({&a})) return Tensor::FromData(a.shape(), std::move(out));
  ImplPtr ai = a.impl();
  return Record("log", a.shape(), std::move(out), {ai},
                [ai](std::span<const double> g, std::span<const double>) {
                  auto s = Sink(ai);
                  for (size_t i = 0; i < g.size(); ++i)
                    s[i] += g[i] / ai->data[i];
                });
}

Tensor Relu(const Tensor &a) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double &v : out) v = v > 0.0 ? v : 0.0;
  if (!Tracks({&a})) return Tensor::FromData(a.shape(), std::move(out));
  ImplPtr ai = a.impl();
  return Record("relu", a.shape(), std::move(out), {ai},
                [ai](std::span<const double> g, std::span<const double>) {
                  auto s = Sink(ai);
                  for (size_t i = 0; i < g.size(); ++i)
                    if (ai->data[i] > 0.0) s[i] += g[i];
                });
}

Tensor LayerNorm(const Tensor &x, const Tensor &gain, const Tensor &bias,
                 double eps) {
  const int64_t n = LastDim("layernorm", x);
  NCM_CHECK(gain.rank() == 1 && gain.dim(0) == n && bias.rank() == 1 &&
                bias.dim(0) == n,
            "layernorm: shape mismatch ", ShapeToString(x.shape()), " vs gain ",
            ShapeToString(gain.shape()), " / bias ",
            ShapeToString(bias.shape()));
  const int64_t rows = n ? x.numel() / n : 0;
  std::vector<double> out(x.numel()), xhat(x.numel()), inv_std(rows);
  auto xd = x.data();
  auto gd = gain.data();
  auto bd = bias.data();
  for (int64_t r = 0; r < rows; ++r) {
    const double *xr = xd.data() + r * n;
    // Shifted by the first element so that constant rows normalize to
    // exactly zero.
    double mean = 0.0;
    for (int64_t i = 0; i < n; ++i) mean += xr[i] - xr[0];
    mean = xr[0] + mean / n;
    double var = 0.0;
    for (int64_t i = 0; i < n; ++i) var += (xr[i] - mean) * (xr[i] - mean);
    var /= n;
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (int64_t i = 0; i < n; ++i) {
      xhat[r * n + i] = (xr[i] - mean) * inv_std[r];
      out[r * n + i] = xhat[r * n + i] * gd[i] + bd[i];
    }
  }
  if (!Tracks({&x, &gain, &bias}))
    return Tensor::FromData(x.shape(), std::move(out));
  ImplPtr xi = x.impl(), gi = gain.impl(), bi = bias.impl();
  return Record(
      "layernorm", x.shape(), std::move(out), {xi, gi, bi},
      [xi, gi, bi, n, rows, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](std::span<const double> g,
                                     std::span<const double>) {
        auto sx = Sink(xi), sg = Sink(gi), sb = Sink(bi);
        std::vector<double> gxhat(n);
        for (int64_t r = 0; r < rows; ++r) {
          const int64_t o = r * n;
          double mean_g = 0.0, mean_gx = 0.0;
          for (int64_t i = 0; i < n; ++i) {
            if (!sg.empty()) sg[i] += g[o + i] * xhat[o + i];
            if (!sb.empty()) sb[i] += g[o + i];
            gxhat[i] = g[o + i] * gi->data[i];
            mean_g += gxhat[i];
            mean_gx += gxhat[i] * xhat[o + i];
          }
          if (sx.empty()) continue;
          mean_g /= n;
          mean_gx /= n;
          for (int64_t i = 0; i < n; ++i)
            sx[o + i] +=
                inv_std[r] * (gxhat[i] - mean_g - xhat[o + i] * mean_gx);
        }
      });
}

Tensor EmbeddingLookup(const Tensor &table, std::span<const int> ids) {
  NCM_CHECK(table.rank() == 2, "embedding-lookup: table must be rank 2, got ",
            ShapeToString(table.shape()));
  const int64_t vocab = table.dim(0), d = table.dim(1);
  const int64_t n = static_cast<int64_t>(ids.size());
  std::vector<double> out(n * d);
  auto td = table.data();
  for (int64_t r = 0; r < n; ++r) {
    NCM_CHECK(ids[r] >= 0 && ids[r] < vocab, "embedding-lookup: id ", ids[r],
              " outside vocabulary of size ", vocab);
    std::copy_n(td.begin() + ids[r] * d, d, out.begin() + r * d);
  }
  if (!Tracks({&table})) return Tensor::FromData({n, d}, std::move(out));
  ImplPtr ti = table.impl();
  std::vector<int> rows(ids.begin(), ids.end());
  return Record("embedding-lookup", {n, d}, std::move(out), {ti},
                [ti, d, rows = std::move(rows)](std::span<const double> g,
                                                std::span<const double>) {
                  auto s = Sink(ti);
                  for (size_t r = 0; r < rows.size(); ++r)
                    for (int64_t i = 0; i < d; ++i)
                      s[rows[r] * d + i] += g[r * d + i];
                });
}

Tensor Reshape(const Tensor &a, const Shape &shape) {
  NCM_CHECK(NumElements(shape) == a.numel(), "reshape: shape mismatch ",
            ShapeToString(a.shape()), " vs ", ShapeToString(shape));
  std::vector<double> out(a.data().begin(), a.data().end());
  if (!Tracks({&a})) return Tensor::FromData(shape, std::move(out));
  ImplPtr ai = a.impl();
  return Record("reshape", shape, std::move(out), {ai},
                [ai](std::span<const double> g, std::span<const double>) {
                  auto s = Sink(ai);
                  for (size_t i = 0; i < g.size(); ++i) s[i] += g[i];
                });
}

Tensor MaskedFill(const Tensor &a, const BoolMask &fill_where, double value) {
  const Shape &s = a.shape();
  const size_t mr = fill_where.shape.size();
  bool ok = mr <= s.size() &&
            NumElements(fill_where.shape) ==
                static_cast<int64_t>(fill_where.values.size());
  for (size_t i = 0; ok && i < mr; ++i)
    ok = fill_where.shape[mr - 1 - i] == s[s.size() - 1 - i];
  NCM_CHECK(ok, "masked-fill: shape mismatch ", ShapeToString(s), " vs mask ",
            ShapeToString(fill_where.shape));
  const size_t period = fill_where.values.size();
  std::vector<double> out(a.data().begin(), a.data().end());
  if (period == 0) return Tensor::FromData(s, std::move(out));
  for (size_t i = 0; i < out.size(); ++i)
    if (fill_where.values[i % period]) out[i] = value;
  if (!Tracks({&a})) return Tensor::FromData(s, std::move(out));
  ImplPtr ai = a.impl();
  return Record("masked-fill", s, std::move(out), {ai},
                [ai, mask = fill_where.values](std::span<const double> g,
                                               std::span<const double>) {
                  auto sink = Sink(ai);
                  const size_t p = mask.size();
                  for (size_t i = 0; i < g.size(); ++i)
                    if (!mask[i % p]) sink[i] += g[i];
                });
}

Tensor ReduceSum(const Tensor &a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  if (!Tracks({&a})) return Tensor::Scalar(total);
  ImplPtr ai = a.impl();
  return Record("reduce-sum", {}, {total}, {ai},
                [ai](std::span<const double> g, std::span<const double>) {
                  auto s = Sink(ai);
                  for (double &v : s) v += g[0];
                });
}

Tensor ReduceMean(const Tensor &a) {
  const int64_t n = a.numel();
  NCM_CHECK(n > 0, "reduce-mean: empty tensor ", ShapeToString(a.shape()));
  double total = 0.0;
  for (double v : a.data()) total += v;
  if (!Tracks({&a})) return Tensor::Scalar(total / n);
  ImplPtr ai = a.impl();
  return Record("reduce-mean", {}, {total / n}, {ai},
                [ai, n](std::span<const double> g, std::span<const double>) {
                  auto s = Sink(ai);
                  for (double &v : s) v += g[0] / n;
                });
}

Tensor Conv2d(const Tensor &input, const Tensor &kernel, const Tensor &bias,
              int stride) {
  NCM_CHECK(input.rank() == 3 && kernel.rank() == 4 && bias.rank() == 1 &&
                kernel.dim(2) == input.dim(2) && bias.dim(0) == kernel.dim(3),
            "conv2d: shape mismatch ", ShapeToString(input.shape()),
            " vs kernel ", ShapeToString(kernel.shape()), " / bias ",
            ShapeToString(bias.shape()));
  NCM_CHECK(stride >= 1, "conv2d: stride must be positive, got ", stride);
  const int64_t h = input.dim(0), w = input.dim(1), cin = input.dim(2);
  const int64_t kh = kernel.dim(0), kw = kernel.dim(1), cout = kernel.dim(3);
  const int64_t oh = (h + stride - 1) / stride, ow = (w + stride - 1) / stride;
  const int64_t pad_top = std::max<int64_t>((oh - 1) * stride + kh - h, 0) / 2;
  const int64_t pad_left =
      std::max<int64_t>((ow - 1) * stride + kw - w, 0) / 2;
  auto in = input.data();
  auto ker = kernel.data();
  auto bd = bias.data();
  std::vector<double> out(oh * ow * cout);
  for (int64_t y = 0; y < oh; ++y)
    for (int64_t x = 0; x < ow; ++x) {
      double *o = out.data() + (y * ow + x) * cout;
      for (int64_t c = 0; c < cout; ++c) o[c] = bd[c];
      for (int64_t dy = 0; dy < kh; ++dy) {
        const int64_t iy = y * stride + dy - pad_top;
        if (iy < 0 || iy >= h) continue;
        for (int64_t dx = 0; dx < kw; ++dx) {
          const int64_t ix = x * stride + dx - pad_left;
          if (ix < 0 || ix >= w) continue;
          const double *ip = in.data() + (iy * w + ix) * cin;
          const double *kp = ker.data() + (dy * kw + dx) * cin * cout;
          for (int64_t ci = 0; ci < cin; ++ci)
            for (int64_t c = 0; c < cout; ++c)
              o[c] += ip[ci] * kp[ci * cout + c];
        }
      }
    }
  if (!Tracks({&input, &kernel, &bias}))
    return Tensor::FromData({oh, ow, cout}, std::move(out));
  ImplPtr ii = input.impl(), ki = kernel.impl(), bi = bias.impl();
  return Record(
      "conv2d", {oh, ow, cout}, std::move(out), {ii, ki, bi},
      [=](std::span<const double> g, std::span<const double>) {
        auto si = Sink(ii), sk = Sink(ki), sb = Sink(bi);
        for (int64_t y = 0; y < oh; ++y)
          for (int64_t x = 0; x < ow; ++x) {
            const double *go = g.data() + (y * ow + x) * cout;
            if (!sb.empty())
              for (int64_t c = 0; c < cout; ++c) sb[c] += go[c];
            for (int64_t dy = 0; dy < kh; ++dy) {
              const int64_t iy = y * stride + dy - pad_top;
              if (iy < 0 || iy >= h) continue;
              for (int64_t dx = 0; dx < kw; ++dx) {
                const int64_t ix = x * stride + dx - pad_left;
                if (ix < 0 || ix >= w) continue;
                const int64_t ioff = (iy * w + ix) * cin;
                const int64_t koff = (dy * kw + dx) * cin * cout;
                for (int64_t ci = 0; ci < cin; ++ci)
                  for (int64_t c = 0; c < cout; ++c) {
                    if (!si.empty())
                      si[ioff + ci] += go[c] * ki->data[koff + ci * cout + c];
                    if (!sk.empty())
                      sk[koff + ci * cout + c] += go[c] * ii->data[ioff + ci];
                  }
              }
            }
          }
      });
}

}  // namespace ncm
