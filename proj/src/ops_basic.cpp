// Copyright 2026 The WLANN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wlann/core/error.hpp"
#include "wlann/core/ops.hpp"

namespace wlann::nd {

namespace {

// Dot product with four independent partial sums.
inline double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.shape() == b.shape(), Errc::kShape,
          std::string(op) + ": shape " + shape_str(a.shape()) + " vs " +
              shape_str(b.shape()));
}

// Splits a shape around one axis into (outer, axis, inner) extents.
void split_axis(const Shape& shape, std::size_t axis, std::size_t& outer,
                std::size_t& n, std::size_t& inner) {
  require(axis < shape.size(), Errc::kShape,
          "axis " + std::to_string(axis) + " out of range for " + shape_str(shape));
  outer = 1;
  inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  n = shape[axis];
}

}  // namespace

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride) {
  require(x.rank() == 2 && w.rank() == 3 && b.rank() == 1, Errc::kShape,
          "conv1d: expected x [C_in x L], w [C_out x C_in x K], b [C_out]");
  const std::size_t cin = x.dim(0), len = x.dim(1);
  const std::size_t cout = w.dim(0), k = w.dim(2);
  require(w.dim(1) == cin && b.dim(0) == cout, Errc::kShape,
          "conv1d: weight " + shape_str(w.shape()) + " incompatible with input " +
              shape_str(x.shape()));
  require(stride >= 1, Errc::kShape, "conv1d: stride must be >= 1");
  require(len >= k, Errc::kShape,
          "conv1d: input length " + std::to_string(len) + " shorter than kernel " +
              std::to_string(k));
  const std::size_t lout = (len - k) / stride + 1;
  Tensor y({cout, lout});
  for (std::size_t o = 0; o < cout; ++o) {
    double* yo = y.data() + o * lout;
    std::fill(yo, yo + lout, b[o]);
    for (std::size_t c = 0; c < cin; ++c) {
      const double* wp = w.data() + (o * cin + c) * k;
      const double* xc = x.data() + c * len;
      for (std::size_t t = 0; t < lout; ++t) yo[t] += dot(wp, xc + t * stride, k);
    }
  }
  return y;
}

Tensor conv1d_backward(const Tensor& x, Tensor& w, Tensor& b, std::size_t stride,
                       const Tensor& dy, bool need_input_grad) {
  const std::size_t cin = x.dim(0), len = x.dim(1);
  const std::size_t cout = w.dim(0), k = w.dim(2);
  const std::size_t lout = dy.dim(1);
  require(dy.dim(0) == cout && lout == (len - k) / stride + 1, Errc::kShape,
          "conv1d_backward: gradient shape " + shape_str(dy.shape()));
  Tensor dx;
  if (need_input_grad) dx = Tensor({cin, len});
  double* dw = w.requires_grad() ? w.grad().data() : nullptr;
  double* db = b.requires_grad() ? b.grad().data() : nullptr;
  for (std::size_t o = 0; o < cout; ++o) {
    const double* go = dy.data() + o * lout;
    if (db) {
      double s = 0.0;
      for (std::size_t t = 0; t < lout; ++t) s += go[t];
      db[o] += s;
    }
    for (std::size_t c = 0; c < cin; ++c) {
      const double* wp = w.data() + (o * cin + c) * k;
      const double* xc = x.data() + c * len;
      double* dwp = dw ? dw + (o * cin + c) * k : nullptr;
      double* dxc = need_input_grad ? dx.data() + c * len : nullptr;
      for (std::size_t t = 0; t < lout; ++t) {
        const double g = go[t];
        if (dwp) axpy(g, xc + t * stride, dwp, k);
        if (dxc) axpy(g, wp, dxc + t * stride, k);
      }
    }
  }
  return dx;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  require(x.rank() >= 1 && w.rank() == 2 && b.rank() == 1, Errc::kShape,
          "linear: expected x [... x D_in], w [D_out x D_in], b [D_out]");
  const std::size_t din = x.shape().back();
  const std::size_t dout = w.dim(0);
  require(w.dim(1) == din && b.dim(0) == dout, Errc::kShape,
          "linear: input " + shape_str(x.shape()) + " vs weight " + shape_str(w.shape()) +
              " and bias " + shape_str(b.shape()));
  const std::size_t rows = x.size() / std::max<std::size_t>(din, 1);
  Shape out_shape = x.shape();
  out_shape.back() = dout;
  Tensor y(out_shape);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * din;
    double* yr = y.data() + r * dout;
    for (std::size_t o = 0; o < dout; ++o) yr[o] = b[o] + dot(w.data() + o * din, xr, din);
  }
  return y;
}

Tensor linear_backward(const Tensor& x, Tensor& w, Tensor& b, const Tensor& dy) {
  const std::size_t din = w.dim(1), dout = w.dim(0);
  const std::size_t rows = x.size() / std::max<std::size_t>(din, 1);
  require(dy.size() == rows * dout, Errc::kShape,
          "linear_backward: gradient shape " + shape_str(dy.shape()));
  Tensor dx(x.shape());
  double* dw = w.requires_grad() ? w.grad().data() : nullptr;
  double* db = b.requires_grad() ? b.grad().data() : nullptr;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * din;
    const double* gr = dy.data() + r * dout;
    double* dxr = dx.data() + r * din;
    for (std::size_t o = 0; o < dout; ++o) {
      const double g = gr[o];
      if (g == 0.0) continue;
      axpy(g, w.data() + o * din, dxr, din);
      if (dw) axpy(g, xr, dw + o * din, din);
      if (db) db[o] += g;
    }
  }
  return dx;
}

Tensor transpose2d(const Tensor& x) {
  require(x.rank() == 2, Errc::kShape, "transpose2d: expected a matrix");
  const std::size_t r = x.dim(0), c = x.dim(1);
  Tensor y({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) y[j * r + i] = x[i * c + j];
  return y;
}

Tensor relu(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
  check_same_shape(x, dy, "relu_backward");
  Tensor dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
  return dx;
}

Tensor gelu(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i)
    y[i] = 0.5 * x[i] * (1.0 + std::erf(x[i] * std::numbers::sqrt2 / 2.0));
  return y;
}

Tensor gelu_backward(const Tensor& x, const Tensor& dy) {
  check_same_shape(x, dy, "gelu_backward");
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  Tensor dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
    const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
    dx[i] = dy[i] * (cdf + v * pdf);
  }
  return dx;
}

Tensor sigmoid(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    if (v >= 0.0) {
      y[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      y[i] = e / (1.0 + e);
    }
  }
  return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& dy) {
  check_same_shape(y, dy, "sigmoid_backward");
  Tensor dx(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] = dy[i] * y[i] * (1.0 - y[i]);
  return dx;
}

Tensor tanh(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
  return y;
}

Tensor tanh_backward(const Tensor& y, const Tensor& dy) {
  check_same_shape(y, dy, "tanh_backward");
  Tensor dx(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] = dy[i] * (1.0 - y[i] * y[i]);
  return dx;
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  std::size_t outer, n, inner;
  split_axis(x.shape(), axis, outer, n, inner);
  Tensor y(x.shape());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      double mx = -INFINITY;
      for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, x[base + i * inner]);
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double e = std::exp(x[base + i * inner] - mx);
        y[base + i * inner] = e;
        sum += e;
      }
      for (std::size_t i = 0; i < n; ++i) y[base + i * inner] /= sum;
    }
  }
  return y;
}

Tensor softmax_backward(const Tensor& y, const Tensor& dy, std::size_t axis) {
  check_same_shape(y, dy, "softmax_backward");
  std::size_t outer, n, inner;
  split_axis(y.shape(), axis, outer, n, inner);
  Tensor dx(y.shape());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += y[base + i * inner] * dy[base + i * inner];
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = base + i * inner;
        dx[j] = y[j] * (dy[j] - s);
      }
    }
  }
  return dx;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  LayerNormCache* cache) {
  require(x.rank() >= 1, Errc::kShape, "layer_norm: scalar input");
  const std::size_t d = x.shape().back();
  require(gamma.size() == d && beta.size() == d, Errc::kShape,
          "layer_norm: scale/shift of size " + std::to_string(gamma.size()) + " for width " +
              std::to_string(d));
  const std::size_t rows = x.size() / d;
  Tensor y(x.shape());
  Tensor xhat(x.shape());
  std::vector<double> inv(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * d;
    double mean = 0.0;
    for (std::size_t i = 0; i < d; ++i) mean += xr[i];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) var += (xr[i] - mean) * (xr[i] - mean);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + kLayerNormEps);
    inv[r] = is;
    for (std::size_t i = 0; i < d; ++i) {
      const double h = (xr[i] - mean) * is;
      xhat[r * d + i] = h;
      y[r * d + i] = gamma[i] * h + beta[i];
    }
  }
  if (cache) {
    cache->normalized = std::move(xhat);
    cache->inv_std = std::move(inv);
  }
  return y;
}

Tensor layer_norm_backward(const LayerNormCache& cache, Tensor& gamma, Tensor& beta,
                           const Tensor& dy) {
  const Tensor& xhat = cache.normalized;
  check_same_shape(xhat, dy, "layer_norm_backward");
  const std::size_t d = xhat.shape().back();
  const std::size_t rows = xhat.size() / d;
  double* dg = gamma.requires_grad() ? gamma.grad().data() : nullptr;
  double* dbt = beta.requires_grad() ? beta.grad().data() : nullptr;
  Tensor dx(xhat.shape());
  std::vector<double> g(d);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* h = xhat.data() + r * d;
    const double* gy = dy.data() + r * d;
    double mean_g = 0.0, mean_gh = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      g[i] = gy[i] * gamma[i];
      mean_g += g[i];
      mean_gh += g[i] * h[i];
      if (dg) dg[i] += gy[i] * h[i];
      if (dbt) dbt[i] += gy[i];
    }
    mean_g /= static_cast<double>(d);
    mean_gh /= static_cast<double>(d);
    for (std::size_t i = 0; i < d; ++i)
      dx[r * d + i] = cache.inv_std[r] * (g[i] - mean_g - h[i] * mean_gh);
  }
  return dx;
}

Tensor mean_pool(const Tensor& x, std::size_t axis) {
  std::size_t outer, n, inner;
  split_axis(x.shape(), axis, outer, n, inner);
  require(n > 0, Errc::kShape, "mean_pool: empty axis");
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor y(out_shape);
  for (std::size_t o = 0; o < outer; ++o) {
    double* yr = y.data() + o * inner;
    for (std::size_t i = 0; i < n; ++i) {
      const double* xr = x.data() + (o * n + i) * inner;
      for (std::size_t in = 0; in < inner; ++in) yr[in] += xr[in];
    }
    for (std::size_t in = 0; in < inner; ++in) yr[in] /= static_cast<double>(n);
  }
  return y;
}

Tensor mean_pool_backward(const Shape& input_shape, std::size_t axis, const Tensor& dy) {
  std::size_t outer, n, inner;
  split_axis(input_shape, axis, outer, n, inner);
  require(dy.size() == outer * inner, Errc::kShape, "mean_pool_backward: gradient size");
  Tensor dx(input_shape);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t in = 0; in < inner; ++in)
        dx[(o * n + i) * inner + in] = dy[o * inner + in] * scale;
  return dx;
}

namespace {

std::pair<std::size_t, std::size_t> pool_bin(std::size_t i, std::size_t in, std::size_t out) {
  const std::size_t start = (i * in) / out;
  const std::size_t end = ((i + 1) * in + out - 1) / out;
  return {start, end};
}

}  // namespace

Tensor adaptive_avg_pool_rows(const Tensor& x, std::size_t out_rows) {
  require(x.rank() == 2 && out_rows >= 1 && x.dim(0) >= 1, Errc::kShape,
          "adaptive_avg_pool_rows: expected a nonempty [T x C] input");
  const std::size_t tin = x.dim(0), c = x.dim(1);
  Tensor y({out_rows, c});
  for (std::size_t i = 0; i < out_rows; ++i) {
    const auto [s, e] = pool_bin(i, tin, out_rows);
    const double scale = 1.0 / static_cast<double>(e - s);
    double* yr = y.data() + i * c;
    for (std::size_t t = s; t < e; ++t) axpy(1.0, x.data() + t * c, yr, c);
    for (std::size_t j = 0; j < c; ++j) yr[j] *= scale;
  }
  return y;
}

Tensor adaptive_avg_pool_rows_backward(const Shape& input_shape, const Tensor& dy) {
  const std::size_t tin = input_shape.at(0), c = input_shape.at(1);
  const std::size_t out_rows = dy.dim(0);
  Tensor dx(input_shape);
  for (std::size_t i = 0; i < out_rows; ++i) {
    const auto [s, e] = pool_bin(i, tin, out_rows);
    const double scale = 1.0 / static_cast<double>(e - s);
    for (std::size_t t = s; t < e; ++t) axpy(scale, dy.data() + i * c, dx.data() + t * c, c);
  }
  return dx;
}

Tensor concat_last(const Tensor& a, const Tensor& b) {
  Shape sa = a.shape(), sb = b.shape();
  require(sa.size() == sb.size() && !sa.empty() &&
              std::equal(sa.begin(), sa.end() - 1, sb.begin()),
          Errc::kShape,
          "concat: leading dimensions differ, " + shape_str(sa) + " vs " + shape_str(sb));
  const std::size_t wa = sa.back(), wb = sb.back();
  const std::size_t rows = a.size() / std::max<std::size_t>(wa, 1);
  Shape out_shape = sa;
  out_shape.back() = wa + wb;
  Tensor y(out_shape);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.data() + r * wa, wa, y.data() + r * (wa + wb));
    std::copy_n(b.data() + r * wb, wb, y.data() + r * (wa + wb) + wa);
  }
  return y;
}

void split_last(const Tensor& dy, std::size_t first_width, Tensor* da, Tensor* db) {
  const std::size_t w = dy.shape().back();
  require(first_width <= w, Errc::kShape, "split_last: width out of range");
  const std::size_t rows = dy.size() / std::max<std::size_t>(w, 1);
  Shape sa = dy.shape(), sb = dy.shape();
  sa.back() = first_width;
  sb.back() = w - first_width;
  *da = Tensor(sa);
  *db = Tensor(sb);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(dy.data() + r * w, first_width, da->data() + r * first_width);
    std::copy_n(dy.data() + r * w + first_width, w - first_width,
                db->data() + r * (w - first_width));
  }
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor y(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = a[i] + b[i];
  return y;
}

}  // namespace wlann::nd
