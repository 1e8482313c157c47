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

#include "wlann/core/error.hpp"
#include "wlann/core/ops.hpp"

namespace wlann::nd {

AttentionParams::AttentionParams(std::size_t dim)
    : wq({dim, dim}), bq({dim}), wk({dim, dim}), bk({dim}),
      wv({dim, dim}), bv({dim}), wo({dim, dim}), bo({dim}) {}

TransformerParams::TransformerParams(std::size_t dim)
    : ln1_gamma({dim}, 1.0), ln1_beta({dim}), attn(dim),
      ln2_gamma({dim}, 1.0), ln2_beta({dim}),
      fc1_w({4 * dim, dim}), fc1_b({4 * dim}),
      fc2_w({dim, 4 * dim}), fc2_b({dim}) {}

Tensor multi_head_self_attention(const Tensor& seq, const AttentionParams& p,
                                 std::size_t heads, AttentionCache* cache) {
  require(seq.rank() == 2, Errc::kShape, "attention: expected [N x D] input");
  const std::size_t n = seq.dim(0), d = seq.dim(1);
  require(heads >= 1 && d % heads == 0, Errc::kConfig,
          "attention: width " + std::to_string(d) + " not divisible by " +
              std::to_string(heads) + " heads");
  const std::size_t dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Tensor q = linear(seq, p.wq, p.bq);
  Tensor k = linear(seq, p.wk, p.bk);
  Tensor v = linear(seq, p.wv, p.bv);
  Tensor context({n, d});
  std::vector<Tensor> weights;
  weights.reserve(heads);

  std::vector<double> row(n);
  for (std::size_t h = 0; h < heads; ++h) {
    Tensor w({n, n});
    const std::size_t off = h * dh;
    for (std::size_t i = 0; i < n; ++i) {
      const double* qi = q.data() + i * d + off;
      double mx = -INFINITY;
      for (std::size_t j = 0; j < n; ++j) {
        const double* kj = k.data() + j * d + off;
        double s = 0.0;
        for (std::size_t c = 0; c < dh; ++c) s += qi[c] * kj[c];
        row[j] = s * scale;
        mx = std::max(mx, row[j]);
      }
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        row[j] = std::exp(row[j] - mx);
        sum += row[j];
      }
      double* wi = w.data() + i * n;
      double* ci = context.data() + i * d + off;
      for (std::size_t j = 0; j < n; ++j) {
        wi[j] = row[j] / sum;
        const double* vj = v.data() + j * d + off;
        for (std::size_t c = 0; c < dh; ++c) ci[c] += wi[j] * vj[c];
      }
    }
    weights.push_back(std::move(w));
  }

  Tensor out = linear(context, p.wo, p.bo);
  if (cache) {
    cache->input = seq;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->context = std::move(context);
    cache->weights = std::move(weights);
    cache->heads = heads;
  }
  return out;
}

Tensor multi_head_self_attention_backward(const AttentionCache& cache,
                                          AttentionParams& p, const Tensor& dy) {
  const std::size_t n = cache.input.dim(0), d = cache.input.dim(1);
  const std::size_t heads = cache.heads, dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  const Tensor dcontext = linear_backward(cache.context, p.wo, p.bo, dy);
  Tensor dq({n, d}), dk({n, d}), dv({n, d});
  std::vector<double> dw(n);
  for (std::size_t h = 0; h < heads; ++h) {
    const Tensor& w = cache.weights[h];
    const std::size_t off = h * dh;
    for (std::size_t i = 0; i < n; ++i) {
      const double* dci = dcontext.data() + i * d + off;
      const double* wi = w.data() + i * n;
      double dot_wdw = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double* vj = cache.v.data() + j * d + off;
        double* dvj = dv.data() + j * d + off;
        double s = 0.0;
        for (std::size_t c = 0; c < dh; ++c) {
          s += dci[c] * vj[c];
          dvj[c] += wi[j] * dci[c];
        }
        dw[j] = s;
        dot_wdw += wi[j] * s;
      }
      const double* qi = cache.q.data() + i * d + off;
      double* dqi = dq.data() + i * d + off;
      for (std::size_t j = 0; j < n; ++j) {
        const double ds = wi[j] * (dw[j] - dot_wdw) * scale;
        if (ds == 0.0) continue;
        const double* kj = cache.k.data() + j * d + off;
        double* dkj = dk.data() + j * d + off;
        for (std::size_t c = 0; c < dh; ++c) {
          dqi[c] += ds * kj[c];
          dkj[c] += ds * qi[c];
        }
      }
    }
  }

  Tensor dx = linear_backward(cache.input, p.wq, p.bq, dq);
  const Tensor dxk = linear_backward(cache.input, p.wk, p.bk, dk);
  const Tensor dxv = linear_backward(cache.input, p.wv, p.bv, dv);
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dxk[i] + dxv[i];
  return dx;
}

Tensor transformer_block(const Tensor& seq, const TransformerParams& p, std::size_t heads,
                         TransformerCache* cache) {
  TransformerCache local;
  TransformerCache& c = cache ? *cache : local;
  const Tensor h1 = layer_norm(seq, p.ln1_gamma, p.ln1_beta, &c.ln1);
  const Tensor a = multi_head_self_attention(h1, p.attn, heads, &c.attn);
  const Tensor r1 = add(seq, a);
  c.ln2_out = layer_norm(r1, p.ln2_gamma, p.ln2_beta, &c.ln2);
  c.fc1_out = linear(c.ln2_out, p.fc1_w, p.fc1_b);
  c.act = gelu(c.fc1_out);
  const Tensor f2 = linear(c.act, p.fc2_w, p.fc2_b);
  return add(r1, f2);
}

Tensor transformer_block_backward(const TransformerCache& cache, TransformerParams& p,
                                  const Tensor& dy) {
  const Tensor dact = linear_backward(cache.act, p.fc2_w, p.fc2_b, dy);
  const Tensor dfc1 = gelu_backward(cache.fc1_out, dact);
  const Tensor dln2 = linear_backward(cache.ln2_out, p.fc1_w, p.fc1_b, dfc1);
  Tensor dr1 = add(dy, layer_norm_backward(cache.ln2, p.ln2_gamma, p.ln2_beta, dln2));
  const Tensor dh1 = multi_head_self_attention_backward(cache.attn, p.attn, dr1);
  return add(dr1, layer_norm_backward(cache.ln1, p.ln1_gamma, p.ln1_beta, dh1));
}

}  // namespace wlann::nd
