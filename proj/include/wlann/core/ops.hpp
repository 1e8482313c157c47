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

// Forward operations and their hand-derived adjoints.
//
// Each `foo_backward` takes the upstream gradient of foo's output, adds the
// parameter gradients into the parameters' grad buffers (only for tensors
// with requires_grad set), and returns the gradient with respect to the
// input. Nothing is recorded implicitly: callers keep whatever the forward
// pass needs for the backward pass.

#ifndef WLANN_CORE_OPS_HPP_
#define WLANN_CORE_OPS_HPP_

#include <string>
#include <vector>

#include "wlann/core/tensor.hpp"

namespace wlann::nd {

// --- convolution / affine ----------------------------------------------------

/// Valid cross-correlation. x: [C_in x L], w: [C_out x C_in x K], b: [C_out]
/// -> [C_out x L_out] with L_out = floor((L - K) / stride) + 1.
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride);
/// Returns an empty tensor when need_input_grad is false.
Tensor conv1d_backward(const Tensor& x, Tensor& w, Tensor& b, std::size_t stride,
                       const Tensor& dy, bool need_input_grad = true);

/// Affine map on the trailing axis. x: [... x D_in], w: [D_out x D_in].
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor linear_backward(const Tensor& x, Tensor& w, Tensor& b, const Tensor& dy);

Tensor transpose2d(const Tensor& x);

// --- elementwise / axiswise --------------------------------------------------

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& dy);
/// Exact GELU, x * Phi(x).
Tensor gelu(const Tensor& x);
Tensor gelu_backward(const Tensor& x, const Tensor& dy);
Tensor sigmoid(const Tensor& x);
Tensor sigmoid_backward(const Tensor& y, const Tensor& dy);
Tensor tanh(const Tensor& x);
Tensor tanh_backward(const Tensor& y, const Tensor& dy);
Tensor softmax(const Tensor& x, std::size_t axis);
Tensor softmax_backward(const Tensor& y, const Tensor& dy, std::size_t axis);

struct LayerNormCache {
  Tensor normalized;              // (x - mean) / std, before scale and shift
  std::vector<double> inv_std;    // one per row
};
inline constexpr double kLayerNormEps = 1e-5;
/// Normalizes over the trailing axis, then applies gamma * xhat + beta.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  LayerNormCache* cache = nullptr);
Tensor layer_norm_backward(const LayerNormCache& cache, Tensor& gamma, Tensor& beta,
                           const Tensor& dy);

/// Arithmetic mean over one axis; the axis is removed from the shape.
Tensor mean_pool(const Tensor& x, std::size_t axis);
Tensor mean_pool_backward(const Shape& input_shape, std::size_t axis, const Tensor& dy);

/// Averages rows of x: [T_in x C] into T_out bins [floor(i T_in / T_out),
/// ceil((i + 1) T_in / T_out)).
Tensor adaptive_avg_pool_rows(const Tensor& x, std::size_t out_rows);
Tensor adaptive_avg_pool_rows_backward(const Shape& input_shape, const Tensor& dy);

/// Concatenates along the trailing axis; leading dimensions must agree.
Tensor concat_last(const Tensor& a, const Tensor& b);
/// Splits a trailing-axis gradient back into the two parts.
void split_last(const Tensor& dy, std::size_t first_width, Tensor* da, Tensor* db);

Tensor add(const Tensor& a, const Tensor& b);

// --- attention ---------------------------------------------------------------

struct AttentionParams {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;

  AttentionParams() = default;
  explicit AttentionParams(std::size_t dim);
  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".q.weight", wq); f(prefix + ".q.bias", bq);
    f(prefix + ".k.weight", wk); f(prefix + ".k.bias", bk);
    f(prefix + ".v.weight", wv); f(prefix + ".v.bias", bv);
    f(prefix + ".o.weight", wo); f(prefix + ".o.bias", bo);
  }
};

struct AttentionCache {
  Tensor input, q, k, v, context;
  std::vector<Tensor> weights;  // per head, [N x N], rows sum to 1
  std::size_t heads = 1;
};

/// Multi-head scaled dot-product self-attention over seq: [N x D].
Tensor multi_head_self_attention(const Tensor& seq, const AttentionParams& p,
                                 std::size_t heads, AttentionCache* cache = nullptr);
Tensor multi_head_self_attention_backward(const AttentionCache& cache,
                                          AttentionParams& p, const Tensor& dy);

struct TransformerParams {
  Tensor ln1_gamma, ln1_beta;
  AttentionParams attn;
  Tensor ln2_gamma, ln2_beta;
  Tensor fc1_w, fc1_b, fc2_w, fc2_b;

  TransformerParams() = default;
  explicit TransformerParams(std::size_t dim);
  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".ln1.gamma", ln1_gamma); f(prefix + ".ln1.beta", ln1_beta);
    attn.visit(prefix + ".attn", f);
    f(prefix + ".ln2.gamma", ln2_gamma); f(prefix + ".ln2.beta", ln2_beta);
    f(prefix + ".fc1.weight", fc1_w); f(prefix + ".fc1.bias", fc1_b);
    f(prefix + ".fc2.weight", fc2_w); f(prefix + ".fc2.bias", fc2_b);
  }
};

struct TransformerCache {
  LayerNormCache ln1, ln2;
  AttentionCache attn;
  Tensor ln2_out, fc1_out, act;
};

/// Pre-norm encoder block: x + MHSA(LN(x)), then r + FFN(LN(r)) with a
/// 4D-wide GELU feed-forward layer.
Tensor transformer_block(const Tensor& seq, const TransformerParams& p, std::size_t heads,
                         TransformerCache* cache = nullptr);
Tensor transformer_block_backward(const TransformerCache& cache, TransformerParams& p,
                                  const Tensor& dy);

// --- recurrent ---------------------------------------------------------------

struct GruCellParams {
  Tensor wz, wr, wh;  // [H x D_in]
  Tensor uz, ur, uh;  // [H x H]
  Tensor bz, br, bh;  // [H]

  GruCellParams() = default;
  GruCellParams(std::size_t input_size, std::size_t hidden);
  std::size_t hidden() const { return bz.size(); }
  std::size_t input_size() const { return wz.dim(1); }
  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".wz", wz); f(prefix + ".wr", wr); f(prefix + ".wh", wh);
    f(prefix + ".uz", uz); f(prefix + ".ur", ur); f(prefix + ".uh", uh);
    f(prefix + ".bz", bz); f(prefix + ".br", br); f(prefix + ".bh", bh);
  }
};

struct GruCellCache {
  std::vector<double> x, h_prev, z, r, rh, cand;
};

/// z = sig(Wz x + Uz h + bz), r = sig(Wr x + Ur h + br),
/// c = tanh(Wh x + Uh (r * h) + bh), h' = (1 - z) * h + z * c.
Tensor gru_cell(const Tensor& x, const Tensor& h_prev, const GruCellParams& p,
                GruCellCache* cache = nullptr);
/// Returns d(h_prev); writes d(x) into *dx when non-null.
Tensor gru_cell_backward(const GruCellCache& cache, GruCellParams& p, const Tensor& dh,
                         Tensor* dx);

struct BiGruCache {
  std::vector<GruCellCache> fwd, bwd;
  std::size_t steps = 0;
};

/// seq: [T x D_in] -> [T x 2H]; row t is [h_fwd(t) ; h_bwd(t)], both
/// directions starting from a zero state.
Tensor bigru(const Tensor& seq, const GruCellParams& fwd, const GruCellParams& bwd,
             BiGruCache* cache = nullptr);
Tensor bigru_backward(const BiGruCache& cache, GruCellParams& fwd, GruCellParams& bwd,
                      const Tensor& dy);

}  // namespace wlann::nd

#endif  // WLANN_CORE_OPS_HPP_
