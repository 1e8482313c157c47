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

#include <cmath>

#include "wlann/core/error.hpp"
#include "wlann/core/ops.hpp"

namespace wlann::nd {

namespace {

double sigm(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

// out += M v for M: [rows x cols].
void matvec_add(const Tensor& m, const double* v, double* out) {
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* mi = m.data() + i * cols;
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += mi[j] * v[j];
    out[i] += s;
  }
}

// out += M^T g.
void matvec_t_add(const Tensor& m, const double* g, double* out) {
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* mi = m.data() + i * cols;
    const double gi = g[i];
    for (std::size_t j = 0; j < cols; ++j) out[j] += gi * mi[j];
  }
}

// dM += g v^T when M is trainable.
void outer_add(Tensor& m, const double* g, const double* v) {
  if (!m.requires_grad()) return;
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  double* dm = m.grad().data();
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) dm[i * cols + j] += g[i] * v[j];
}

void bias_add(Tensor& b, const std::vector<double>& g) {
  if (!b.requires_grad()) return;
  double* db = b.grad().data();
  for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i];
}

void gru_step(const double* x, const double* h, const GruCellParams& p, GruCellCache& c,
              double* out) {
  const std::size_t hs = p.hidden(), din = p.input_size();
  c.x.assign(x, x + din);
  c.h_prev.assign(h, h + hs);
  c.z.assign(p.bz.data(), p.bz.data() + hs);
  c.r.assign(p.br.data(), p.br.data() + hs);
  c.cand.assign(p.bh.data(), p.bh.data() + hs);
  matvec_add(p.wz, x, c.z.data());
  matvec_add(p.uz, h, c.z.data());
  matvec_add(p.wr, x, c.r.data());
  matvec_add(p.ur, h, c.r.data());
  c.rh.resize(hs);
  for (std::size_t i = 0; i < hs; ++i) {
    c.z[i] = sigm(c.z[i]);
    c.r[i] = sigm(c.r[i]);
    c.rh[i] = c.r[i] * h[i];
  }
  matvec_add(p.wh, x, c.cand.data());
  matvec_add(p.uh, c.rh.data(), c.cand.data());
  for (std::size_t i = 0; i < hs; ++i) {
    c.cand[i] = std::tanh(c.cand[i]);
    out[i] = (1.0 - c.z[i]) * h[i] + c.z[i] * c.cand[i];
  }
}

// Accumulates parameter gradients; writes dx (size D_in) and dh_prev (size H).
void gru_step_backward(const GruCellCache& c, GruCellParams& p, const double* dh,
                       double* dx, double* dh_prev) {
  const std::size_t hs = p.hidden(), din = p.input_size();
  std::vector<double> daz(hs), dar(hs), dac(hs), drh(hs, 0.0);
  for (std::size_t i = 0; i < hs; ++i) {
    const double dz = dh[i] * (c.cand[i] - c.h_prev[i]);
    const double dc = dh[i] * c.z[i];
    dh_prev[i] = dh[i] * (1.0 - c.z[i]);
    dac[i] = dc * (1.0 - c.cand[i] * c.cand[i]);
    daz[i] = dz * c.z[i] * (1.0 - c.z[i]);
  }
  matvec_t_add(p.uh, dac.data(), drh.data());
  for (std::size_t i = 0; i < hs; ++i) {
    const double dr = drh[i] * c.h_prev[i];
    dh_prev[i] += drh[i] * c.r[i];
    dar[i] = dr * c.r[i] * (1.0 - c.r[i]);
  }
  matvec_t_add(p.uz, daz.data(), dh_prev);
  matvec_t_add(p.ur, dar.data(), dh_prev);
  for (std::size_t j = 0; j < din; ++j) dx[j] = 0.0;
  matvec_t_add(p.wz, daz.data(), dx);
  matvec_t_add(p.wr, dar.data(), dx);
  matvec_t_add(p.wh, dac.data(), dx);

  outer_add(p.wz, daz.data(), c.x.data());
  outer_add(p.wr, dar.data(), c.x.data());
  outer_add(p.wh, dac.data(), c.x.data());
  outer_add(p.uz, daz.data(), c.h_prev.data());
  outer_add(p.ur, dar.data(), c.h_prev.data());
  outer_add(p.uh, dac.data(), c.rh.data());
  bias_add(p.bz, daz);
  bias_add(p.br, dar);
  bias_add(p.bh, dac);
}

}  // namespace

GruCellParams::GruCellParams(std::size_t input_size, std::size_t hidden)
    : wz({hidden, input_size}), wr({hidden, input_size}), wh({hidden, input_size}),
      uz({hidden, hidden}), ur({hidden, hidden}), uh({hidden, hidden}),
      bz({hidden}), br({hidden}), bh({hidden}) {}

Tensor gru_cell(const Tensor& x, const Tensor& h_prev, const GruCellParams& p,
                GruCellCache* cache) {
  const std::size_t hs = p.hidden();
  require(x.size() == p.input_size() && h_prev.size() == hs && p.uz.dim(0) == hs &&
              p.uz.dim(1) == hs && p.wz.dim(0) == hs,
          Errc::kShape,
          "gru_cell: input " + shape_str(x.shape()) + ", state " +
              shape_str(h_prev.shape()) + " vs W " + shape_str(p.wz.shape()) + ", U " +
              shape_str(p.uz.shape()));
  GruCellCache local;
  Tensor out({hs});
  gru_step(x.data(), h_prev.data(), p, cache ? *cache : local, out.data());
  return out;
}

Tensor gru_cell_backward(const GruCellCache& cache, GruCellParams& p, const Tensor& dh,
                         Tensor* dx) {
  Tensor dh_prev({p.hidden()});
  Tensor dxt({p.input_size()});
  gru_step_backward(cache, p, dh.data(), dxt.data(), dh_prev.data());
  if (dx) *dx = std::move(dxt);
  return dh_prev;
}

Tensor bigru(const Tensor& seq, const GruCellParams& fwd, const GruCellParams& bwd,
             BiGruCache* cache) {
  require(seq.rank() == 2, Errc::kShape, "bigru: expected [T x D_in] input");
  const std::size_t steps = seq.dim(0), din = seq.dim(1);
  require(steps >= 1, Errc::kPrecondition, "bigru: empty sequence");
  require(fwd.input_size() == din && bwd.input_size() == din &&
              fwd.hidden() == bwd.hidden(),
          Errc::kShape, "bigru: parameter shapes do not match input width " +
                            std::to_string(din));
  const std::size_t hs = fwd.hidden();
  BiGruCache local;
  BiGruCache& c = cache ? *cache : local;
  c.steps = steps;
  c.fwd.assign(steps, {});
  c.bwd.assign(steps, {});

  Tensor out({steps, 2 * hs});
  std::vector<double> h(hs, 0.0), next(hs);
  for (std::size_t t = 0; t < steps; ++t) {
    gru_step(seq.data() + t * din, h.data(), fwd, c.fwd[t], next.data());
    h.swap(next);
    std::copy(h.begin(), h.end(), out.data() + t * 2 * hs);
  }
  std::fill(h.begin(), h.end(), 0.0);
  for (std::size_t t = steps; t-- > 0;) {
    gru_step(seq.data() + t * din, h.data(), bwd, c.bwd[t], next.data());
    h.swap(next);
    std::copy(h.begin(), h.end(), out.data() + t * 2 * hs + hs);
  }
  return out;
}

Tensor bigru_backward(const BiGruCache& cache, GruCellParams& fwd, GruCellParams& bwd,
                      const Tensor& dy) {
  const std::size_t steps = cache.steps;
  const std::size_t hs = fwd.hidden(), din = fwd.input_size();
  require(dy.size() == steps * 2 * hs, Errc::kShape, "bigru_backward: gradient shape");
  Tensor dseq({steps, din});
  std::vector<double> carry(hs, 0.0), dh(hs), dprev(hs), dx(din);

  for (std::size_t t = steps; t-- > 0;) {
    for (std::size_t i = 0; i < hs; ++i) dh[i] = dy[t * 2 * hs + i] + carry[i];
    gru_step_backward(cache.fwd[t], fwd, dh.data(), dx.data(), dprev.data());
    for (std::size_t j = 0; j < din; ++j) dseq[t * din + j] += dx[j];
    carry.swap(dprev);
  }
  std::fill(carry.begin(), carry.end(), 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < hs; ++i) dh[i] = dy[t * 2 * hs + hs + i] + carry[i];
    gru_step_backward(cache.bwd[t], bwd, dh.data(), dx.data(), dprev.data());
    for (std::size_t j = 0; j < din; ++j) dseq[t * din + j] += dx[j];
    carry.swap(dprev);
  }
  return dseq;
}

}  // namespace wlann::nd
