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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "wlann/core/error.hpp"
#include "wlann/core/gradcheck.hpp"
#include "wlann/core/gradcheck_suite.hpp"
#include "wlann/core/ops.hpp"

using namespace wlann;
using namespace wlann::nd;

namespace {

Tensor randn(Shape shape, std::mt19937_64& gen, double sd = 1.0) {
  std::normal_distribution<double> nd(0.0, sd);
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = nd(gen);
  return t;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.shape() == b.shape());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::kPrecondition;
}

// y = x W^T + b by plain loops over rows
Tensor linear_oracle(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::size_t n = x.dim(0), din = x.dim(1), dout = w.dim(0);
  Tensor y({n, dout});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t o = 0; o < dout; ++o) {
      double s = b[o];
      for (std::size_t k = 0; k < din; ++k) s += x.at(i, k) * w.at(o, k);
      y.at(i, o) = s;
    }
  return y;
}

}  // namespace

TEST_CASE("conv1d output length") {
  Tensor x({1, 16000}, 0.0), w({2, 1, 80}, 0.0), b({2}, 0.0);
  CHECK(conv1d(x, w, b, 5).shape() == Shape{2, 3185});
  Tensor shortx({1, 10}, 0.0);
  CHECK(code_of([&] { conv1d(shortx, w, b, 5); }) == Errc::kShape);
}

TEST_CASE("conv1d identity kernel") {
  std::mt19937_64 gen(1);
  const Tensor x = randn({1, 37}, gen);
  Tensor w({1, 1, 1}, 1.0), b({1}, 0.0);
  CHECK(conv1d(x, w, b, 1).values()[5] == x[5]);
  CHECK(max_abs_diff(conv1d(x, w, b, 1), x) == 0.0);
}

TEST_CASE("conv1d matches a triple loop") {
  std::mt19937_64 gen(2);
  const Tensor x = randn({2, 11}, gen), w = randn({3, 2, 4}, gen), b = randn({3}, gen);
  const Tensor y = conv1d(x, w, b, 2);
  REQUIRE(y.shape() == Shape{3, 4});
  Tensor ref({3, 4});
  for (std::size_t o = 0; o < 3; ++o)
    for (std::size_t t = 0; t < 4; ++t) {
      double s = b[o];
      for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t k = 0; k < 4; ++k) s += w.at(o, c, k) * x.at(c, 2 * t + k);
      ref.at(o, t) = s;
    }
  CHECK(max_abs_diff(y, ref) < 1e-12);
}

TEST_CASE("linear") {
  Tensor x({1, 1}, 5.0), w({1, 1}, 2.0), b({1}, 3.0);
  CHECK(linear(x, w, b)[0] == 13.0);

  std::mt19937_64 gen(3);
  const Tensor xs = randn({4, 3}, gen);
  Tensor eye({3, 3}, 0.0), zero({3}, 0.0);
  for (std::size_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  CHECK(max_abs_diff(linear(xs, eye, zero), xs) == 0.0);

  const Tensor w2 = randn({5, 3}, gen), b2 = randn({5}, gen);
  CHECK(max_abs_diff(linear(xs, w2, b2), linear_oracle(xs, w2, b2)) < 1e-12);
}

TEST_CASE("attention rows sum to one") {
  std::mt19937_64 gen(4);
  AttentionParams p(8);
  p.visit("a", [&](const std::string&, Tensor& t) { t = randn(t.shape(), gen, 0.5); });
  AttentionCache cache;
  multi_head_self_attention(randn({6, 8}, gen), p, 2, &cache);
  REQUIRE(cache.weights.size() == 2);
  for (const auto& w : cache.weights)
    for (std::size_t i = 0; i < 6; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < 6; ++j) s += w.at(i, j);
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
}

TEST_CASE("attention of a single token is the value chain") {
  std::mt19937_64 gen(5);
  AttentionParams p(4);
  p.visit("a", [&](const std::string&, Tensor& t) { t = randn(t.shape(), gen); });
  const Tensor x = randn({1, 4}, gen);
  AttentionCache cache;
  const Tensor y = multi_head_self_attention(x, p, 2, &cache);
  for (const auto& w : cache.weights) CHECK(w[0] == 1.0);
  const Tensor ref = linear_oracle(linear_oracle(x, p.wv, p.bv), p.wo, p.bo);
  CHECK(max_abs_diff(y, ref) < 1e-12);
}

TEST_CASE("attention matches the explicit formula") {
  std::mt19937_64 gen(6);
  AttentionParams p(4);
  p.visit("a", [&](const std::string&, Tensor& t) { t = randn(t.shape(), gen); });
  const Tensor x = randn({3, 4}, gen);
  const Tensor q = linear_oracle(x, p.wq, p.bq), k = linear_oracle(x, p.wk, p.bk),
               v = linear_oracle(x, p.wv, p.bv);
  Tensor ctx({3, 4}, 0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    double s[3], m = -1e300, z = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      s[j] = 0.0;
      for (std::size_t c = 0; c < 4; ++c) s[j] += q.at(i, c) * k.at(j, c);
      s[j] /= 2.0;
      m = std::max(m, s[j]);
    }
    for (double& e : s) z += (e = std::exp(e - m));
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t c = 0; c < 4; ++c) ctx.at(i, c) += s[j] / z * v.at(j, c);
  }
  const Tensor ref = linear_oracle(ctx, p.wo, p.bo);
  CHECK(max_abs_diff(multi_head_self_attention(x, p, 1), ref) < 1e-10);
}

TEST_CASE("transformer block on zero input with zero projections") {
  TransformerParams p(8);
  p.visit("t", [](const std::string& name, Tensor& t) {
    const bool gamma = name.find("gamma") != std::string::npos;
    t = Tensor(t.shape(), gamma ? 1.0 : 0.0);
  });
  p.fc2_b = Tensor(p.fc2_b.shape(), 0.25);
  p.attn.bo = Tensor(p.attn.bo.shape(), -0.5);
  const Tensor y = transformer_block(Tensor({5, 8}, 0.0), p, 2);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == doctest::Approx(-0.25));

  std::mt19937_64 gen(7);
  for (std::size_t n : {1u, 4u, 9u}) {
    TransformerParams r(8);
    r.visit("t", [&](const std::string&, Tensor& t) { t = randn(t.shape(), gen, 0.3); });
    CHECK(transformer_block(randn({n, 8}, gen), r, 4).shape() == Shape{n, 8});
  }
}

TEST_CASE("gru cell carry-through and range") {
  std::mt19937_64 gen(8);
  GruCellParams p(3, 4);
  p.visit("g", [&](const std::string&, Tensor& t) { t = randn(t.shape(), gen); });
  p.bz = Tensor({4}, -50.0);
  const Tensor h = randn({4}, gen);
  const Tensor x = randn({3}, gen);
  CHECK(max_abs_diff(gru_cell(x, h, p), h) < 1e-12);

  p.visit("g", [&](const std::string&, Tensor& t) { t = randn(t.shape(), gen, 3.0); });
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor hp({4});
    for (std::size_t i = 0; i < 4; ++i) hp[i] = u(gen);
    const Tensor y = gru_cell(randn({3}, gen, 5.0), hp, p);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(y[i]) <= 1.0);
  }
}

TEST_CASE("bigru structure") {
  std::mt19937_64 gen(9);
  GruCellParams f(3, 2), b(3, 2);
  f.visit("f", [&](const std::string&, Tensor& t) { t = randn(t.shape(), gen); });
  b.visit("b", [&](const std::string&, Tensor& t) { t = randn(t.shape(), gen); });

  const Tensor one = randn({1, 3}, gen);
  const Tensor y1 = bigru(one, f, b);
  REQUIRE(y1.shape() == Shape{1, 4});
  const Tensor x0 = one.reshaped({3});
  const Tensor hf = gru_cell(x0, Tensor({2}, 0.0), f), hb = gru_cell(x0, Tensor({2}, 0.0), b);
  CHECK(y1[0] == hf[0]);
  CHECK(y1[1] == hf[1]);
  CHECK(y1[2] == hb[0]);
  CHECK(y1[3] == hb[1]);

  for (std::size_t steps : {2u, 5u, 8u}) {
    const Tensor s = randn({steps, 3}, gen);
    Tensor rev({steps, 3});
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t c = 0; c < 3; ++c) rev.at(t, c) = s.at(steps - 1 - t, c);
    const Tensor y = bigru(s, f, b);
    CHECK(y.shape() == Shape{steps, 4});
    // running with directions swapped on the reversed sequence mirrors y
    const Tensor yr = bigru(rev, b, f);
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t c = 0; c < 2; ++c) {
        CHECK(std::abs(yr.at(steps - 1 - t, c) - y.at(t, 2 + c)) < 1e-12);
        CHECK(std::abs(yr.at(steps - 1 - t, 2 + c) - y.at(t, c)) < 1e-12);
      }
  }
}

TEST_CASE("mean_pool") {
  Tensor v({3}, std::vector<double>{1, 2, 3});
  CHECK(mean_pool(v, 0)[0] == 2.0);
  const Tensor c = mean_pool(Tensor({3, 4, 5}, 1.5), 1);
  CHECK(c.shape() == Shape{3, 5});
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == 1.5);

  std::mt19937_64 gen(10);
  Tensor x = randn({3, 4, 5}, gen);
  const Tensor cw = randn({3, 5}, gen);
  std::vector<NamedTensor> params{{"x", &x}};
  GradCheckOptions opt;
  opt.tolerance = 1e-6;
  const auto report = grad_check(
      [&](bool with_grad) {
        const Tensor y = mean_pool(x, 1);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += cw[i] * y[i];
        if (with_grad) x.accumulate_grad(mean_pool_backward(x.shape(), 1, cw).values());
        return s;
      },
      params, opt);
  CHECK(report.passed());
  CHECK(report.max_rel_error() < 1e-6);
}

TEST_CASE("activation identities") {
  CHECK(sigmoid(Tensor({1}, 0.0))[0] == 0.5);
  const Tensor s = softmax(Tensor({2, 5}, 3.7), 1);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(relu(Tensor({2}, std::vector<double>{-1.0, 2.0}))[0] == 0.0);
  CHECK(gelu(Tensor({1}, 0.0))[0] == 0.0);
  CHECK(gelu(Tensor({1}, 1.0))[0] == doctest::Approx(0.5 * (1.0 + std::erf(1.0 / std::sqrt(2.0)))).epsilon(1e-3));

  std::mt19937_64 gen(11);
  const Tensor x = randn({6, 32}, gen, 20.0);
  LayerNormCache cache;
  layer_norm(x, Tensor({32}, 2.0), Tensor({32}, 1.0), &cache);
  for (std::size_t i = 0; i < 6; ++i) {
    double m = 0.0, v = 0.0;
    for (std::size_t j = 0; j < 32; ++j) m += cache.normalized.at(i, j);
    m /= 32.0;
    for (std::size_t j = 0; j < 32; ++j) v += std::pow(cache.normalized.at(i, j) - m, 2);
    v /= 32.0;
    CHECK(std::abs(m) < 1e-6);
    CHECK(std::abs(v - 1.0) < 1e-6);
  }
}

TEST_CASE("grad_check harness") {
  std::mt19937_64 gen(12);
  Tensor theta = randn({7}, gen);
  std::vector<NamedTensor> params{{"theta", &theta}};
  auto sumsq = [&](double factor) {
    return [&theta, factor](bool with_grad) {
      double s = 0.0;
      std::vector<double> g(theta.size());
      for (std::size_t i = 0; i < theta.size(); ++i) {
        s += theta[i] * theta[i];
        g[i] = factor * 2.0 * theta[i];
      }
      if (with_grad) theta.accumulate_grad(g);
      return s;
    };
  };
  const auto good = grad_check(sumsq(1.0), params);
  CHECK(good.passed());
  CHECK(good.max_rel_error() < 1e-8);
  const auto bad = grad_check(sumsq(2.0), params);
  CHECK_FALSE(bad.passed());
  CHECK(bad.max_rel_error() > 0.4);
}

TEST_CASE("per-op gradient suite") {
  wlann::nd::SuiteOptions opt;
  opt.end_to_end = false;
  const auto entries = wlann::nd::run_gradcheck_suite(opt);
  CHECK(entries.size() >= 20);
  for (const auto& e : entries) {
    INFO(e.op << " " << e.worst_tensor << " " << e.max_rel_error);
    CHECK(e.passed);
    CHECK(e.max_rel_error < 1e-4);
  }
}
