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

#include "wlann/core/gradcheck_suite.hpp"

#include <cmath>
#include <functional>

#include "wlann/core/model.hpp"
#include "wlann/core/ops.hpp"
#include "wlann/core/rng.hpp"
#include "wlann/core/train.hpp"

namespace wlann::nd {

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = scale * rng.normal();
  return t;
}

/// Entries bounded away from zero, for ops with a kink there.
Tensor away_from_zero(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) {
    const double m = rng.uniform(0.1, 1.5);
    v = rng.uniform() < 0.5 ? -m : m;
  }
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void into(Tensor& x, const Tensor& dx) {
  if (x.requires_grad()) x.accumulate_grad(dx.values());
}

class Suite {
 public:
  explicit Suite(const SuiteOptions& o) : options_(o), rng_(Rng::derive(o.seed, 0x5eedULL)) {}

  Rng& rng() { return rng_; }

  /// forward(x...) -> y; the scalar is <c, y> for a fixed random c.
  void check(const std::string& op, std::vector<NamedTensor> tensors,
             const std::function<Tensor()>& forward,
             const std::function<void(const Tensor& dy)>& backward,
             const GradCheckOptions* override_opts = nullptr) {
    const Tensor probe = forward();
    const Tensor c = random_tensor(probe.shape(), rng_);
    ScalarFunction f = [&](bool with_grad) {
      const Tensor y = forward();
      if (with_grad) backward(c);
      return dot(c, y);
    };
    record(op, f, tensors, override_opts);
  }

  void record(const std::string& op, const ScalarFunction& f, std::vector<NamedTensor> tensors,
              const GradCheckOptions* override_opts = nullptr) {
    GradCheckOptions g;
    g.step = options_.step;
    g.tolerance = options_.tolerance;
    g.seed = options_.seed;
    if (override_opts) g = *override_opts;
    const GradCheckReport report = grad_check(f, tensors, g);
    SuiteEntry e;
    e.op = op;
    for (const auto& t : report.tensors) {
      e.checked += t.checked;
      if (t.max_rel_error >= e.max_rel_error) {
        e.max_rel_error = t.max_rel_error;
        e.worst_tensor = t.name;
      }
    }
    e.passed = report.passed();
    entries_.push_back(e);
  }

  std::vector<SuiteEntry> take() { return std::move(entries_); }
  const SuiteOptions& options() const { return options_; }

 private:
  SuiteOptions options_;
  Rng rng_;
  std::vector<SuiteEntry> entries_;
};

template <typename P>
std::vector<NamedTensor> randomize(P& params, const std::string& prefix, Rng& rng,
                                   double scale) {
  std::vector<NamedTensor> out;
  params.visit(prefix, [&](const std::string& name, Tensor& t) {
    for (double& v : t.values()) v = scale * rng.normal();
    out.push_back({name, &t});
  });
  return out;
}

void elementwise_checks(Suite& s) {
  Rng& rng = s.rng();
  {
    Tensor x = away_from_zero({4, 5}, rng);
    s.check("relu", {{"x", &x}}, [&] { return relu(x); },
            [&](const Tensor& dy) { into(x, relu_backward(x, dy)); });
  }
  {
    Tensor x = random_tensor({4, 5}, rng, 1.5);
    s.check("gelu", {{"x", &x}}, [&] { return gelu(x); },
            [&](const Tensor& dy) { into(x, gelu_backward(x, dy)); });
  }
  {
    Tensor x = random_tensor({4, 5}, rng, 2.0);
    s.check("sigmoid", {{"x", &x}}, [&] { return sigmoid(x); },
            [&](const Tensor& dy) { into(x, sigmoid_backward(sigmoid(x), dy)); });
  }
  {
    Tensor x = random_tensor({4, 5}, rng, 1.5);
    s.check("tanh", {{"x", &x}}, [&] { return nd::tanh(x); },
            [&](const Tensor& dy) { into(x, tanh_backward(nd::tanh(x), dy)); });
  }
  for (std::size_t axis : {0u, 1u}) {
    Tensor x = random_tensor({4, 6}, rng, 1.5);
    s.check("softmax(axis=" + std::to_string(axis) + ")", {{"x", &x}},
            [&] { return softmax(x, axis); },
            [&](const Tensor& dy) { into(x, softmax_backward(softmax(x, axis), dy, axis)); });
  }
  {
    Tensor x = random_tensor({5, 7}, rng, 2.0);
    Tensor gamma = random_tensor({7}, rng);
    Tensor beta = random_tensor({7}, rng);
    s.check("layer_norm", {{"x", &x}, {"gamma", &gamma}, {"beta", &beta}},
            [&] { return layer_norm(x, gamma, beta); },
            [&](const Tensor& dy) {
              LayerNormCache cache;
              layer_norm(x, gamma, beta, &cache);
              into(x, layer_norm_backward(cache, gamma, beta, dy));
            });
  }
}

void structural_checks(Suite& s) {
  Rng& rng = s.rng();
  {
    Tensor x = random_tensor({3, 41}, rng);
    Tensor w = random_tensor({4, 3, 5}, rng, 0.5);
    Tensor b = random_tensor({4}, rng);
    s.check("conv1d", {{"x", &x}, {"w", &w}, {"b", &b}}, [&] { return conv1d(x, w, b, 3); },
            [&](const Tensor& dy) { into(x, conv1d_backward(x, w, b, 3, dy)); });
  }
  {
    Tensor x = random_tensor({5, 6}, rng);
    Tensor w = random_tensor({4, 6}, rng, 0.5);
    Tensor b = random_tensor({4}, rng);
    s.check("linear", {{"x", &x}, {"w", &w}, {"b", &b}}, [&] { return linear(x, w, b); },
            [&](const Tensor& dy) { into(x, linear_backward(x, w, b, dy)); });
  }
  {
    Tensor x = random_tensor({3, 5}, rng);
    s.check("transpose2d", {{"x", &x}}, [&] { return transpose2d(x); },
            [&](const Tensor& dy) { into(x, transpose2d(dy)); });
  }
  for (std::size_t axis : {0u, 1u, 2u}) {
    Tensor x = random_tensor({3, 4, 5}, rng);
    s.check("mean_pool(axis=" + std::to_string(axis) + ")", {{"x", &x}},
            [&] { return mean_pool(x, axis); },
            [&](const Tensor& dy) { into(x, mean_pool_backward(x.shape(), axis, dy)); });
  }
  {
    Tensor x = random_tensor({13, 3}, rng);
    s.check("adaptive_avg_pool", {{"x", &x}}, [&] { return adaptive_avg_pool_rows(x, 5); },
            [&](const Tensor& dy) { into(x, adaptive_avg_pool_rows_backward(x.shape(), dy)); });
  }
  {
    Tensor a = random_tensor({2, 3, 4}, rng);
    Tensor b = random_tensor({2, 3, 2}, rng);
    s.check("concat_last", {{"a", &a}, {"b", &b}}, [&] { return concat_last(a, b); },
            [&](const Tensor& dy) {
              Tensor da, db;
              split_last(dy, 4, &da, &db);
              into(a, da);
              into(b, db);
            });
  }
  {
    Tensor a = random_tensor({3, 4}, rng);
    Tensor b = random_tensor({3, 4}, rng);
    s.check("add", {{"a", &a}, {"b", &b}}, [&] { return add(a, b); },
            [&](const Tensor& dy) {
              into(a, dy);
              into(b, dy);
            });
  }
}

void sequence_checks(Suite& s) {
  Rng& rng = s.rng();
  {
    AttentionParams p(8);
    auto tensors = randomize(p, "attn", rng, 0.3);
    Tensor x = random_tensor({5, 8}, rng);
    tensors.insert(tensors.begin(), {"x", &x});
    s.check("multi_head_self_attention", tensors,
            [&] { return multi_head_self_attention(x, p, 2); },
            [&](const Tensor& dy) {
              AttentionCache cache;
              multi_head_self_attention(x, p, 2, &cache);
              into(x, multi_head_self_attention_backward(cache, p, dy));
            });
  }
  {
    TransformerParams p(8);
    auto tensors = randomize(p, "block", rng, 0.3);
    Tensor x = random_tensor({5, 8}, rng);
    tensors.insert(tensors.begin(), {"x", &x});
    s.check("transformer_block", tensors, [&] { return transformer_block(x, p, 2); },
            [&](const Tensor& dy) {
              TransformerCache cache;
              transformer_block(x, p, 2, &cache);
              into(x, transformer_block_backward(cache, p, dy));
            });
  }
  {
    GruCellParams p(3, 4);
    auto tensors = randomize(p, "gru", rng, 0.5);
    Tensor x = random_tensor({3}, rng);
    Tensor h = random_tensor({4}, rng, 0.5);
    tensors.insert(tensors.begin(), {{"x", &x}, {"h_prev", &h}});
    s.check("gru_cell", tensors, [&] { return gru_cell(x, h, p); },
            [&](const Tensor& dy) {
              GruCellCache cache;
              gru_cell(x, h, p, &cache);
              Tensor dx;
              into(h, gru_cell_backward(cache, p, dy, &dx));
              into(x, dx);
            });
  }
  {
    GruCellParams f(3, 4), b(3, 4);
    auto tensors = randomize(f, "bigru.fwd", rng, 0.5);
    auto tb = randomize(b, "bigru.bwd", rng, 0.5);
    tensors.insert(tensors.end(), tb.begin(), tb.end());
    Tensor x = random_tensor({6, 3}, rng);
    tensors.insert(tensors.begin(), {"x", &x});
    s.check("bigru", tensors, [&] { return bigru(x, f, b); },
            [&](const Tensor& dy) {
              BiGruCache cache;
              bigru(x, f, b, &cache);
              into(x, bigru_backward(cache, f, b, dy));
            });
  }
}

void loss_check(Suite& s) {
  Rng& rng = s.rng();
  Tensor y({7});
  for (double& v : y.values()) v = rng.uniform(0.05, 0.95);
  Tensor p({7});
  double total = 0.0;
  for (double& v : p.values()) total += (v = rng.uniform(0.1, 1.0));
  for (double& v : p.values()) v /= total;
  ScalarFunction f = [&](bool with_grad) {
    if (with_grad) y.accumulate_grad(train::focal_loss_grad(y, p, 2.0).values());
    return train::focal_loss(y, p, 2.0);
  };
  s.record("focal_loss", f, {{"pred", &y}});

  Tensor scores({7});
  for (double& v : scores.values()) v = rng.uniform(0.05, 0.95);
  s.check("normalize_scores", {{"scores", &scores}},
          [&] { return train::normalize_scores(scores); },
          [&](const Tensor& dy) { into(scores, train::normalize_scores_backward(scores, dy)); });
}

void end_to_end_check(Suite& s) {
  const WlannConfig cfg = WlannConfig::micro();
  WlannModel model(cfg);
  model.initialize(s.options().seed);
  dataio::AudioClip clip =
      dataio::synthesize_event(dataio::Label::kWheeze, 1.0, s.options().seed);
  const PreparedInput input = prepare_waveform(clip, cfg);
  const Tensor target = train::one_hot(dataio::label_index(dataio::Label::kWheeze), cfg.classes);
  ScalarFunction f = [&](bool with_grad) {
    ForwardCache cache;
    const Tensor probs = model.forward(input, with_grad ? &cache : nullptr);
    Tensor dprobs;
    const double loss = train::scored_loss(probs, target, cfg, with_grad ? &dprobs : nullptr);
    if (with_grad) model.backward(cache, dprobs);
    return loss;
  };
  GradCheckOptions g;
  g.step = s.options().step;
  g.tolerance = s.options().tolerance;
  g.seed = s.options().seed;
  g.max_entries_per_tensor = s.options().end_to_end_entries;
  s.record("end_to_end(micro)", f, model.params().named(), &g);
}

}  // namespace

std::vector<SuiteEntry> run_gradcheck_suite(const SuiteOptions& options) {
  Suite s(options);
  elementwise_checks(s);
  structural_checks(s);
  sequence_checks(s);
  loss_check(s);
  if (options.end_to_end) end_to_end_check(s);
  return s.take();
}

}  // namespace wlann::nd
