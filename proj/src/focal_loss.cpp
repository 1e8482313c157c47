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
#include "wlann/core/train.hpp"

namespace wlann::train {

namespace {

void check_target(const Tensor& pred, const Tensor& target, double gamma) {
  require(gamma >= 0.0, Errc::kValidation, "focal_loss: gamma must be >= 0");
  require(pred.size() == target.size() && !pred.empty(), Errc::kValidation,
          "focal_loss: prediction has " + std::to_string(pred.size()) +
              " entries, target has " + std::to_string(target.size()));
  double total = 0.0;
  for (double p : target.values()) {
    require(std::isfinite(p) && p >= 0.0, Errc::kValidation,
            "focal_loss: target entries must be >= 0");
    total += p;
  }
  require(std::abs(total - 1.0) <= 1e-9, Errc::kValidation,
          "focal_loss: target does not sum to 1");
}

double clamp_pred(double y) { return std::clamp(y, kPredictionClamp, 1.0 - kPredictionClamp); }

}  // namespace

double focal_loss(const Tensor& pred, const Tensor& target, double gamma) {
  check_target(pred, target, gamma);
  double loss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (target[i] == 0.0) continue;
    const double y = clamp_pred(pred[i]);
    loss -= target[i] * std::pow(1.0 - y, gamma) * std::log(y);
  }
  return loss;
}

Tensor focal_loss_grad(const Tensor& pred, const Tensor& target, double gamma) {
  check_target(pred, target, gamma);
  Tensor g(pred.shape());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (target[i] == 0.0) continue;
    if (pred[i] < kPredictionClamp || pred[i] > 1.0 - kPredictionClamp) continue;
    const double y = pred[i];
    const double q = 1.0 - y;
    // d/dy [-(1-y)^g log y] = g (1-y)^(g-1) log y - (1-y)^g / y
    double d = -std::pow(q, gamma) / y;
    if (gamma != 0.0) d += gamma * std::pow(q, gamma - 1.0) * std::log(y);
    g[i] = target[i] * d;
  }
  return g;
}

Tensor one_hot(int label, int classes) {
  require(label >= 0 && label < classes, Errc::kValidation,
          "label " + std::to_string(label) + " outside [0, " + std::to_string(classes) + ")");
  Tensor t({static_cast<std::size_t>(classes)});
  t[static_cast<std::size_t>(label)] = 1.0;
  return t;
}

Tensor normalize_scores(const Tensor& scores) {
  double total = 0.0;
  for (double v : scores.values()) {
    require(v >= 0.0, Errc::kValidation, "normalize_scores: negative score");
    total += v;
  }
  require(total > 0.0, Errc::kNumeric, "normalize_scores: scores sum to zero");
  Tensor y(scores.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = scores[i] / total;
  return y;
}

Tensor normalize_scores_backward(const Tensor& scores, const Tensor& dy) {
  double total = 0.0;
  for (double v : scores.values()) total += v;
  double inner = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) inner += scores[i] * dy[i];
  inner /= total;
  Tensor ds(scores.shape());
  for (std::size_t i = 0; i < ds.size(); ++i) ds[i] = (dy[i] - inner) / total;
  return ds;
}

double scored_loss(const Tensor& probs, const Tensor& target, const WlannConfig& cfg,
                   Tensor* dprobs) {
  if (cfg.loss_scores == "sigmoid") {
    if (dprobs) *dprobs = focal_loss_grad(probs, target, cfg.focal_gamma);
    return focal_loss(probs, target, cfg.focal_gamma);
  }
  const Tensor y = normalize_scores(probs);
  if (dprobs)
    *dprobs = normalize_scores_backward(probs, focal_loss_grad(y, target, cfg.focal_gamma));
  return focal_loss(y, target, cfg.focal_gamma);
}

}  // namespace wlann::train
