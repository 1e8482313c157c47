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

// Focal-loss training: loss, Adam with global-norm clipping, deterministic
// batching, epoch loop and checkpoints.

#ifndef WLANN_CORE_TRAIN_HPP_
#define WLANN_CORE_TRAIN_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "wlann/core/archive.hpp"
#include "wlann/core/config.hpp"
#include "wlann/core/dataio.hpp"
#include "wlann/core/model.hpp"

namespace wlann::train {

inline constexpr double kPredictionClamp = 1e-7;
inline constexpr int kCheckpointVersion = 1;

/// -sum_i p_i (1 - y_i)^gamma log y_i with y clamped to [eps, 1 - eps].
/// Errc::kValidation unless p is a distribution of matching size.
double focal_loss(const Tensor& pred, const Tensor& target, double gamma);
/// d(focal_loss)/d(pred); zero where the clamp is active.
Tensor focal_loss_grad(const Tensor& pred, const Tensor& target, double gamma);
Tensor one_hot(int label, int classes);

/// s / sum(s): turns per-class sigmoid scores into a distribution.
Tensor normalize_scores(const Tensor& scores);
Tensor normalize_scores_backward(const Tensor& scores, const Tensor& dy);

/// Focal loss of the model output under cfg.loss_scores and its gradient
/// with respect to the sigmoid scores.
double scored_loss(const Tensor& probs, const Tensor& target, const WlannConfig& cfg,
                   Tensor* dprobs = nullptr);

/// A labelled event with its deterministic model input cached.
struct Example {
  std::string id;
  int label = 0;
  PreparedInput input;
};

Example make_example(const dataio::AudioClip& clip, int label, std::string id,
                     const WlannConfig& cfg);
/// Every event of a split, in split order.
std::vector<Example> load_examples(const dataio::Corpus& corpus,
                                   const dataio::DatasetSplit& split, const WlannConfig& cfg);

struct TrainState {
  explicit TrainState(const WlannConfig& cfg) : model(cfg) {}

  WlannModel model;
  std::vector<Tensor> adam_m, adam_v;  // parallel to model.params().named()
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
  int epoch = 0;  // completed epochs
  std::vector<double> epoch_losses;
  double last_loss = 0.0;
};

/// Initialized parameters, zero moments.
TrainState init_state(const WlannConfig& cfg, std::uint64_t seed);

/// Sets head bias c to logit(pi_c), pi_c the share of class c among the
/// examples, clamped to [1e-3, 1 - 1e-3].
void apply_label_prior(WlannModel& model, std::span<const Example> examples);

struct StepOptions {
  bool augment = true;
  int jobs = 1;
};

/// One Adam update on the mean focal loss of the batch. Per-item gradients
/// are summed in batch order whatever the job count. Errc::kNumeric on a
/// non-finite loss, naming the step and the example.
/// `predictions` receives the argmax of each item's training-time scores.
double train_step(std::span<const Example* const> batch, TrainState& state,
                  const StepOptions& options = {}, std::vector<int>* predictions = nullptr);

struct EpochSummary {
  int epoch = 0;
  double mean_loss = 0.0;
  double train_accuracy = 0.0;
  std::vector<std::pair<int, int>> pairs;  // (true, predicted) on the train split
};

struct FitOptions {
  int epochs = 1;
  std::filesystem::path out;  // empty: no checkpoints
  StepOptions step;
};

/// Runs epochs [state.epoch, options.epochs) with a seeded shuffle per
/// epoch and writes the checkpoint after each one (and once up front when
/// no epoch runs).
std::vector<EpochSummary> fit(const std::vector<Example>& examples, TrainState& state,
                              const FitOptions& options);

TensorArchive to_archive(const TrainState& state);
void save_checkpoint(const std::filesystem::path& path, const TrainState& state);
/// Errc::kShapeMismatch when a stored tensor disagrees with the embedded
/// config or a parameter is missing. Unknown names are skipped with a
/// warning.
TrainState state_from_archive(const TensorArchive& archive, const std::string& origin);
TrainState load_checkpoint(const std::filesystem::path& path);

}  // namespace wlann::train

#endif  // WLANN_CORE_TRAIN_HPP_
