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
#include <cstdio>
#include <exception>
#include <numeric>
#include <thread>

#include "wlann/core/error.hpp"
#include "wlann/core/eval.hpp"
#include "wlann/core/log.hpp"
#include "wlann/core/rng.hpp"
#include "wlann/core/train.hpp"

namespace wlann::train {

namespace {

double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

std::vector<Tensor*> param_list(WlannModel& model) {
  std::vector<Tensor*> out;
  model.params().visit([&](const std::string&, Tensor& t) { out.push_back(&t); });
  return out;
}

std::vector<std::string> param_names(WlannModel& model) {
  std::vector<std::string> out;
  model.params().visit([&](const std::string& n, Tensor&) { out.push_back(n); });
  return out;
}

struct ItemResult {
  double loss = 0.0;
  int prediction = 0;
  std::vector<double> grad;
  std::exception_ptr error;
};

void run_item(WlannModel& model, const Example& ex, const TrainState& state,
              const StepOptions& options, ItemResult& out) {
  try {
    const WlannConfig& cfg = model.config();
    PreparedInput augmented;
    const PreparedInput* input = &ex.input;
    if (options.augment) {
      const std::uint64_t seed =
          Rng::derive(state.seed, hash_name("augment"), state.step, hash_name(ex.id)).next_u64();
      dsp::AugmentParams aug{cfg.augment.time_warp_w, cfg.augment.freq_mask_width,
                             cfg.augment.freq_mask_count, seed};
      augmented.waveform = ex.input.waveform;
      augmented.spec = dsp::spec_augment(ex.input.spec, aug);
      input = &augmented;
    }
    ForwardCache cache;
    const Tensor probs = model.forward(*input, &cache);
    const Tensor target = one_hot(ex.label, cfg.classes);
    const auto non_finite = [&] {
      fail(Errc::kNumeric, "non-finite loss at step " + std::to_string(state.step + 1) +
                               " on example " + ex.id);
    };
    for (double v : probs.values())
      if (!std::isfinite(v)) non_finite();
    Tensor dprobs;
    out.loss = scored_loss(probs, target, cfg, &dprobs);
    if (!std::isfinite(out.loss)) non_finite();
    out.prediction = argmax(probs);
    model.zero_grad();
    model.backward(cache, dprobs);
    out.grad.clear();
    for (Tensor* t : param_list(model)) {
      if (t->has_grad())
        out.grad.insert(out.grad.end(), t->grad().begin(), t->grad().end());
      else
        out.grad.insert(out.grad.end(), t->size(), 0.0);
    }
  } catch (...) {
    out.error = std::current_exception();
  }
}

}  // namespace

Example make_example(const dataio::AudioClip& clip, int label, std::string id,
                     const WlannConfig& cfg) {
  require(label >= 0 && label < cfg.classes, Errc::kValidation,
          "example " + id + ": label " + std::to_string(label) + " outside the class range");
  Example ex;
  ex.id = std::move(id);
  ex.label = label;
  ex.input = prepare_waveform(clip, cfg);
  return ex;
}

std::vector<Example> load_examples(const dataio::Corpus& corpus,
                                   const dataio::DatasetSplit& split, const WlannConfig& cfg) {
  std::vector<Example> out;
  out.reserve(split.events.size());
  for (const auto& e : split.events) {
    const std::string id = e.recording_id + "@" + std::to_string(e.onset_ms);
    out.push_back(make_example(corpus.load_event(e), dataio::label_index(e.label), id, cfg));
  }
  return out;
}

TrainState init_state(const WlannConfig& cfg, std::uint64_t seed) {
  TrainState s(cfg);
  s.seed = seed;
  s.model.initialize(seed);
  s.model.set_requires_grad(true);
  for (Tensor* t : param_list(s.model)) {
    s.adam_m.emplace_back(t->shape());
    s.adam_v.emplace_back(t->shape());
  }
  return s;
}

double train_step(std::span<const Example* const> batch, TrainState& state,
                  const StepOptions& options, std::vector<int>* predictions) {
  require(!batch.empty(), Errc::kPrecondition, "train_step: empty batch");
  const WlannConfig& cfg = state.model.config();
  for (const Example* ex : batch)
    require(ex->label >= 0 && ex->label < cfg.classes, Errc::kValidation,
            "train_step: invalid label on example " + ex->id);

  const std::size_t n = batch.size();
  std::vector<ItemResult> results(n);
  const std::size_t jobs = std::min<std::size_t>(std::max(options.jobs, 1), n);
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) run_item(state.model, *batch[i], state, options, results[i]);
  } else {
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        WlannModel replica = state.model;
        for (std::size_t i = w; i < n; i += jobs)
          run_item(replica, *batch[i], state, options, results[i]);
      });
    }
    for (auto& t : workers) t.join();
  }
  for (const auto& r : results)
    if (r.error) std::rethrow_exception(r.error);

  std::vector<double> grad = std::move(results[0].grad);
  double loss = results[0].loss;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += results[i].grad[k];
    loss += results[i].loss;
  }
  const double inv = 1.0 / static_cast<double>(n);
  loss *= inv;
  double sq = 0.0;
  for (double& g : grad) {
    g *= inv;
    sq += g * g;
  }
  const OptimConfig& opt = cfg.optim;
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm))
    fail(Errc::kNumeric, "non-finite gradient at step " + std::to_string(state.step));
  const double scale = (opt.clip_norm > 0.0 && norm > opt.clip_norm) ? opt.clip_norm / norm : 1.0;

  const double t = static_cast<double>(state.step + 1);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  std::size_t k = 0;
  const auto params = param_list(state.model);
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& w = *params[p];
    Tensor& m = state.adam_m[p];
    Tensor& v = state.adam_v[p];
    for (std::size_t i = 0; i < w.size(); ++i, ++k) {
      const double g = grad[k] * scale;
      m[i] = to_f32(opt.beta1 * m[i] + (1.0 - opt.beta1) * g);
      v[i] = to_f32(opt.beta2 * v[i] + (1.0 - opt.beta2) * g * g);
      const double step = opt.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + opt.epsilon);
      w[i] = to_f32(w[i] - step);
    }
  }
  ++state.step;
  state.last_loss = loss;
  if (predictions)
    for (const auto& r : results) predictions->push_back(r.prediction);
  return loss;
}

void apply_label_prior(WlannModel& model, std::span<const Example> examples) {
  require(!examples.empty(), Errc::kEmptyInput, "apply_label_prior: no examples");
  Tensor& bias = model.params().head_b;
  std::vector<double> counts(bias.size(), 0.0);
  for (const auto& ex : examples) {
    require(ex.label >= 0 && static_cast<std::size_t>(ex.label) < counts.size(),
            Errc::kValidation, "apply_label_prior: label out of range in " + ex.id);
    counts[static_cast<std::size_t>(ex.label)] += 1.0;
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const double pi = std::clamp(counts[c] / static_cast<double>(examples.size()), 1e-3, 1.0 - 1e-3);
    bias[c] = static_cast<double>(static_cast<float>(std::log(pi / (1.0 - pi))));
  }
}

std::vector<EpochSummary> fit(const std::vector<Example>& examples, TrainState& state,
                              const FitOptions& options) {
  require(options.epochs >= 0, Errc::kValidation, "fit: epochs must be >= 0");
  std::vector<EpochSummary> out;
  if (state.step == 0 && !examples.empty() &&
      state.model.config().head_bias_init == "label_prior")
    apply_label_prior(state.model, examples);
  if (state.epoch >= options.epochs) {
    if (!options.out.empty()) save_checkpoint(options.out, state);
    return out;
  }
  require(!examples.empty(), Errc::kEmptyInput, "fit: empty training split");
  const std::size_t batch = static_cast<std::size_t>(std::max(state.model.config().optim.batch_size, 1));

  for (int e = state.epoch; e < options.epochs; ++e) {
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::derive(state.seed, hash_name("shuffle"), static_cast<std::uint64_t>(e));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);

    EpochSummary summary;
    summary.epoch = e + 1;
    double loss_sum = 0.0;
    std::vector<const Example*> items;
    std::vector<int> preds;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      items.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + batch); ++i)
        items.push_back(&examples[order[i]]);
      const std::size_t first = preds.size();
      const double loss = train_step(items, state, options.step, &preds);
      loss_sum += loss * static_cast<double>(items.size());
      for (std::size_t i = 0; i < items.size(); ++i)
        summary.pairs.emplace_back(items[i]->label, preds[first + i]);
    }
    summary.mean_loss = loss_sum / static_cast<double>(examples.size());
    std::size_t correct = 0;
    for (const auto& [t, p] : summary.pairs) correct += (t == p);
    summary.train_accuracy = static_cast<double>(correct) / static_cast<double>(summary.pairs.size());
    state.epoch = e + 1;
    state.epoch_losses.push_back(summary.mean_loss);

    const eval::ScoreReport report = eval::score(summary.pairs, state.model.config().classes, "train");
    char line[256];
    std::snprintf(line, sizeof line, "epoch %d/%d step %llu mean_loss %.6f train_acc %.4f SN %s SP %s",
                  e + 1, options.epochs, static_cast<unsigned long long>(state.step),
                  summary.mean_loss, summary.train_accuracy,
                  eval::format_ratio(report.sn).c_str(), eval::format_ratio(report.sp).c_str());
    log_info(line);
    if (!options.out.empty()) save_checkpoint(options.out, state);
    out.push_back(std::move(summary));
  }
  return out;
}

TensorArchive to_archive(const TrainState& state) {
  auto& model = const_cast<WlannModel&>(state.model);
  TensorArchive a;
  a.config = model.config().to_json();
  auto& md = a.metadata;
  md["format_version"] = kCheckpointVersion;
  md["step"] = state.step;
  md["epoch"] = state.epoch;
  md["seed"] = state.seed;
  md["last_loss"] = state.last_loss;
  md["epoch_losses"] = state.epoch_losses;
  md["fusion_order"] = kFusionOrder;
  md["init"] = kInitScheme;
  md["precision"] = "float32";
  std::vector<std::string> labels;
  for (int i = 0; i < model.config().classes; ++i)
    labels.emplace_back(dataio::label_name(dataio::label_from_index(i)));
  md["labels"] = labels;

  const auto names = param_names(model);
  const auto params = param_list(model);
  for (std::size_t i = 0; i < params.size(); ++i) a.add(names[i], *params[i]);
  for (std::size_t i = 0; i < params.size() && i < state.adam_m.size(); ++i) {
    a.add("adam.m." + names[i], state.adam_m[i]);
    a.add("adam.v." + names[i], state.adam_v[i]);
  }
  return a;
}

void save_checkpoint(const std::filesystem::path& path, const TrainState& state) {
  write_archive(path, to_archive(state));
}

TrainState state_from_archive(const TensorArchive& archive, const std::string& origin) {
  const WlannConfig cfg = WlannConfig::from_json(archive.config);
  TrainState s = init_state(cfg, 0);
  const auto& md = archive.metadata;
  if (md.contains("fusion_order"))
    require(md["fusion_order"] == kFusionOrder, Errc::kConfig,
            origin + ": unsupported fusion order " + md["fusion_order"].dump());
  s.step = md.value("step", std::uint64_t{0});
  s.epoch = md.value("epoch", 0);
  s.seed = md.value("seed", std::uint64_t{0});
  s.last_loss = md.value("last_loss", 0.0);
  s.epoch_losses = md.value("epoch_losses", std::vector<double>{});

  const auto names = param_names(s.model);
  const auto params = param_list(s.model);
  auto fill = [&](const std::string& name, Tensor& t, bool required) {
    const NamedArray* a = archive.find(name);
    if (!a) {
      if (required) fail(Errc::kShapeMismatch, origin + ": missing tensor " + name);
      return;
    }
    if (a->shape != t.shape())
      fail(Errc::kShapeMismatch, origin + ": tensor " + name + " has shape " +
                                     nd::shape_str(a->shape) + ", config expects " +
                                     nd::shape_str(t.shape()));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(a->values[i]);
  };
  std::vector<std::string> known;
  for (std::size_t i = 0; i < params.size(); ++i) {
    fill(names[i], *params[i], true);
    fill("adam.m." + names[i], s.adam_m[i], false);
    fill("adam.v." + names[i], s.adam_v[i], false);
    known.push_back(names[i]);
    known.push_back("adam.m." + names[i]);
    known.push_back("adam.v." + names[i]);
  }
  std::sort(known.begin(), known.end());
  for (const auto& t : archive.tensors)
    if (!std::binary_search(known.begin(), known.end(), t.name))
      log_warning(origin + ": ignoring unknown tensor " + t.name);
  return s;
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  return state_from_archive(read_archive(path), path.string());
}

}  // namespace wlann::train
