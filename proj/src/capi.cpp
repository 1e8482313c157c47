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

#include "wlann/wlann.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <string>
#include <utility>

#include <json.hpp>

#include "wlann/core/archive.hpp"
#include "wlann/core/dataio.hpp"
#include "wlann/core/error.hpp"
#include "wlann/core/eval.hpp"
#include "wlann/core/gradcheck_suite.hpp"
#include "wlann/core/log.hpp"
#include "wlann/core/model.hpp"
#include "wlann/core/rng.hpp"
#include "wlann/core/train.hpp"

struct wlann_config {
  wlann::WlannConfig cfg;
};

struct wlann_model {
  explicit wlann_model(wlann::train::TrainState s) : state(std::move(s)) {}
  wlann::train::TrainState state;
};

struct wlann_gradcheck {
  std::vector<wlann::nd::SuiteEntry> entries;
};

namespace {

using wlann::Errc;

thread_local std::string g_last_error;

wlann_status to_status(Errc code) {
  return static_cast<wlann_status>(static_cast<int>(code) + 1);
}

template <typename F>
wlann_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return WLANN_OK;
  } catch (const wlann::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("json: ") + e.what();
    return WLANN_ERR_CONFIG;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return WLANN_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return WLANN_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  wlann::require(p != nullptr, Errc::kPrecondition, std::string(what) + " is null");
}

void give(char** out, const std::string& s) {
  if (!out) return;
  char* buf = static_cast<char*>(std::malloc(s.size() + 1));
  if (!buf) throw std::bad_alloc();
  std::memcpy(buf, s.c_str(), s.size() + 1);
  *out = buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) wlann::fail(Errc::kIo, "cannot write " + path);
  out << text;
  if (!out) wlann::fail(Errc::kIo, "write failed: " + path);
}

nlohmann::ordered_json shapes_json(const wlann::WlannConfig& cfg) {
  const wlann::ShapeReport r = wlann::describe_shapes(cfg);
  nlohmann::ordered_json j;
  j["input_samples"] = r.input_samples;
  j["spec_frames"] = r.spec_frames;
  j["freq_patches"] = r.freq_patches;
  j["time_patches"] = r.time_patches;
  j["num_patches"] = r.num_patches;
  j["conv_lengths"] = r.conv_lengths;
  j["raw_frames"] = r.raw_frames;
  j["pooled_frames"] = r.pooled_frames;
  j["channel_groups"] = r.channel_groups;
  j["fused_channels"] = r.fused_channels;
  j["waveform_output"] = r.wo_shape;
  j["ast_output"] = r.ao_shape;
  j["fused"] = r.fused_shape;
  j["frame_features"] = r.frame_features_shape;
  return j;
}

}  // namespace

extern "C" {

const char* wlann_version(void) { return "1.0.0"; }

const char* wlann_last_error(void) { return g_last_error.c_str(); }

const char* wlann_status_name(wlann_status status) {
  if (status == WLANN_OK) return "ok";
  if (status == WLANN_ERR_INTERNAL) return "internal";
  if (status > WLANN_OK && status < WLANN_ERR_INTERNAL)
    return wlann::errc_name(static_cast<Errc>(static_cast<int>(status) - 1));
  return "unknown";
}

int wlann_exit_code(wlann_status status) {
  switch (status) {
    case WLANN_OK:
      return 0;
    case WLANN_ERR_IO:
    case WLANN_ERR_MAGIC_MISMATCH:
    case WLANN_ERR_TRUNCATED_PAYLOAD:
      return 2;
    case WLANN_ERR_NUMERIC:
    case WLANN_ERR_INTERNAL:
      return 3;
    default:
      return 1;
  }
}

void wlann_string_free(char* s) { std::free(s); }

void wlann_set_log_callback(wlann_log_fn fn, void* user) {
  if (!fn) {
    wlann::set_log_sink(nullptr);
    return;
  }
  wlann::set_log_sink([fn, user](wlann::LogLevel level, std::string_view msg) {
    const std::string text(msg);
    fn(level == wlann::LogLevel::kInfo ? WLANN_LOG_INFO : WLANN_LOG_WARNING, text.c_str(), user);
  });
}

int wlann_num_labels(void) { return wlann::dataio::kNumLabels; }

const char* wlann_label_name(int index) {
  if (index < 0 || index >= wlann::dataio::kNumLabels) return nullptr;
  return wlann::dataio::label_name(wlann::dataio::label_from_index(index)).data();
}

wlann_status wlann_config_create(const char* preset, wlann_config** out) {
  return guard([&] {
    need(out, "out");
    const std::string p = preset ? preset : "default";
    wlann::WlannConfig cfg;
    if (p == "micro")
      cfg = wlann::WlannConfig::micro();
    else if (p != "default")
      wlann::fail(Errc::kConfig, "unknown preset '" + p + "' (expected default or micro)");
    *out = new wlann_config{cfg};
  });
}

wlann_status wlann_config_load_file(wlann_config* cfg, const char* path) {
  return guard([&] {
    need(cfg, "config");
    need(path, "path");
    wlann::WlannConfig next = wlann::WlannConfig::load(path, cfg->cfg);
    next.validate();
    cfg->cfg = std::move(next);
  });
}

wlann_status wlann_config_merge_json(wlann_config* cfg, const char* json) {
  return guard([&] {
    need(cfg, "config");
    need(json, "json");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
      wlann::fail(Errc::kConfig, std::string("config overlay: ") + e.what());
    }
    wlann::WlannConfig next = wlann::WlannConfig::from_json(doc, cfg->cfg);
    next.validate();
    cfg->cfg = std::move(next);
  });
}

wlann_status wlann_config_to_json(const wlann_config* cfg, char** out) {
  return guard([&] {
    need(cfg, "config");
    give(out, cfg->cfg.to_json().dump(2));
  });
}

wlann_status wlann_config_shapes_json(const wlann_config* cfg, char** out) {
  return guard([&] {
    need(cfg, "config");
    give(out, shapes_json(cfg->cfg).dump(2));
  });
}

void wlann_config_free(wlann_config* cfg) { delete cfg; }

wlann_status wlann_synth(const char* out_dir, int per_class, uint64_t seed, char** summary) {
  return guard([&] {
    need(out_dir, "out_dir");
    wlann::require(per_class > 0, Errc::kValidation, "synth: per-class count must be positive");
    const auto splits = wlann::dataio::generate_synthetic_corpus(per_class, seed, out_dir);
    nlohmann::ordered_json j;
    j["out"] = out_dir;
    j["per_class"] = per_class;
    j["seed"] = seed;
    j["train"] = splits.train.events.size();
    j["test_intra"] = splits.test_intra.events.size();
    j["test_inter"] = splits.test_inter.events.size();
    give(summary, j.dump(2));
  });
}

wlann_status wlann_features(const wlann_config* cfg, const char* wav_path, const char* out_path,
                            int augment, uint64_t seed, char** summary) {
  return guard([&] {
    need(cfg, "config");
    need(wav_path, "wav_path");
    need(out_path, "out_path");
    const auto clip = wlann::dataio::load_wav(wav_path);
    const auto input = wlann::prepare_input(clip, cfg->cfg, augment != 0, seed);
    wlann::TensorArchive a;
    a.config = cfg->cfg.to_json();
    a.metadata["kind"] = "features";
    a.metadata["augment"] = augment != 0;
    a.metadata["seed"] = seed;
    a.metadata["source_rate_hz"] = clip.sample_rate_hz;
    a.metadata["source_samples"] = clip.size();
    a.add("waveform", input.waveform);
    wlann::nd::Tensor spec({static_cast<std::size_t>(input.spec.mel_bins),
                            static_cast<std::size_t>(input.spec.frames)},
                           input.spec.values);
    a.add("logmel", spec);
    wlann::write_archive(out_path, a);
    nlohmann::ordered_json j;
    j["out"] = out_path;
    j["waveform"] = input.waveform.shape();
    j["logmel"] = spec.shape();
    give(summary, j.dump(2));
  });
}

wlann_status wlann_train(const wlann_config* cfg, const char* data_dir, const char* out_path,
                         const wlann_train_options* options, char** summary) {
  return guard([&] {
    need(cfg, "config");
    need(data_dir, "data_dir");
    need(out_path, "out_path");
    wlann_train_options opts{1, 1, 1, nullptr};
    if (options) opts = *options;
    const auto corpus = wlann::dataio::load_corpus(data_dir);

    wlann::train::TrainState state =
        opts.resume_path ? wlann::train::load_checkpoint(opts.resume_path)
                         : wlann::train::init_state(cfg->cfg, cfg->cfg.seed);
    const wlann::WlannConfig& effective = state.model.config();
    const auto examples = wlann::train::load_examples(corpus, corpus.splits.train, effective);

    wlann::train::FitOptions fit;
    fit.epochs = opts.epochs;
    fit.out = out_path;
    fit.step.jobs = opts.jobs;
    fit.step.augment = opts.augment != 0;
    const auto epochs = wlann::train::fit(examples, state, fit);

    nlohmann::ordered_json j;
    j["out"] = out_path;
    j["train_events"] = examples.size();
    j["parameters"] = state.model.params().parameter_count();
    j["steps"] = state.step;
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& e : epochs)
      list.push_back({{"epoch", e.epoch}, {"mean_loss", e.mean_loss},
                      {"train_accuracy", e.train_accuracy}});
    j["epochs"] = list;
    give(summary, j.dump(2));
  });
}

wlann_status wlann_eval(const char* data_dir, const char* model_path, const char* split,
                        const char* report_path, int jobs, char** summary) {
  return guard([&] {
    need(data_dir, "data_dir");
    need(model_path, "model_path");
    need(split, "split");
    const auto state = wlann::train::load_checkpoint(model_path);
    const auto corpus = wlann::dataio::load_corpus(data_dir);
    const wlann::WlannConfig& cfg = state.model.config();

    const std::string name = split;
    std::vector<wlann::train::Example> examples;
    if (name == "heldout") {
      examples = wlann::train::load_examples(corpus, corpus.splits.test_intra, cfg);
      auto inter = wlann::train::load_examples(corpus, corpus.splits.test_inter, cfg);
      for (auto& e : inter) examples.push_back(std::move(e));
    } else {
      const auto which = wlann::dataio::parse_split_name(name);
      wlann::require(which.has_value(), Errc::kValidation,
                     "unknown split '" + name + "' (expected train, intra, inter or heldout)");
      examples = wlann::train::load_examples(corpus, corpus.splits.get(*which), cfg);
    }
    const auto report = wlann::eval::evaluate(state.model, examples, name, jobs);

    if (report_path) {
      nlohmann::ordered_json doc = wlann::eval::report_to_json(report);
      doc["model"] = {{"step", state.step}, {"epoch", state.epoch}, {"seed", state.seed}};
      doc["config"] = cfg.to_json();
      write_text(report_path, doc.dump(2) + "\n");
    }
    give(summary, wlann::eval::format_summary(report));
  });
}

wlann_status wlann_model_load(const char* path, wlann_model** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new wlann_model(wlann::train::load_checkpoint(path));
  });
}

int wlann_model_num_classes(const wlann_model* model) {
  return model ? model->state.model.config().classes : 0;
}

wlann_status wlann_model_predict_wav(const wlann_model* model, const char* wav_path, int* label,
                                     double* scores) {
  return guard([&] {
    need(model, "model");
    need(wav_path, "wav_path");
    const auto clip = wlann::dataio::load_wav(wav_path);
    const auto probs = model->state.model.forward(clip);
    if (label) *label = wlann::argmax(probs);
    if (scores)
      for (std::size_t i = 0; i < probs.size(); ++i) scores[i] = probs[i];
  });
}

void wlann_model_free(wlann_model* model) { delete model; }

wlann_status wlann_gradcheck_run(double tolerance, int end_to_end, uint64_t seed,
                                 wlann_gradcheck** out) {
  return guard([&] {
    need(out, "out");
    wlann::nd::SuiteOptions o;
    o.tolerance = tolerance;
    o.end_to_end = end_to_end != 0;
    o.seed = seed;
    *out = new wlann_gradcheck{wlann::nd::run_gradcheck_suite(o)};
  });
}

size_t wlann_gradcheck_count(const wlann_gradcheck* suite) {
  return suite ? suite->entries.size() : 0;
}

wlann_status wlann_gradcheck_entry(const wlann_gradcheck* suite, size_t index, const char** op,
                                   double* max_rel_error, size_t* checked, int* passed) {
  return guard([&] {
    need(suite, "suite");
    wlann::require(index < suite->entries.size(), Errc::kRange, "gradcheck entry out of range");
    const auto& e = suite->entries[index];
    if (op) *op = e.op.c_str();
    if (max_rel_error) *max_rel_error = e.max_rel_error;
    if (checked) *checked = e.checked;
    if (passed) *passed = e.passed ? 1 : 0;
  });
}

void wlann_gradcheck_free(wlann_gradcheck* suite) { delete suite; }

}  // extern "C"
