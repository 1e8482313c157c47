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

#include "wlann/core/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "wlann/core/dsp.hpp"
#include "wlann/core/error.hpp"

namespace wlann {

namespace {

using nlohmann::json;

std::size_t windows(std::size_t len, std::size_t size, std::size_t stride) {
  return len < size ? 0 : (len - size) / stride + 1;
}

template <typename T>
void take(const json& obj, const char* key, T& field, const std::string& path) {
  if (!obj.contains(key)) return;
  try {
    field = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(Errc::kConfig, "config: bad value for " + path + key + ": " + e.what());
  }
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& path) {
  if (!obj.is_object()) fail(Errc::kConfig, "config: " + path + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) fail(Errc::kConfig, "config: unknown key " + path + key);
  }
}

}  // namespace

std::size_t WlannConfig::input_samples() const {
  return static_cast<std::size_t>(std::llround(fixed_input_seconds * sample_rate));
}

std::size_t WlannConfig::spec_frames() const {
  return static_cast<std::size_t>(dsp::num_frames(static_cast<std::int64_t>(input_samples())));
}

std::size_t WlannConfig::freq_patches() const {
  return windows(static_cast<std::size_t>(ast.mel_bins), static_cast<std::size_t>(ast.patch),
                 static_cast<std::size_t>(ast.patch_stride));
}

std::size_t WlannConfig::time_patches() const {
  return windows(spec_frames(), static_cast<std::size_t>(ast.patch),
                 static_cast<std::size_t>(ast.patch_stride));
}

std::vector<std::size_t> WlannConfig::conv_lengths() const {
  std::vector<std::size_t> out;
  std::size_t len = input_samples();
  const auto k = static_cast<std::size_t>(cnn.kernel);
  len = windows(len, k, static_cast<std::size_t>(cnn.first_stride));
  out.push_back(len);
  for (int s : cnn.block_strides) {
    len = windows(len, k, static_cast<std::size_t>(s));
    out.push_back(len);
  }
  return out;
}

void WlannConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) fail(Errc::kConfig, "config: " + what);
  };
  need(sample_rate == dsp::kModelRateHz, "sample_rate must be 16000");
  need(fixed_input_seconds > 0.0, "fixed_input_seconds must be positive");
  need(ast.mel_bins == dsp::kMelBins, "ast.mel_bins must be 128");
  need(cnn.kernel >= 1 && cnn.first_stride >= 1, "cnn kernel and stride must be positive");
  for (int s : cnn.block_strides) need(s >= 1, "cnn block strides must be positive");
  need(cnn.widths.size() == cnn.block_strides.size() + 1,
       "cnn.widths needs one entry per conv layer (" +
           std::to_string(cnn.block_strides.size() + 1) + ")");
  for (int w : cnn.widths) need(w >= 1, "cnn widths must be positive");
  need(ast.patch >= 1 && ast.patch_stride >= 1, "patch geometry must be positive");
  need(ast.embed_dim >= 1 && ast.depth >= 0 && ast.heads >= 1, "bad transformer geometry");
  need(ast.embed_dim % ast.heads == 0,
       "ast.embed_dim " + std::to_string(ast.embed_dim) + " not divisible by heads " +
           std::to_string(ast.heads));
  need(input_samples() >= static_cast<std::size_t>(dsp::kWindowSamples),
       "input shorter than one analysis window");
  need(time_patches() >= 1, "input yields fewer spectrogram frames than one patch");
  need(freq_patches() >= 1, "patch taller than the spectrogram");
  need(raw_frames() >= 1, "input too short for the convolution stack");
  need(cnn_channels() % freq_patches() == 0,
       "cnn output width " + std::to_string(cnn_channels()) +
           " not divisible by the frequency patch count " + std::to_string(freq_patches()));
  need(gru_hidden >= 1, "gru_hidden must be positive");
  need(classes >= 2 && classes <= 7, "classes must be in [2, 7]");
  need(focal_gamma >= 0.0, "focal_gamma must be non-negative");
  need(loss_scores == "normalized" || loss_scores == "sigmoid",
       "loss_scores must be normalized or sigmoid");
  need(head_bias_init == "label_prior" || head_bias_init == "zero",
       "head_bias_init must be label_prior or zero");
  need(augment.time_warp_w >= 0 && augment.freq_mask_width >= 0 &&
           augment.freq_mask_count >= 0,
       "augment parameters must be non-negative");
  need(augment.freq_mask_width < ast.mel_bins, "augment.freq_mask_width must be below 128");
  need(optim.learning_rate >= 0.0 && optim.batch_size >= 1 && optim.clip_norm >= 0.0,
       "bad optimizer settings");
}

nlohmann::ordered_json WlannConfig::to_json() const {
  nlohmann::ordered_json j;
  j["fixed_input_seconds"] = fixed_input_seconds;
  j["sample_rate"] = sample_rate;
  j["cnn"] = {{"kernel", cnn.kernel},
              {"first_stride", cnn.first_stride},
              {"block_strides", cnn.block_strides},
              {"widths", cnn.widths}};
  j["ast"] = {{"mel_bins", ast.mel_bins},   {"patch", ast.patch},
              {"patch_stride", ast.patch_stride}, {"embed_dim", ast.embed_dim},
              {"depth", ast.depth},         {"heads", ast.heads}};
  j["gru_hidden"] = gru_hidden;
  j["classes"] = classes;
  j["focal_gamma"] = focal_gamma;
  j["loss_scores"] = loss_scores;
  j["head_bias_init"] = head_bias_init;
  j["augment"] = {{"time_warp_w", augment.time_warp_w},
                  {"freq_mask_width", augment.freq_mask_width},
                  {"freq_mask_count", augment.freq_mask_count}};
  j["optim"] = {{"learning_rate", optim.learning_rate}, {"beta1", optim.beta1},
                {"beta2", optim.beta2},                 {"epsilon", optim.epsilon},
                {"clip_norm", optim.clip_norm},         {"batch_size", optim.batch_size}};
  j["seed"] = seed;
  return j;
}

WlannConfig WlannConfig::from_json(const nlohmann::json& doc, const WlannConfig& base) {
  WlannConfig c = base;
  reject_unknown(doc,
                 {"fixed_input_seconds", "sample_rate", "cnn", "ast", "gru_hidden", "classes",
                  "focal_gamma", "loss_scores", "head_bias_init", "augment", "optim", "seed"},
                 "");
  take(doc, "fixed_input_seconds", c.fixed_input_seconds, "");
  take(doc, "sample_rate", c.sample_rate, "");
  take(doc, "gru_hidden", c.gru_hidden, "");
  take(doc, "classes", c.classes, "");
  take(doc, "focal_gamma", c.focal_gamma, "");
  take(doc, "loss_scores", c.loss_scores, "");
  take(doc, "head_bias_init", c.head_bias_init, "");
  take(doc, "seed", c.seed, "");
  if (doc.contains("cnn")) {
    const auto& o = doc["cnn"];
    reject_unknown(o, {"kernel", "first_stride", "block_strides", "widths"}, "cnn.");
    take(o, "kernel", c.cnn.kernel, "cnn.");
    take(o, "first_stride", c.cnn.first_stride, "cnn.");
    take(o, "block_strides", c.cnn.block_strides, "cnn.");
    take(o, "widths", c.cnn.widths, "cnn.");
  }
  if (doc.contains("ast")) {
    const auto& o = doc["ast"];
    reject_unknown(o, {"mel_bins", "patch", "patch_stride", "embed_dim", "depth", "heads"},
                   "ast.");
    take(o, "mel_bins", c.ast.mel_bins, "ast.");
    take(o, "patch", c.ast.patch, "ast.");
    take(o, "patch_stride", c.ast.patch_stride, "ast.");
    take(o, "embed_dim", c.ast.embed_dim, "ast.");
    take(o, "depth", c.ast.depth, "ast.");
    take(o, "heads", c.ast.heads, "ast.");
  }
  if (doc.contains("augment")) {
    const auto& o = doc["augment"];
    reject_unknown(o, {"time_warp_w", "freq_mask_width", "freq_mask_count"}, "augment.");
    take(o, "time_warp_w", c.augment.time_warp_w, "augment.");
    take(o, "freq_mask_width", c.augment.freq_mask_width, "augment.");
    take(o, "freq_mask_count", c.augment.freq_mask_count, "augment.");
  }
  if (doc.contains("optim")) {
    const auto& o = doc["optim"];
    reject_unknown(o, {"learning_rate", "beta1", "beta2", "epsilon", "clip_norm", "batch_size"},
                   "optim.");
    take(o, "learning_rate", c.optim.learning_rate, "optim.");
    take(o, "beta1", c.optim.beta1, "optim.");
    take(o, "beta2", c.optim.beta2, "optim.");
    take(o, "epsilon", c.optim.epsilon, "optim.");
    take(o, "clip_norm", c.optim.clip_norm, "optim.");
    take(o, "batch_size", c.optim.batch_size, "optim.");
  }
  return c;
}

WlannConfig WlannConfig::load(const std::filesystem::path& path, const WlannConfig& base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::kIo, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    fail(Errc::kConfig, path.string() + ": " + e.what());
  }
  return from_json(doc, base);
}

WlannConfig WlannConfig::micro() {
  WlannConfig c;
  c.fixed_input_seconds = 1.0;
  c.cnn.widths = {4, 8, 45, 45};
  c.ast.embed_dim = 8;
  c.ast.depth = 1;
  c.ast.heads = 2;
  c.gru_hidden = 4;
  c.augment = {2, 8, 1};
  c.optim.learning_rate = 2e-3;
  return c;
}

}  // namespace wlann
