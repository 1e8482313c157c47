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

#ifndef WLANN_CORE_CONFIG_HPP_
#define WLANN_CORE_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace wlann {

struct CnnConfig {
  int kernel = 80;
  int first_stride = 5;
  std::vector<int> block_strides = {4, 4, 4};
  std::vector<int> widths = {64, 128, 240, 240};  // one per conv layer
};

struct AstConfig {
  int mel_bins = 128;
  int patch = 16;
  int patch_stride = 8;
  int embed_dim = 64;
  int depth = 2;
  int heads = 4;
};

struct AugmentConfig {
  int time_warp_w = 5;
  int freq_mask_width = 24;
  int freq_mask_count = 2;
};

struct OptimConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 1.0;
  int batch_size = 8;
};

/// Every architectural and training hyperparameter. Geometry that follows
/// from the fields (frame counts, patch grid, fused width) is derived, not
/// stored.
struct WlannConfig {
  double fixed_input_seconds = 8.0;
  int sample_rate = 16000;
  CnnConfig cnn;
  AstConfig ast;
  int gru_hidden = 64;
  int classes = 7;
  double focal_gamma = 2.0;
  /// What the loss sees: "normalized" rescales the sigmoid scores to sum to
  /// one, "sigmoid" passes them unchanged.
  std::string loss_scores = "normalized";
  /// "label_prior" starts the head bias at the logit of each class's
  /// training frequency; "zero" leaves it at zero.
  std::string head_bias_init = "label_prior";
  AugmentConfig augment;
  OptimConfig optim;
  std::uint64_t seed = 0;

  std::size_t input_samples() const;
  std::size_t spec_frames() const;
  std::size_t freq_patches() const;  // F_common
  std::size_t time_patches() const;  // T_common
  std::size_t num_patches() const { return freq_patches() * time_patches(); }
  /// Time lengths after each convolution; the last is T_raw.
  std::vector<std::size_t> conv_lengths() const;
  std::size_t raw_frames() const { return conv_lengths().back(); }
  std::size_t cnn_channels() const { return static_cast<std::size_t>(cnn.widths.back()); }
  std::size_t channel_groups() const { return cnn_channels() / freq_patches(); }
  std::size_t fused_channels() const {
    return static_cast<std::size_t>(ast.embed_dim) + channel_groups();
  }

  /// Throws Errc::kConfig describing the first violated constraint.
  void validate() const;

  nlohmann::ordered_json to_json() const;
  /// Overlays the keys present in `doc` onto `base`; unknown keys are
  /// rejected.
  static WlannConfig from_json(const nlohmann::json& doc, const WlannConfig& base);
  static WlannConfig from_json(const nlohmann::json& doc) { return from_json(doc, {}); }
  static WlannConfig load(const std::filesystem::path& path, const WlannConfig& base);

  /// 1 s input, D = 8, H = 4, one transformer block: small enough for
  /// finite-difference checks of the whole network.
  static WlannConfig micro();
};

}  // namespace wlann

#endif  // WLANN_CORE_CONFIG_HPP_
