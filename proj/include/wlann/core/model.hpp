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

// The dual-branch classifier: a waveform CNN and a log-mel patch
// transformer fused along channels, pooled over frequency, context-modelled
// by a bidirectional GRU and mapped to per-class sigmoid scores.

#ifndef WLANN_CORE_MODEL_HPP_
#define WLANN_CORE_MODEL_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "wlann/core/config.hpp"
#include "wlann/core/dataio.hpp"
#include "wlann/core/dsp.hpp"
#include "wlann/core/ops.hpp"
#include "wlann/core/tensor.hpp"

namespace wlann {

using nd::Tensor;

/// Channel order of the fused tensor; written into checkpoint metadata.
inline constexpr const char* kFusionOrder = "ast_then_waveform";
inline constexpr const char* kInitScheme =
    "trunc_normal(0.02) for linear/embedding weights; trunc_normal(1/sqrt(fan_in)) for "
    "conv weights; normal(1/sqrt(H)) for GRU matrices; zero biases; unit layer-norm scale; "
    "head bias set from training label frequencies when head_bias_init is label_prior";

struct ConvLayerParams {
  Tensor weight, bias, ln_gamma, ln_beta;
};

struct WlannParams {
  std::vector<ConvLayerParams> conv;
  Tensor patch_w, patch_b, pos_embed;
  std::vector<nd::TransformerParams> blocks;
  Tensor final_gamma, final_beta;
  nd::GruCellParams gru_fwd, gru_bwd;
  Tensor head_w, head_b;

  template <typename F>
  void visit(F&& f) {
    for (std::size_t i = 0; i < conv.size(); ++i) {
      const std::string p = "cnn.conv" + std::to_string(i);
      f(p + ".weight", conv[i].weight);
      f(p + ".bias", conv[i].bias);
      f(p + ".ln.gamma", conv[i].ln_gamma);
      f(p + ".ln.beta", conv[i].ln_beta);
    }
    f("ast.patch_embed.weight", patch_w);
    f("ast.patch_embed.bias", patch_b);
    f("ast.pos_embed", pos_embed);
    for (std::size_t i = 0; i < blocks.size(); ++i)
      blocks[i].visit("ast.block" + std::to_string(i), f);
    f("ast.final_ln.gamma", final_gamma);
    f("ast.final_ln.beta", final_beta);
    gru_fwd.visit("gru.fwd", f);
    gru_bwd.visit("gru.bwd", f);
    f("head.weight", head_w);
    f("head.bias", head_b);
  }

  std::vector<nd::NamedTensor> named();
  std::size_t parameter_count();
};

/// Model-ready input: the band-passed, fixed-length 16 kHz waveform and its
/// log-mel spectrogram.
struct PreparedInput {
  Tensor waveform;  // [1 x L]
  dsp::LogMelSpectrogram spec;
};

/// resample -> band-pass -> centered zero pad / crop -> log-mel, plus
/// SpecAugment on the spectrogram when train_mode is set.
PreparedInput prepare_input(const dataio::AudioClip& clip, const WlannConfig& cfg,
                            bool train_mode, std::uint64_t seed);
/// The deterministic part of prepare_input (no augmentation).
PreparedInput prepare_waveform(const dataio::AudioClip& clip, const WlannConfig& cfg);
/// Centered symmetric zero pad or crop to exactly `length` samples.
std::vector<double> pad_or_crop(const std::vector<double>& samples, std::size_t length);

struct ShapeReport {
  std::size_t input_samples = 0;
  std::size_t spec_frames = 0;
  std::size_t freq_patches = 0;
  std::size_t time_patches = 0;
  std::size_t num_patches = 0;
  std::vector<std::size_t> conv_lengths;
  std::size_t raw_frames = 0;
  std::size_t pooled_frames = 0;
  std::size_t channel_groups = 0;
  std::size_t fused_channels = 0;
  nd::Shape wo_shape, ao_shape, fused_shape, frame_features_shape;
};

struct CnnCache {
  std::vector<Tensor> conv_in;             // [C_in x L] per layer
  std::vector<nd::LayerNormCache> ln;      // over channels, rows = time
  std::vector<Tensor> ln_out;              // [L x C] (GELU input)
  Tensor raw;                              // [T_raw x C_w]
};

struct AstCache {
  Tensor patches;  // [N x patch*patch]
  std::vector<nd::TransformerCache> blocks;
  nd::LayerNormCache final_ln;
};

struct HeadCache {
  nd::Shape fused_shape;
  Tensor frames;  // [T x C] after frequency pooling
  nd::BiGruCache gru;
  Tensor gru_out;  // [T x 2H]
  Tensor pooled;   // [2H]
  Tensor probabilities;
};

struct ForwardCache {
  CnnCache cnn;
  AstCache ast;
  HeadCache head;
};

struct HeadOutput {
  Tensor probabilities;   // [classes]
  Tensor frame_features;  // [T x 2H]
};

class WlannModel {
 public:
  explicit WlannModel(WlannConfig cfg);

  const WlannConfig& config() const { return cfg_; }
  WlannParams& params() { return params_; }
  const WlannParams& params() const { return params_; }

  /// Deterministic initialization from the seed (see kInitScheme).
  void initialize(std::uint64_t seed);
  /// Rounds every parameter to the nearest 32-bit float.
  void round_to_float32();
  void set_requires_grad(bool on);
  void zero_grad();

  /// [1 x L] -> WO [F x T x C_w/F].
  Tensor waveform_branch(const Tensor& waveform, CnnCache* cache = nullptr) const;
  /// [128 x T] spectrogram -> AO [F x T_p x D].
  Tensor ast_branch(const dsp::LogMelSpectrogram& spec, AstCache* cache = nullptr) const;
  /// AO channels first, then WO channels.
  static Tensor fuse(const Tensor& wo, const Tensor& ao);
  HeadOutput classify_head(const Tensor& fused, HeadCache* cache = nullptr) const;

  /// Per-class sigmoid scores.
  Tensor forward(const PreparedInput& input, ForwardCache* cache = nullptr) const;
  Tensor forward(const dataio::AudioClip& clip, bool train_mode = false,
                 std::uint64_t seed = 0) const;
  /// Accumulates d(loss)/d(param) into the parameter grad buffers given
  /// d(loss)/d(probabilities).
  void backward(const ForwardCache& cache, const Tensor& dprobs);

  ShapeReport describe_shapes() const;

 private:
  Tensor backward_cnn(const CnnCache& cache, const Tensor& dwo);
  void backward_ast(const AstCache& cache, const Tensor& dao);
  Tensor backward_head(const HeadCache& cache, const Tensor& dprobs);

  WlannConfig cfg_;
  WlannParams params_;
};

/// Tensor geometry implied by a config, without allocating parameters.
ShapeReport describe_shapes(const WlannConfig& cfg);

/// Index of the largest score; ties resolve to the lowest index.
int argmax(const Tensor& scores);

}  // namespace wlann

#endif  // WLANN_CORE_MODEL_HPP_
