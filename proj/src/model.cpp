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

#include "wlann/core/model.hpp"

#include <cmath>

#include "wlann/core/error.hpp"
#include "wlann/core/rng.hpp"

namespace wlann {

namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::vector<nd::NamedTensor> WlannParams::named() {
  std::vector<nd::NamedTensor> out;
  visit([&](const std::string& name, Tensor& t) { out.push_back({name, &t}); });
  return out;
}

std::size_t WlannParams::parameter_count() {
  std::size_t n = 0;
  visit([&](const std::string&, Tensor& t) { n += t.size(); });
  return n;
}

std::vector<double> pad_or_crop(const std::vector<double>& samples, std::size_t length) {
  std::vector<double> out(length, 0.0);
  const std::size_t n = samples.size();
  if (n <= length) {
    const std::size_t left = (length - n) / 2;
    std::copy(samples.begin(), samples.end(), out.begin() + static_cast<std::ptrdiff_t>(left));
  } else {
    const std::size_t start = (n - length) / 2;
    std::copy_n(samples.begin() + static_cast<std::ptrdiff_t>(start), length, out.begin());
  }
  return out;
}

PreparedInput prepare_waveform(const dataio::AudioClip& clip, const WlannConfig& cfg) {
  require(!clip.samples.empty(), Errc::kEmptyInput, "prepare_input: empty clip");
  static const dsp::BandpassFilter filter = dsp::respiratory_bandpass(dsp::kModelRateHz);
  const dataio::AudioClip resampled = dsp::resample(clip, dsp::kModelRateHz);
  const dataio::AudioClip filtered = dsp::apply_filter(filter, resampled);

  dataio::AudioClip fixed;
  fixed.sample_rate_hz = dsp::kModelRateHz;
  fixed.samples = pad_or_crop(filtered.samples, cfg.input_samples());

  PreparedInput out;
  out.spec = dsp::log_mel(fixed);
  const std::size_t length = fixed.samples.size();
  out.waveform = Tensor({1, length}, std::move(fixed.samples));
  return out;
}

PreparedInput prepare_input(const dataio::AudioClip& clip, const WlannConfig& cfg,
                            bool train_mode, std::uint64_t seed) {
  PreparedInput out = prepare_waveform(clip, cfg);
  if (train_mode) {
    dsp::AugmentParams aug{cfg.augment.time_warp_w, cfg.augment.freq_mask_width,
                           cfg.augment.freq_mask_count, seed};
    out.spec = dsp::spec_augment(out.spec, aug);
  }
  return out;
}

WlannModel::WlannModel(WlannConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const std::size_t k = static_cast<std::size_t>(cfg_.cnn.kernel);
  std::size_t cin = 1;
  for (int w : cfg_.cnn.widths) {
    const auto cout = static_cast<std::size_t>(w);
    params_.conv.push_back({Tensor({cout, cin, k}), Tensor({cout}), Tensor({cout}, 1.0),
                            Tensor({cout})});
    cin = cout;
  }
  const auto d = static_cast<std::size_t>(cfg_.ast.embed_dim);
  const auto patch = static_cast<std::size_t>(cfg_.ast.patch);
  params_.patch_w = Tensor({d, patch * patch});
  params_.patch_b = Tensor({d});
  params_.pos_embed = Tensor({cfg_.num_patches(), d});
  for (int i = 0; i < cfg_.ast.depth; ++i) params_.blocks.emplace_back(d);
  params_.final_gamma = Tensor({d}, 1.0);
  params_.final_beta = Tensor({d});
  const auto hidden = static_cast<std::size_t>(cfg_.gru_hidden);
  params_.gru_fwd = nd::GruCellParams(cfg_.fused_channels(), hidden);
  params_.gru_bwd = nd::GruCellParams(cfg_.fused_channels(), hidden);
  params_.head_w = Tensor({static_cast<std::size_t>(cfg_.classes), 2 * hidden});
  params_.head_b = Tensor({static_cast<std::size_t>(cfg_.classes)});
}

void WlannModel::initialize(std::uint64_t seed) {
  const double gru_sigma = 1.0 / std::sqrt(static_cast<double>(cfg_.gru_hidden));
  params_.visit([&](const std::string& name, Tensor& t) {
    Rng rng = Rng::derive(seed, hash_name(name));
    auto& v = t.storage();
    const bool is_gru = name.rfind("gru.", 0) == 0;
    const std::string leaf = name.substr(name.rfind('.') + 1);
    if (ends_with(name, ".gamma")) {
      std::fill(v.begin(), v.end(), 1.0);
    } else if (ends_with(name, ".bias") || ends_with(name, ".beta") ||
               (is_gru && leaf.front() == 'b')) {
      std::fill(v.begin(), v.end(), 0.0);
    } else if (is_gru) {
      for (double& x : v) x = rng.normal() * gru_sigma;
    } else if (name.rfind("cnn.", 0) == 0) {
      const double sigma = 1.0 / std::sqrt(static_cast<double>(t.dim(1) * t.dim(2)));
      for (double& x : v) x = rng.truncated_normal(sigma);
    } else {
      for (double& x : v) x = rng.truncated_normal(0.02);
    }
  });
  round_to_float32();
}

void WlannModel::round_to_float32() {
  params_.visit([](const std::string&, Tensor& t) {
    for (double& x : t.storage()) x = static_cast<double>(static_cast<float>(x));
  });
}

void WlannModel::set_requires_grad(bool on) {
  params_.visit([on](const std::string&, Tensor& t) { t.set_requires_grad(on); });
}

void WlannModel::zero_grad() {
  params_.visit([](const std::string&, Tensor& t) {
    if (t.requires_grad()) t.zero_grad();
  });
}

Tensor WlannModel::waveform_branch(const Tensor& waveform, CnnCache* cache) const {
  require(waveform.rank() == 2 && waveform.dim(0) == 1 &&
              waveform.dim(1) == cfg_.input_samples(),
          Errc::kConfig,
          "waveform branch: expected [1 x " + std::to_string(cfg_.input_samples()) +
              "], got " + nd::shape_str(waveform.shape()));
  CnnCache local;
  CnnCache& c = cache ? *cache : local;
  const std::size_t layers = params_.conv.size();
  c.conv_in.assign(layers, {});
  c.ln.assign(layers, {});
  c.ln_out.assign(layers, {});

  Tensor x = waveform;
  Tensor act;
  for (std::size_t i = 0; i < layers; ++i) {
    const auto& p = params_.conv[i];
    const auto stride = static_cast<std::size_t>(
        i == 0 ? cfg_.cnn.first_stride : cfg_.cnn.block_strides[i - 1]);
    const Tensor y = nd::conv1d(x, p.weight, p.bias, stride);
    Tensor normed = nd::layer_norm(nd::transpose2d(y), p.ln_gamma, p.ln_beta, &c.ln[i]);
    act = nd::gelu(normed);
    c.ln_out[i] = std::move(normed);
    c.conv_in[i] = std::move(x);
    if (i + 1 < layers) x = nd::transpose2d(act);
  }
  c.raw = act;

  const std::size_t f = cfg_.freq_patches(), t = cfg_.time_patches();
  const std::size_t groups = cfg_.channel_groups();
  const Tensor pooled = nd::adaptive_avg_pool_rows(act, t);
  Tensor wo({f, t, groups});
  for (std::size_t fi = 0; fi < f; ++fi)
    for (std::size_t ti = 0; ti < t; ++ti)
      for (std::size_t g = 0; g < groups; ++g) wo.at(fi, ti, g) = pooled.at(ti, g * f + fi);
  return wo;
}

Tensor WlannModel::backward_cnn(const CnnCache& cache, const Tensor& dwo) {
  const std::size_t f = cfg_.freq_patches(), t = cfg_.time_patches();
  const std::size_t groups = cfg_.channel_groups();
  Tensor dpooled({t, f * groups});
  for (std::size_t fi = 0; fi < f; ++fi)
    for (std::size_t ti = 0; ti < t; ++ti)
      for (std::size_t g = 0; g < groups; ++g) dpooled.at(ti, g * f + fi) = dwo.at(fi, ti, g);
  Tensor dact = nd::adaptive_avg_pool_rows_backward(cache.raw.shape(), dpooled);

  const std::size_t layers = params_.conv.size();
  Tensor dx;
  for (std::size_t i = layers; i-- > 0;) {
    auto& p = params_.conv[i];
    const auto stride = static_cast<std::size_t>(
        i == 0 ? cfg_.cnn.first_stride : cfg_.cnn.block_strides[i - 1]);
    if (i + 1 < layers) dact = nd::transpose2d(dx);
    const Tensor dnormed = nd::gelu_backward(cache.ln_out[i], dact);
    const Tensor dyt = nd::layer_norm_backward(cache.ln[i], p.ln_gamma, p.ln_beta, dnormed);
    dx = nd::conv1d_backward(cache.conv_in[i], p.weight, p.bias, stride, nd::transpose2d(dyt),
                             i > 0);
  }
  return dx;
}

Tensor WlannModel::ast_branch(const dsp::LogMelSpectrogram& spec, AstCache* cache) const {
  const auto patch = static_cast<std::size_t>(cfg_.ast.patch);
  const auto stride = static_cast<std::size_t>(cfg_.ast.patch_stride);
  require(spec.mel_bins == cfg_.ast.mel_bins, Errc::kPrecondition,
          "ast branch: expected " + std::to_string(cfg_.ast.mel_bins) + " mel bins");
  require(spec.frames >= static_cast<int>(patch), Errc::kPrecondition,
          "ast branch: " + std::to_string(spec.frames) + " frames, need at least " +
              std::to_string(patch));
  const std::size_t f = cfg_.freq_patches();
  const std::size_t tp = (static_cast<std::size_t>(spec.frames) - patch) / stride + 1;
  require(tp == cfg_.time_patches(), Errc::kShape,
          "ast branch: spectrogram gives " + std::to_string(tp) + " time patches, config has " +
              std::to_string(cfg_.time_patches()));
  const std::size_t n = f * tp;
  const auto d = static_cast<std::size_t>(cfg_.ast.embed_dim);

  AstCache local;
  AstCache& c = cache ? *cache : local;
  c.patches = Tensor({n, patch * patch});
  for (std::size_t fi = 0; fi < f; ++fi)
    for (std::size_t ti = 0; ti < tp; ++ti) {
      double* row = c.patches.data() + (fi * tp + ti) * patch * patch;
      for (std::size_t a = 0; a < patch; ++a)
        for (std::size_t b = 0; b < patch; ++b)
          row[a * patch + b] = spec.at(static_cast<int>(fi * stride + a),
                                       static_cast<int>(ti * stride + b));
    }

  Tensor h = nd::add(nd::linear(c.patches, params_.patch_w, params_.patch_b),
                     params_.pos_embed);
  c.blocks.assign(params_.blocks.size(), {});
  for (std::size_t i = 0; i < params_.blocks.size(); ++i)
    h = nd::transformer_block(h, params_.blocks[i], static_cast<std::size_t>(cfg_.ast.heads),
                              &c.blocks[i]);
  const Tensor out = nd::layer_norm(h, params_.final_gamma, params_.final_beta, &c.final_ln);
  return out.reshaped({f, tp, d});
}

void WlannModel::backward_ast(const AstCache& cache, const Tensor& dao) {
  const auto d = static_cast<std::size_t>(cfg_.ast.embed_dim);
  const Tensor dout = dao.reshaped({dao.size() / d, d});
  Tensor dh = nd::layer_norm_backward(cache.final_ln, params_.final_gamma, params_.final_beta,
                                      dout);
  for (std::size_t i = params_.blocks.size(); i-- > 0;)
    dh = nd::transformer_block_backward(cache.blocks[i], params_.blocks[i], dh);
  if (params_.pos_embed.requires_grad()) params_.pos_embed.accumulate_grad(dh.values());
  nd::linear_backward(cache.patches, params_.patch_w, params_.patch_b, dh);
}

Tensor WlannModel::fuse(const Tensor& wo, const Tensor& ao) {
  require(wo.rank() == 3 && ao.rank() == 3 && wo.dim(0) == ao.dim(0) && wo.dim(1) == ao.dim(1),
          Errc::kShape,
          "fuse: frequency/time grids differ, WO " + nd::shape_str(wo.shape()) + " vs AO " +
              nd::shape_str(ao.shape()));
  return nd::concat_last(ao, wo);
}

HeadOutput WlannModel::classify_head(const Tensor& fused, HeadCache* cache) const {
  require(fused.rank() == 3 && fused.dim(2) == cfg_.fused_channels(), Errc::kShape,
          "classify_head: fused tensor " + nd::shape_str(fused.shape()) + " needs " +
              std::to_string(cfg_.fused_channels()) + " channels");
  HeadCache local;
  HeadCache& c = cache ? *cache : local;
  c.fused_shape = fused.shape();
  c.frames = nd::mean_pool(fused, 0);
  c.gru_out = nd::bigru(c.frames, params_.gru_fwd, params_.gru_bwd, &c.gru);
  c.pooled = nd::mean_pool(c.gru_out, 0);
  c.probabilities = nd::sigmoid(nd::linear(c.pooled, params_.head_w, params_.head_b));
  return {c.probabilities, c.gru_out};
}

Tensor WlannModel::backward_head(const HeadCache& cache, const Tensor& dprobs) {
  const Tensor dlogits = nd::sigmoid_backward(cache.probabilities, dprobs);
  const Tensor dpooled = nd::linear_backward(cache.pooled, params_.head_w, params_.head_b,
                                             dlogits);
  const Tensor dgru = nd::mean_pool_backward(cache.gru_out.shape(), 0, dpooled);
  const Tensor dframes = nd::bigru_backward(cache.gru, params_.gru_fwd, params_.gru_bwd, dgru);
  return nd::mean_pool_backward(cache.fused_shape, 0, dframes);
}

Tensor WlannModel::forward(const PreparedInput& input, ForwardCache* cache) const {
  const Tensor wo = waveform_branch(input.waveform, cache ? &cache->cnn : nullptr);
  const Tensor ao = ast_branch(input.spec, cache ? &cache->ast : nullptr);
  return classify_head(fuse(wo, ao), cache ? &cache->head : nullptr).probabilities;
}

Tensor WlannModel::forward(const dataio::AudioClip& clip, bool train_mode,
                           std::uint64_t seed) const {
  return forward(prepare_input(clip, cfg_, train_mode, seed));
}

void WlannModel::backward(const ForwardCache& cache, const Tensor& dprobs) {
  const Tensor dfused = backward_head(cache.head, dprobs);
  Tensor dao, dwo;
  nd::split_last(dfused, static_cast<std::size_t>(cfg_.ast.embed_dim), &dao, &dwo);
  backward_ast(cache.ast, dao);
  backward_cnn(cache.cnn, dwo);
}

ShapeReport WlannModel::describe_shapes() const { return wlann::describe_shapes(cfg_); }

ShapeReport describe_shapes(const WlannConfig& cfg) {
  cfg.validate();
  ShapeReport r;
  r.input_samples = cfg.input_samples();
  r.spec_frames = cfg.spec_frames();
  r.freq_patches = cfg.freq_patches();
  r.time_patches = cfg.time_patches();
  r.num_patches = cfg.num_patches();
  r.conv_lengths = cfg.conv_lengths();
  r.raw_frames = cfg.raw_frames();
  r.pooled_frames = cfg.time_patches();
  r.channel_groups = cfg.channel_groups();
  r.fused_channels = cfg.fused_channels();
  const auto d = static_cast<std::size_t>(cfg.ast.embed_dim);
  r.wo_shape = {r.freq_patches, r.time_patches, r.channel_groups};
  r.ao_shape = {r.freq_patches, r.time_patches, d};
  r.fused_shape = {r.freq_patches, r.time_patches, r.fused_channels};
  r.frame_features_shape = {r.time_patches, 2 * static_cast<std::size_t>(cfg.gru_hidden)};
  return r;
}

int argmax(const Tensor& scores) {
  int best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

}  // namespace wlann
