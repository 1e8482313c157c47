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

#include "wlann/core/dsp.hpp"
#include "wlann/core/error.hpp"
#include "wlann/core/rng.hpp"

namespace wlann::dsp {

namespace {

LogMelSpectrogram time_warp(const LogMelSpectrogram& spec, int w_max, Rng& rng) {
  const int frames = spec.frames;
  const auto t0 = static_cast<int>(rng.uniform_int(w_max, frames - w_max - 1));
  const auto shift = static_cast<int>(rng.uniform_int(-w_max, w_max));
  const double target = t0 + shift;
  const double last = frames - 1;

  LogMelSpectrogram out = spec;
  for (int t = 0; t < frames; ++t) {
    // Output frame t reads source position src; [0, target] maps onto
    // [0, t0] and [target, last] onto [t0, last].
    double src;
    if (t <= target) {
      src = target > 0.0 ? t * (t0 / target) : 0.0;
    } else {
      src = t0 + (t - target) * ((last - t0) / (last - target));
    }
    src = std::clamp(src, 0.0, last);
    const int lo = static_cast<int>(std::floor(src));
    const int hi = std::min(lo + 1, frames - 1);
    const double frac = src - lo;
    for (int b = 0; b < spec.mel_bins; ++b)
      out.at(b, t) = (1.0 - frac) * spec.at(b, lo) + frac * spec.at(b, hi);
  }
  return out;
}

}  // namespace

LogMelSpectrogram spec_augment(const LogMelSpectrogram& spec,
                               const AugmentParams& params) {
  require(params.time_warp_w >= 0 && params.freq_mask_width >= 0 &&
              params.freq_mask_count >= 0,
          Errc::kPrecondition, "spec_augment: parameters must be non-negative");
  require(params.freq_mask_width < spec.mel_bins || params.freq_mask_count == 0,
          Errc::kPrecondition, "spec_augment: mask width must be below the bin count");

  Rng rng(params.seed);
  LogMelSpectrogram out = spec;
  if (params.time_warp_w > 0) {
    if (2 * params.time_warp_w >= spec.frames)
      fail(Errc::kDegenerateInput,
           "spec_augment: warp distance " + std::to_string(params.time_warp_w) +
               " needs more than " + std::to_string(2 * params.time_warp_w) +
               " frames, got " + std::to_string(spec.frames));
    out = time_warp(spec, params.time_warp_w, rng);
  }
  if (params.freq_mask_count > 0 && params.freq_mask_width > 0) {
    const double fill = out.mean();
    for (int m = 0; m < params.freq_mask_count; ++m) {
      const auto width = static_cast<int>(rng.uniform_int(0, params.freq_mask_width));
      const auto start = static_cast<int>(rng.uniform_int(0, spec.mel_bins - width));
      for (int b = start; b < start + width; ++b)
        for (int t = 0; t < out.frames; ++t) out.at(b, t) = fill;
    }
  }
  return out;
}

}  // namespace wlann::dsp
