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
#include <numeric>

#include "wlann/core/dsp.hpp"
#include "wlann/core/error.hpp"

namespace wlann::dsp {

double MelFilterbank::hz_to_mel(double hz) {
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double MelFilterbank::mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelFilterbank::MelFilterbank(int num_bins, int n_fft, int sample_rate_hz,
                             double low_hz, double high_hz)
    : num_bins_(num_bins), num_fft_bins_(n_fft / 2 + 1) {
  require(num_bins > 0 && n_fft > 0 && high_hz > low_hz && low_hz >= 0.0,
          Errc::kPrecondition, "mel filterbank: invalid geometry");
  const double mel_lo = hz_to_mel(low_hz);
  const double mel_hi = hz_to_mel(high_hz);
  const double step = (mel_hi - mel_lo) / (num_bins + 1);
  const double bin_hz = static_cast<double>(sample_rate_hz) / n_fft;

  weights_.assign(static_cast<std::size_t>(num_bins) * num_fft_bins_, 0.0);
  centers_hz_.resize(static_cast<std::size_t>(num_bins));
  first_.assign(static_cast<std::size_t>(num_bins), 0);
  last_.assign(static_cast<std::size_t>(num_bins), -1);

  for (int b = 0; b < num_bins; ++b) {
    const double left = mel_lo + b * step;
    const double center = left + step;
    const double right = center + step;
    centers_hz_[b] = mel_to_hz(center);
    double* row = &weights_[static_cast<std::size_t>(b) * num_fft_bins_];
    double peak = 0.0;
    for (int k = 0; k < num_fft_bins_; ++k) {
      const double m = hz_to_mel(k * bin_hz);
      double w = 0.0;
      if (m > left && m <= center)
        w = (m - left) / (center - left);
      else if (m > center && m < right)
        w = (right - m) / (right - center);
      row[k] = w;
      peak = std::max(peak, w);
    }
    if (peak > 0.0) {
      for (int k = 0; k < num_fft_bins_; ++k) row[k] /= peak;
    } else {
      const int nearest = std::clamp(
          static_cast<int>(std::lround(centers_hz_[b] / bin_hz)), 0,
          num_fft_bins_ - 1);
      row[nearest] = 1.0;
    }
    for (int k = 0; k < num_fft_bins_; ++k) {
      if (row[k] > 0.0) {
        if (last_[b] < 0) first_[b] = k;
        last_[b] = k;
      }
    }
  }
}

void MelFilterbank::apply(std::span<const double> power,
                          std::span<double> out) const {
  for (int b = 0; b < num_bins_; ++b) {
    const double* row = &weights_[static_cast<std::size_t>(b) * num_fft_bins_];
    double acc = 0.0;
    for (int k = first_[b]; k <= last_[b]; ++k) acc += row[k] * power[k];
    out[b] = acc;
  }
}

const MelFilterbank& default_mel_filterbank() {
  static const MelFilterbank bank(kMelBins, kFftSize, kModelRateHz, 0.0,
                                  kModelRateHz / 2.0);
  return bank;
}

double LogMelSpectrogram::mean() const {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

LogMelSpectrogram log_mel(const AudioClip& clip) {
  require(clip.sample_rate_hz == kModelRateHz, Errc::kPrecondition,
          "log_mel: expected " + std::to_string(kModelRateHz) + " Hz input, got " +
              std::to_string(clip.sample_rate_hz));
  require(clip.samples.size() >= static_cast<std::size_t>(kWindowSamples),
          Errc::kPrecondition,
          "log_mel: clip of " + std::to_string(clip.samples.size()) +
              " samples is shorter than one 400-sample window");

  static const std::vector<double> window = hamming_window(kWindowSamples);
  const MelFilterbank& bank = default_mel_filterbank();
  const double log_floor = std::log(kLogFloor);

  LogMelSpectrogram spec;
  spec.mel_bins = kMelBins;
  spec.frames = num_frames(static_cast<std::int64_t>(clip.samples.size()));
  spec.values.assign(static_cast<std::size_t>(spec.mel_bins) * spec.frames, 0.0);

  std::vector<double> frame(kWindowSamples);
  std::vector<double> energies(kMelBins);
  for (int t = 0; t < spec.frames; ++t) {
    const double* src = clip.samples.data() + static_cast<std::size_t>(t) * kHopSamples;
    for (int i = 0; i < kWindowSamples; ++i) frame[i] = src[i] * window[i];
    const auto power = power_spectrum(frame, kFftSize);
    bank.apply(power, energies);
    for (int b = 0; b < kMelBins; ++b)
      spec.at(b, t) = energies[b] > kLogFloor ? std::log(energies[b]) : log_floor;
  }
  return spec;
}

}  // namespace wlann::dsp
