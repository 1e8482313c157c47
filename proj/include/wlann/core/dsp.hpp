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

// Preprocessing chain: resampling, Butterworth band-pass, log-mel filterbank
// features and SpecAugment-style augmentation.

#ifndef WLANN_CORE_DSP_HPP_
#define WLANN_CORE_DSP_HPP_

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "wlann/core/dataio.hpp"

namespace wlann::dsp {

using dataio::AudioClip;
using Complex = std::complex<double>;

inline constexpr int kModelRateHz = 16000;
inline constexpr int kWindowSamples = 400;  // 25 ms at 16 kHz
inline constexpr int kHopSamples = 160;     // 10 ms at 16 kHz
inline constexpr int kFftSize = 512;
inline constexpr int kMelBins = 128;
inline constexpr double kLogFloor = 1e-10;

/// Windowed-sinc (Kaiser) band-limited resampler. Output length is
/// round(N * target / source); the cutoff sits at the lower Nyquist rate.
AudioClip resample(const AudioClip& clip, int target_hz);

struct SecondOrderSection {
  double b0, b1, b2;
  double a1, a2;  // a0 == 1
};

/// Digital band-pass obtained from an analog Butterworth low-pass prototype
/// by the low-pass to band-pass transform and a prewarped bilinear map.
/// A prototype of order n yields 2n poles.
struct BandpassFilter {
  std::vector<double> numerator;    // b[0..2n], in powers of z^-1
  std::vector<double> denominator;  // a[0..2n], a[0] == 1
  std::vector<Complex> zeros;
  std::vector<Complex> poles;
  double gain = 1.0;
  std::vector<SecondOrderSection> sections;

  int prototype_order = 0;
  double low_hz = 0.0;
  double high_hz = 0.0;
  int sample_rate_hz = 0;

  /// H(e^{j 2 pi f / fs}) from the factored form.
  Complex response(double freq_hz) const;
  double gain_db(double freq_hz) const;
  double max_pole_magnitude() const;
};

BandpassFilter design_butterworth_bandpass(int order, double low_hz,
                                           double high_hz, int fs_hz);

/// The band-pass used by the model pipeline: order 4, 40-850 Hz.
BandpassFilter respiratory_bandpass(int fs_hz);

/// Zero initial conditions; output length equals input length. Evaluated as
/// a cascade of second-order difference equations.
AudioClip apply_filter(const BandpassFilter& filter, const AudioClip& clip);

/// Evaluates the single direct-form difference equation given by the
/// expanded numerator and denominator polynomials.
std::vector<double> apply_direct_form(const BandpassFilter& filter,
                                      std::span<const double> input);

/// In-place iterative radix-2 FFT; size must be a power of two.
void fft(std::vector<Complex>& data);

/// |X_k|^2 for k = 0..n_fft/2 of the zero-padded frame.
std::vector<double> power_spectrum(std::span<const double> frame, int n_fft);

std::vector<double> hamming_window(int length);

/// Triangular HTK-mel filters over FFT bins 0..n_fft/2, each normalized so
/// that its largest weight is exactly 1. A filter narrower than the bin
/// spacing collapses onto the bin nearest its center frequency.
class MelFilterbank {
 public:
  MelFilterbank(int num_bins, int n_fft, int sample_rate_hz, double low_hz,
                double high_hz);

  int num_bins() const { return num_bins_; }
  int num_fft_bins() const { return num_fft_bins_; }
  double weight(int bin, int fft_bin) const {
    return weights_[static_cast<std::size_t>(bin) * num_fft_bins_ + fft_bin];
  }
  double center_hz(int bin) const { return centers_hz_[bin]; }
  void apply(std::span<const double> power, std::span<double> out) const;

  static double hz_to_mel(double hz);
  static double mel_to_hz(double mel);

 private:
  int num_bins_;
  int num_fft_bins_;
  std::vector<double> weights_;
  std::vector<double> centers_hz_;
  std::vector<int> first_, last_;  // nonzero support per filter
};

const MelFilterbank& default_mel_filterbank();

/// mel_bins x frames matrix of natural-log filterbank energies, stored
/// bin-major.
struct LogMelSpectrogram {
  int mel_bins = 0;
  int frames = 0;
  std::vector<double> values;

  double& at(int bin, int frame) {
    return values[static_cast<std::size_t>(bin) * frames + frame];
  }
  double at(int bin, int frame) const {
    return values[static_cast<std::size_t>(bin) * frames + frame];
  }
  double mean() const;
};

inline int num_frames(std::int64_t num_samples) {
  return num_samples < kWindowSamples
             ? 0
             : static_cast<int>((num_samples - kWindowSamples) / kHopSamples) + 1;
}

LogMelSpectrogram log_mel(const AudioClip& clip);

struct AugmentParams {
  int time_warp_w = 5;
  int freq_mask_width = 24;
  int freq_mask_count = 2;
  std::uint64_t seed = 0;
};

/// Two-segment piecewise-linear time warp followed by frequency masks
/// filled with the spectrogram mean. Deterministic given params.seed.
LogMelSpectrogram spec_augment(const LogMelSpectrogram& spec,
                               const AugmentParams& params);

}  // namespace wlann::dsp

#endif  // WLANN_CORE_DSP_HPP_
