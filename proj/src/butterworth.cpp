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
#include <numbers>

#include "wlann/core/dsp.hpp"
#include "wlann/core/error.hpp"

namespace wlann::dsp {

namespace {

// Coefficients of prod_i (1 - r_i x), i.e. the polynomial in z^-1 whose
// roots in z are r_i.
std::vector<double> expand(const std::vector<Complex>& roots) {
  std::vector<Complex> c(roots.size() + 1, Complex(0.0));
  c[0] = 1.0;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    for (std::size_t k = i + 1; k > 0; --k) c[k] -= roots[i] * c[k - 1];
  }
  std::vector<double> out(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) out[k] = c[k].real();
  return out;
}

// Groups roots into conjugate pairs (or pairs of reals), each yielding a
// real quadratic 1 + c1 z^-1 + c2 z^-2.
std::vector<std::pair<double, double>> quadratic_factors(std::vector<Complex> roots) {
  constexpr double kTol = 1e-9;
  std::vector<Complex> reals;
  std::vector<std::pair<double, double>> out;
  std::vector<bool> used(roots.size(), false);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (used[i]) continue;
    if (std::abs(roots[i].imag()) <= kTol) {
      reals.push_back(roots[i].real());
      used[i] = true;
      continue;
    }
    if (roots[i].imag() < 0) continue;
    std::size_t best = roots.size();
    double best_d = 1e300;
    for (std::size_t j = 0; j < roots.size(); ++j) {
      if (used[j] || j == i || roots[j].imag() >= 0) continue;
      const double d = std::abs(roots[j] - std::conj(roots[i]));
      if (d < best_d) best_d = d, best = j;
    }
    require(best < roots.size(), Errc::kNumeric, "unpaired complex root");
    used[i] = used[best] = true;
    out.emplace_back(-2.0 * roots[i].real(), std::norm(roots[i]));
  }
  // Opposite-sign reals are paired first so that a section holding the
  // z = +1 and z = -1 zeros becomes 1 - z^-2.
  std::sort(reals.begin(), reals.end(),
            [](Complex a, Complex b) { return a.real() < b.real(); });
  for (std::size_t lo = 0, hi = reals.size(); lo + 1 < hi; ++lo, --hi) {
    const double a = reals[lo].real(), b = reals[hi - 1].real();
    out.emplace_back(-(a + b), a * b);
  }
  if (reals.size() % 2 == 1) out.emplace_back(-reals[reals.size() / 2].real(), 0.0);
  return out;
}

}  // namespace

BandpassFilter design_butterworth_bandpass(int order, double low_hz,
                                           double high_hz, int fs_hz) {
  require(order >= 1, Errc::kPrecondition, "butterworth: order must be >= 1");
  require(fs_hz > 0, Errc::kPrecondition, "butterworth: sample rate must be positive");
  const double nyquist = fs_hz / 2.0;
  require(low_hz > 0.0 && low_hz < high_hz && high_hz < nyquist,
          Errc::kPrecondition,
          "butterworth: need 0 < low < high < fs/2 (low " + std::to_string(low_hz) +
              ", high " + std::to_string(high_hz) + ", fs " +
              std::to_string(fs_hz) + ")");

  const double fs2 = 2.0 * fs_hz;
  const double w1 = fs2 * std::tan(std::numbers::pi * low_hz / fs_hz);
  const double w2 = fs2 * std::tan(std::numbers::pi * high_hz / fs_hz);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;

  // Analog prototype poles on the left half of the unit circle.
  std::vector<Complex> analog_poles;
  for (int k = 1; k <= order; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + order - 1) / (2.0 * order);
    const Complex p = std::polar(1.0, theta);
    const Complex pb = p * bw / 2.0;
    const Complex disc = std::sqrt(pb * pb - w0sq);
    analog_poles.push_back(pb + disc);
    analog_poles.push_back(pb - disc);
  }
  // Band-pass transform: order zeros at s = 0, gain bw^order.
  double analog_gain = std::pow(bw, order);

  BandpassFilter f;
  f.prototype_order = order;
  f.low_hz = low_hz;
  f.high_hz = high_hz;
  f.sample_rate_hz = fs_hz;

  Complex gain(analog_gain, 0.0);
  for (int i = 0; i < order; ++i) {
    f.zeros.emplace_back(1.0, 0.0);  // s = 0
    gain *= fs2;                     // (fs2 - 0)
  }
  for (int i = 0; i < order; ++i) f.zeros.emplace_back(-1.0, 0.0);  // s = inf
  for (const auto& p : analog_poles) {
    f.poles.push_back((fs2 + p) / (fs2 - p));
    gain /= (fs2 - p);
  }
  f.gain = gain.real();

  f.numerator = expand(f.zeros);
  for (double& b : f.numerator) b *= f.gain;
  f.denominator = expand(f.poles);

  const auto zq = quadratic_factors(f.zeros);
  const auto pq = quadratic_factors(f.poles);
  require(zq.size() == pq.size(), Errc::kNumeric, "butterworth: section mismatch");
  for (std::size_t i = 0; i < pq.size(); ++i) {
    const double g = i == 0 ? f.gain : 1.0;
    f.sections.push_back({g, g * zq[i].first, g * zq[i].second, pq[i].first,
                          pq[i].second});
  }
  return f;
}

BandpassFilter respiratory_bandpass(int fs_hz) {
  return design_butterworth_bandpass(4, 40.0, 850.0, fs_hz);
}

Complex BandpassFilter::response(double freq_hz) const {
  const Complex z = std::polar(1.0, 2.0 * std::numbers::pi * freq_hz / sample_rate_hz);
  Complex h(gain, 0.0);
  for (const auto& q : zeros) h *= (z - q);
  for (const auto& p : poles) h /= (z - p);
  return h;
}

double BandpassFilter::gain_db(double freq_hz) const {
  return 20.0 * std::log10(std::abs(response(freq_hz)));
}

double BandpassFilter::max_pole_magnitude() const {
  double m = 0.0;
  for (const auto& p : poles) m = std::max(m, std::abs(p));
  return m;
}

AudioClip apply_filter(const BandpassFilter& filter, const AudioClip& clip) {
  require(filter.sample_rate_hz == clip.sample_rate_hz, Errc::kPrecondition,
          "apply_filter: filter designed for " +
              std::to_string(filter.sample_rate_hz) + " Hz, clip is " +
              std::to_string(clip.sample_rate_hz) + " Hz");
  AudioClip out = clip;
  for (const auto& s : filter.sections) {
    // Transposed direct form II, zero initial state.
    double z1 = 0.0, z2 = 0.0;
    for (double& x : out.samples) {
      const double y = s.b0 * x + z1;
      z1 = s.b1 * x - s.a1 * y + z2;
      z2 = s.b2 * x - s.a2 * y;
      x = y;
    }
  }
  return out;
}

std::vector<double> apply_direct_form(const BandpassFilter& filter,
                                      std::span<const double> input) {
  const auto& b = filter.numerator;
  const auto& a = filter.denominator;
  std::vector<double> y(input.size(), 0.0);
  for (std::size_t n = 0; n < input.size(); ++n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < b.size() && k <= n; ++k) acc += b[k] * input[n - k];
    for (std::size_t k = 1; k < a.size() && k <= n; ++k) acc -= a[k] * y[n - k];
    y[n] = acc;
  }
  return y;
}

}  // namespace wlann::dsp
