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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "wlann/core/dsp.hpp"
#include "wlann/core/error.hpp"

using namespace wlann;
using namespace wlann::dsp;

namespace {

constexpr double kPi = std::numbers::pi;

// Transfer function from the expanded polynomials, independent of the
// factored form used by BandpassFilter::response.
std::complex<double> poly_response(const BandpassFilter& f, double hz) {
  const double w = 2.0 * kPi * hz / f.sample_rate_hz;
  std::complex<double> num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < f.numerator.size(); ++k)
    num += f.numerator[k] * std::polar(1.0, -w * static_cast<double>(k));
  for (std::size_t k = 0; k < f.denominator.size(); ++k)
    den += f.denominator[k] * std::polar(1.0, -w * static_cast<double>(k));
  return num / den;
}

double db(std::complex<double> h) { return 20.0 * std::log10(std::abs(h)); }

std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> s = 0.0;
    for (std::size_t t = 0; t < n; ++t)
      s += x[t] * std::polar(1.0, -2.0 * kPi * static_cast<double>(k * t % n) / n);
    out[k] = s;
  }
  return out;
}

// Amplitude of the component at freq_hz by projection on sin/cos.
double tone_amplitude(const std::vector<double>& x, double freq_hz, int rate, std::size_t from,
                      std::size_t to) {
  double c = 0.0, s = 0.0;
  for (std::size_t i = from; i < to; ++i) {
    const double ph = 2.0 * kPi * freq_hz * static_cast<double>(i) / rate;
    c += x[i] * std::cos(ph);
    s += x[i] * std::sin(ph);
  }
  const double n = static_cast<double>(to - from);
  return 2.0 * std::hypot(c, s) / n;
}

AudioClip tone(double freq_hz, int rate, std::size_t n, double amp = 1.0) {
  AudioClip c;
  c.sample_rate_hz = rate;
  c.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    c.samples[i] = amp * std::sin(2.0 * kPi * freq_hz * static_cast<double>(i) / rate);
  return c;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::kPrecondition;
}

}  // namespace

TEST_CASE("butterworth band edges sit at -3.01 dB") {
  const BandpassFilter f = respiratory_bandpass(16000);
  CHECK(f.poles.size() == 8);
  CHECK(f.numerator.size() == 9);
  CHECK(std::abs(db(poly_response(f, 40.0)) + 3.0103) < 0.1);
  CHECK(std::abs(db(poly_response(f, 850.0)) + 3.0103) < 0.1);
  CHECK(std::abs(db(poly_response(f, 200.0))) < 0.1);
  CHECK(db(poly_response(f, 5.0)) < -40.0);
  CHECK(db(poly_response(f, 3000.0)) < -40.0);
  CHECK(std::abs(poly_response(f, 0.0)) < 1e-9);
  CHECK(f.max_pole_magnitude() < 1.0);
}

TEST_CASE("factored and expanded responses agree") {
  const BandpassFilter f = respiratory_bandpass(16000);
  for (double hz : {40.0, 120.0, 500.0, 850.0, 1200.0})
    CHECK(std::abs(f.response(hz) - poly_response(f, hz)) < 1e-4 * std::abs(poly_response(f, hz)));
  for (double hz : {10.0, 4000.0, 7000.0}) {
    CHECK(f.gain_db(hz) < -40.0);
    CHECK(db(poly_response(f, hz)) < -40.0);
  }
}

TEST_CASE("butterworth design rejects bad edges") {
  CHECK(code_of([] { design_butterworth_bandpass(4, 40, 9000, 16000); }) == Errc::kPrecondition);
  CHECK(code_of([] { design_butterworth_bandpass(4, 900, 850, 16000); }) == Errc::kPrecondition);
}

TEST_CASE("second-order cascade matches the direct form") {
  const BandpassFilter f = respiratory_bandpass(16000);
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  AudioClip x;
  x.sample_rate_hz = 16000;
  for (int i = 0; i < 4000; ++i) x.samples.push_back(nd(gen));
  const auto a = apply_filter(f, x).samples;
  const auto b = apply_direct_form(f, x.samples);
  REQUIRE(a.size() == b.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  CHECK(std::sqrt(num / den) < 1e-6);
}

TEST_CASE("filter kills DC and 5 Hz, keeps the passband") {
  const BandpassFilter f = respiratory_bandpass(16000);
  AudioClip dc;
  dc.sample_rate_hz = 16000;
  dc.samples.assign(160000, 1.0);
  const auto y = apply_filter(f, dc).samples;
  CHECK(std::abs(y.back()) < 1e-6);

  const auto low = apply_filter(f, tone(5.0, 16000, 16000 * 8)).samples;
  CHECK(tone_amplitude(low, 5.0, 16000, 16000 * 4, 16000 * 8) < 0.01);
  const auto mid = apply_filter(f, tone(300.0, 16000, 16000 * 2)).samples;
  CHECK(tone_amplitude(mid, 300.0, 16000, 16000, 32000) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("impulse response energy matches the |H|^2 integral") {
  const BandpassFilter f = respiratory_bandpass(16000);
  const std::size_t n = 1 << 16;
  AudioClip imp;
  imp.sample_rate_hz = 16000;
  imp.samples.assign(n, 0.0);
  imp.samples[0] = 1.0;
  const auto h = apply_filter(f, imp).samples;
  double energy = 0.0;
  for (double v : h) energy += v * v;
  double integral = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double hz = 16000.0 * static_cast<double>(k) / n;
    integral += std::norm(poly_response(f, hz));
  }
  integral /= static_cast<double>(n);
  CHECK(energy == doctest::Approx(integral).epsilon(0.01));
}

TEST_CASE("apply_filter rejects a rate mismatch") {
  const BandpassFilter f = respiratory_bandpass(16000);
  CHECK(code_of([&] { apply_filter(f, tone(100, 8000, 100)); }) == Errc::kPrecondition);
}

TEST_CASE("fft agrees with a naive DFT at length 512") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<std::complex<double>> x(512);
    for (auto& v : x) v = {nd(gen), nd(gen)};
    const auto ref = naive_dft(x);
    auto y = x;
    fft(y);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      num += std::norm(y[k] - ref[k]);
      den += std::norm(ref[k]);
    }
    CHECK(std::sqrt(num / den) < 1e-9);
  }
}

TEST_CASE("power spectrum of a zero-padded frame") {
  std::vector<double> frame(400, 0.0);
  frame[0] = 1.0;
  const auto p = power_spectrum(frame, 512);
  REQUIRE(p.size() == 257);
  for (double v : p) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("hamming window") {
  const auto w = hamming_window(400);
  CHECK(w[0] == doctest::Approx(0.08));
  CHECK(w[199] == doctest::Approx(0.54 - 0.46 * std::cos(2 * kPi * 199 / 399.0)));
  CHECK(w[399] == doctest::Approx(0.08));
}

TEST_CASE("resample lengths and identity") {
  const AudioClip x = tone(440.0, 8000, 8000);
  const AudioClip up = resample(x, 16000);
  CHECK(up.size() == 16000);
  CHECK(up.sample_rate_hz == 16000);
  const AudioClip same = resample(x, 8000);
  CHECK(same.samples == x.samples);
  AudioClip odd = tone(100.0, 8000, 8001);
  CHECK(resample(odd, 16000).size() == 16002);
  CHECK(resample(tone(100.0, 44100, 1000), 16000).size() == 363);
  CHECK(code_of([&] { resample(x, 0); }) == Errc::kPrecondition);
}

TEST_CASE("resampled 1 kHz tone keeps frequency and amplitude") {
  const AudioClip up = resample(tone(1000.0, 8000, 8000, 0.5), 16000);
  const double a = tone_amplitude(up.samples, 1000.0, 16000, 2000, 14000);
  CHECK(a == doctest::Approx(0.5).epsilon(0.01));
  CHECK(tone_amplitude(up.samples, 1100.0, 16000, 2000, 14000) < 0.01);
}

TEST_CASE("mel filterbank shape") {
  const MelFilterbank& fb = default_mel_filterbank();
  CHECK(fb.num_bins() == 128);
  CHECK(fb.num_fft_bins() == 257);
  for (int b = 0; b < fb.num_bins(); ++b) {
    double peak = 0.0;
    int peak_at = -1;
    for (int k = 0; k < fb.num_fft_bins(); ++k) {
      CHECK(fb.weight(b, k) >= 0.0);
      if (fb.weight(b, k) > peak) {
        peak = fb.weight(b, k);
        peak_at = k;
      }
    }
    CHECK(peak == 1.0);
    // unimodal: non-decreasing up to the peak, non-increasing after
    for (int k = 1; k <= peak_at; ++k) CHECK(fb.weight(b, k) >= fb.weight(b, k - 1));
    for (int k = peak_at + 1; k < fb.num_fft_bins(); ++k)
      CHECK(fb.weight(b, k) <= fb.weight(b, k - 1));
    if (b > 0) CHECK(fb.center_hz(b) > fb.center_hz(b - 1));
  }
  CHECK(MelFilterbank::hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
  CHECK(MelFilterbank::mel_to_hz(MelFilterbank::hz_to_mel(1234.5)) == doctest::Approx(1234.5));
}

TEST_CASE("log-mel frame count law") {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<int> len(400, 48000);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = trial == 0 ? 400 : len(gen);
    AudioClip c;
    c.sample_rate_hz = 16000;
    c.samples.assign(static_cast<std::size_t>(n), 0.0);
    const auto spec = log_mel(c);
    CHECK(spec.frames == (n - 400) / 160 + 1);
    CHECK(spec.mel_bins == 128);
  }
  AudioClip one_second;
  one_second.sample_rate_hz = 16000;
  one_second.samples.assign(16000, 0.0);
  CHECK(log_mel(one_second).frames == 98);
}

TEST_CASE("silence maps to the log floor") {
  AudioClip c;
  c.sample_rate_hz = 16000;
  c.samples.assign(3200, 0.0);
  const auto spec = log_mel(c);
  for (double v : spec.values) CHECK(v == std::log(1e-10));
}

TEST_CASE("tone at a mel center lights that bin") {
  const MelFilterbank& fb = default_mel_filterbank();
  for (int k : {40, 64, 90, 110, 126}) {
    const auto spec = log_mel(tone(fb.center_hz(k), 16000, 4000, 0.5));
    const int t = spec.frames / 2;
    int best = 0;
    for (int b = 1; b < spec.mel_bins; ++b)
      if (spec.at(b, t) > spec.at(best, t)) best = b;
    CHECK(best == k);
  }
}

TEST_CASE("log_mel preconditions") {
  CHECK(code_of([] { log_mel(tone(100, 8000, 4000)); }) == Errc::kPrecondition);
  CHECK(code_of([] { log_mel(tone(100, 16000, 399)); }) == Errc::kPrecondition);
}

TEST_CASE("spec_augment identities and determinism") {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> nd;
  LogMelSpectrogram s;
  s.mel_bins = 128;
  s.frames = 60;
  for (int i = 0; i < 128 * 60; ++i) s.values.push_back(nd(gen));

  AugmentParams zero{0, 0, 0, 1};
  CHECK(spec_augment(s, zero).values == s.values);
  AugmentParams no_width{0, 0, 1, 1};
  CHECK(spec_augment(s, no_width).values == s.values);

  AugmentParams p{5, 24, 2, 42};
  const auto a = spec_augment(s, p);
  const auto b = spec_augment(s, p);
  CHECK(a.values == b.values);
  CHECK(a.frames == s.frames);
  CHECK(a.mel_bins == s.mel_bins);
  p.seed = 43;
  CHECK(spec_augment(s, p).values != a.values);

  // masked rows hold the spectrogram mean
  AugmentParams mask_only{0, 24, 2, 7};
  const auto m = spec_augment(s, mask_only);
  const double mean = s.mean();
  int masked_rows = 0;
  for (int bin = 0; bin < 128; ++bin) {
    bool all_mean = true;
    for (int t = 0; t < 60; ++t) all_mean = all_mean && m.at(bin, t) == mean;
    if (all_mean) {
      ++masked_rows;
    } else {
      for (int t = 0; t < 60; ++t) CHECK(m.at(bin, t) == s.at(bin, t));
    }
  }
  CHECK(masked_rows <= 48);
}

TEST_CASE("time warp too wide for the spectrogram") {
  LogMelSpectrogram s;
  s.mel_bins = 128;
  s.frames = 10;
  s.values.assign(1280, 0.0);
  CHECK(code_of([&] { spec_augment(s, {5, 0, 0, 1}); }) == Errc::kDegenerateInput);
  CHECK_NOTHROW(spec_augment(s, {4, 0, 0, 1}));
}

TEST_CASE("time warp keeps endpoints and stays within the value range") {
  LogMelSpectrogram s;
  s.mel_bins = 128;
  s.frames = 50;
  for (int b = 0; b < 128; ++b)
    for (int t = 0; t < 50; ++t) s.values.push_back(static_cast<double>(t));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto w = spec_augment(s, {5, 0, 0, seed});
    CHECK(w.at(0, 0) == 0.0);
    CHECK(w.at(0, 49) == doctest::Approx(49.0));
    for (int t = 1; t < 50; ++t) CHECK(w.at(3, t) >= w.at(3, t - 1));
  }
}
