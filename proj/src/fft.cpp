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

#include <cmath>
#include <numbers>

#include "wlann/core/dsp.hpp"
#include "wlann/core/error.hpp"

namespace wlann::dsp {

void fft(std::vector<Complex>& data) {
  const std::size_t n = data.size();
  require(n > 0 && (n & (n - 1)) == 0, Errc::kPrecondition,
          "fft: size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::size_t half = len / 2;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        // Twiddles computed directly rather than by recurrence, which keeps
        // the error at the 1e-15 level for all k.
        const Complex w = std::polar(1.0, angle * static_cast<double>(k));
        const Complex u = data[start + k];
        const Complex v = data[start + k + half] * w;
        data[start + k] = u + v;
        data[start + k + half] = u - v;
      }
    }
  }
}

std::vector<double> power_spectrum(std::span<const double> frame, int n_fft) {
  require(static_cast<int>(frame.size()) <= n_fft, Errc::kPrecondition,
          "power_spectrum: frame longer than FFT");
  std::vector<Complex> buf(static_cast<std::size_t>(n_fft));
  for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i];
  fft(buf);
  std::vector<double> power(static_cast<std::size_t>(n_fft / 2 + 1));
  for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(buf[k]);
  return power;
}

std::vector<double> hamming_window(int length) {
  std::vector<double> w(static_cast<std::size_t>(length));
  if (length == 1) {
    w[0] = 1.0;
    return w;
  }
  for (int i = 0; i < length; ++i)
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (length - 1));
  return w;
}

}  // namespace wlann::dsp
