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
#include <map>
#include <numeric>
#include <numbers>

#include "wlann/core/dsp.hpp"
#include "wlann/core/error.hpp"

namespace wlann::dsp {

namespace {

constexpr int kZeroCrossings = 32;
constexpr double kKaiserBeta = 8.0;

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

AudioClip resample(const AudioClip& clip, int target_hz) {
  require(target_hz > 0, Errc::kPrecondition, "resample: target rate must be positive");
  require(clip.sample_rate_hz > 0, Errc::kPrecondition,
          "resample: source rate must be positive");
  require(!clip.samples.empty(), Errc::kEmptyInput, "resample: empty clip");
  if (target_hz == clip.sample_rate_hz) return clip;

  const std::int64_t src = clip.sample_rate_hz;
  const std::int64_t dst = target_hz;
  const auto n_in = static_cast<std::int64_t>(clip.samples.size());
  const auto n_out = static_cast<std::int64_t>(
      std::llround(static_cast<double>(n_in) * dst / src));

  const double ratio = std::min(1.0, static_cast<double>(dst) / src);
  const double half_width = kZeroCrossings / ratio;
  const double i0_beta = std::cyl_bessel_i(0.0, kKaiserBeta);
  auto kernel = [&](double d) {
    const double u = d / half_width;
    if (std::abs(u) >= 1.0) return 0.0;
    const double win = std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - u * u)) / i0_beta;
    return ratio * sinc(ratio * d) * win;
  };

  // Output m sits at input position m * src / dst; the fractional part takes
  // at most dst / gcd distinct values, so tap sets are cached per phase.
  const std::int64_t g = std::gcd(src, dst);
  const std::int64_t phases = dst / g;
  const auto reach = static_cast<std::int64_t>(std::ceil(half_width));
  std::map<std::int64_t, std::vector<double>> cache;
  const bool use_cache = phases <= 4096;

  AudioClip out;
  out.sample_rate_hz = target_hz;
  out.samples.resize(static_cast<std::size_t>(n_out));
  std::vector<double> scratch;
  for (std::int64_t m = 0; m < n_out; ++m) {
    const std::int64_t num = m * src;
    const std::int64_t base = num / dst;
    const std::int64_t rem = num % dst;
    const double frac = static_cast<double>(rem) / static_cast<double>(dst);

    const std::vector<double>* taps;
    if (use_cache) {
      auto it = cache.find(rem);
      if (it == cache.end()) {
        std::vector<double> t(static_cast<std::size_t>(2 * reach + 1));
        for (std::int64_t j = -reach; j <= reach; ++j)
          t[static_cast<std::size_t>(j + reach)] = kernel(frac - static_cast<double>(j));
        it = cache.emplace(rem, std::move(t)).first;
      }
      taps = &it->second;
    } else {
      scratch.resize(static_cast<std::size_t>(2 * reach + 1));
      for (std::int64_t j = -reach; j <= reach; ++j)
        scratch[static_cast<std::size_t>(j + reach)] = kernel(frac - static_cast<double>(j));
      taps = &scratch;
    }

    double acc = 0.0;
    const std::int64_t lo = std::max<std::int64_t>(0, base - reach);
    const std::int64_t hi = std::min<std::int64_t>(n_in - 1, base + reach);
    for (std::int64_t i = lo; i <= hi; ++i)
      acc += clip.samples[static_cast<std::size_t>(i)] *
             (*taps)[static_cast<std::size_t>(i - base + reach)];
    out.samples[static_cast<std::size_t>(m)] = acc;
  }
  return out;
}

}  // namespace wlann::dsp
