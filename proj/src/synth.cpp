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
#include <cstdio>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "wlann/core/dataio.hpp"
#include "wlann/core/dsp.hpp"
#include "wlann/core/error.hpp"
#include "wlann/core/rng.hpp"

namespace wlann::dataio {

namespace {

constexpr double kFloorRms = 0.01;
constexpr double kBreathRms = 0.1;
constexpr double kUnderlayRms = 0.03;
constexpr double kPreRollSeconds = 0.5;

double rms(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return x.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(x.size()));
}

// Gaussian noise through the 40-850 Hz band-pass, scaled to the target RMS.
std::vector<double> band_noise(std::size_t n, double target_rms, Rng& rng) {
  const auto preroll = static_cast<std::size_t>(kPreRollSeconds * kSyntheticRateHz);
  AudioClip white;
  white.sample_rate_hz = kSyntheticRateHz;
  white.samples.resize(n + preroll);
  for (double& v : white.samples) v = rng.normal();
  static const dsp::BandpassFilter filter = dsp::respiratory_bandpass(kSyntheticRateHz);
  AudioClip shaped = dsp::apply_filter(filter, white);
  std::vector<double> out(shaped.samples.begin() + static_cast<std::ptrdiff_t>(preroll),
                          shaped.samples.end());
  const double r = rms(out);
  if (r > 0.0)
    for (double& v : out) v *= target_rms / r;
  return out;
}

// Raised-cosine fade in/out over the first and last 10% of the event.
double envelope(std::size_t i, std::size_t n) {
  const double taper = 0.1 * static_cast<double>(n);
  const double pos = static_cast<double>(i);
  const double tail = static_cast<double>(n - 1 - i);
  const double edge = std::min(pos, tail);
  if (edge >= taper) return 1.0;
  return 0.5 - 0.5 * std::cos(std::numbers::pi * edge / taper);
}

const char* class_tag(Label label) {
  switch (label) {
    case Label::kNormal: return "normal";
    case Label::kWheeze: return "wheeze";
    case Label::kFineCrackle: return "crackle";
    default: return "other";
  }
}

}  // namespace

AudioClip synthesize_event(Label label, double seconds, std::uint64_t seed) {
  require(seconds > 0.0, Errc::kPrecondition, "synthesize_event: duration must be positive");
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(std::llround(seconds * kSyntheticRateHz));
  AudioClip clip;
  clip.sample_rate_hz = kSyntheticRateHz;

  switch (label) {
    case Label::kNormal: {
      clip.samples = band_noise(n, kBreathRms, rng);
      for (std::size_t i = 0; i < n; ++i) clip.samples[i] *= envelope(i, n);
      break;
    }
    case Label::kWheeze: {
      clip.samples = band_noise(n, kUnderlayRms, rng);
      const double f0 = rng.uniform(400.0, 800.0);
      const double amplitude = rng.uniform(0.15, 0.25);
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / kSyntheticRateHz;
        clip.samples[i] += amplitude * envelope(i, n) *
                           std::sin(2.0 * std::numbers::pi * f0 * t + phase);
      }
      break;
    }
    case Label::kFineCrackle: {
      clip.samples = band_noise(n, kUnderlayRms, rng);
      const auto count = rng.uniform_int(3, 10);
      for (std::int64_t c = 0; c < count; ++c) {
        const auto start = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
        const double amplitude = rng.uniform(0.3, 0.6) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        const double tau = rng.uniform(0.0015, 0.004);
        const double freq = rng.uniform(200.0, 600.0);
        for (std::size_t i = start; i < n; ++i) {
          const double t = static_cast<double>(i - start) / kSyntheticRateHz;
          if (t > 8.0 * tau) break;
          clip.samples[i] += amplitude * std::exp(-t / tau) *
                             std::sin(2.0 * std::numbers::pi * freq * t);
        }
      }
      break;
    }
    default:
      fail(Errc::kPrecondition, "synthesize_event: no surrogate for " +
                                    std::string(label_name(label)));
  }
  for (double& v : clip.samples) v = std::clamp(v, -1.0, 1.0);
  return clip;
}

SplitTriple generate_synthetic_corpus(int n_per_class, std::uint64_t seed,
                                      const std::filesystem::path& out_dir) {
  require(n_per_class >= 1, Errc::kPrecondition,
          "generate_synthetic_corpus: n_per_class must be >= 1");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir))
    fail(Errc::kIo, "cannot create output directory " + out_dir.string());

  SplitManifest manifest;
  std::vector<RespiratoryEvent> events;
  for (std::size_t c = 0; c < kSyntheticLabels.size(); ++c) {
    const Label label = kSyntheticLabels[c];
    for (int i = 0; i < n_per_class; ++i) {
      // Buckets of ten: seven train, one intra-patient test, two
      // inter-patient test. Intra events reuse a training patient.
      const int bucket = i % 10;
      const SplitName split = bucket < 7    ? SplitName::kTrain
                              : bucket == 7 ? SplitName::kTestIntra
                                            : SplitName::kTestInter;
      char patient[32];
      if (split == SplitName::kTestInter)
        std::snprintf(patient, sizeof patient, "PX%02d", (i / 10) % 8 * 2 + bucket - 8);
      else
        std::snprintf(patient, sizeof patient, "PT%02d", (i / 10) % 8);
      char rec[96];
      std::snprintf(rec, sizeof rec, "%s_%s_%04d", patient, class_tag(label), i);

      Rng rng = Rng::derive(seed, c, static_cast<std::uint64_t>(i));
      const double event_s = rng.uniform(0.8, 1.2);
      const double lead_s = rng.uniform(0.1, 0.4);
      const double tail_s = rng.uniform(0.1, 0.4);
      const AudioClip event = synthesize_event(label, event_s, rng.next_u64());

      const auto lead = static_cast<std::size_t>(std::llround(lead_s * kSyntheticRateHz));
      const auto tail = static_cast<std::size_t>(std::llround(tail_s * kSyntheticRateHz));
      AudioClip recording;
      recording.sample_rate_hz = kSyntheticRateHz;
      recording.samples = band_noise(lead + event.size() + tail, kFloorRms, rng);
      for (std::size_t k = 0; k < event.size(); ++k)
        recording.samples[lead + k] = std::clamp(recording.samples[lead + k] + event.samples[k], -1.0, 1.0);

      RespiratoryEvent ev;
      ev.recording_id = rec;
      ev.patient_id = patient;
      ev.label = label;
      // Rounded inward so the interval stays inside the event samples.
      ev.onset_ms = static_cast<std::int64_t>(std::ceil(1000.0 * lead / kSyntheticRateHz));
      ev.offset_ms = static_cast<std::int64_t>(
          std::floor(1000.0 * (lead + event.size()) / kSyntheticRateHz));

      write_wav(out_dir / (ev.recording_id + ".wav"), recording);
      nlohmann::ordered_json doc;
      doc["patient_id"] = ev.patient_id;
      doc["record_annotation"] = std::string(label_name(label));
      doc["event_annotation"] = nlohmann::ordered_json::array(
          {{{"start", std::to_string(ev.onset_ms)},
            {"end", std::to_string(ev.offset_ms)},
            {"type", std::string(label_name(label))}}});
      std::ofstream js(out_dir / (ev.recording_id + ".json"), std::ios::binary | std::ios::trunc);
      if (!js) fail(Errc::kIo, "cannot write annotation for " + ev.recording_id);
      js << doc.dump(2) << '\n';
      if (!js) fail(Errc::kIo, "write failed for " + ev.recording_id);

      manifest.emplace(ev.recording_id, split);
      events.push_back(std::move(ev));
    }
  }
  write_manifest(out_dir / "splits.txt", manifest);
  return make_splits(events, manifest);
}

}  // namespace wlann::dataio
