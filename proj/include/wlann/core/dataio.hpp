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

// Ingestion of SPRSound-style recordings: WAV files, per-recording event
// annotations, split manifests and a synthetic stand-in corpus.

#ifndef WLANN_CORE_DATAIO_HPP_
#define WLANN_CORE_DATAIO_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wlann::dataio {

struct AudioClip {
  std::vector<double> samples;
  int sample_rate_hz = 0;

  std::size_t size() const { return samples.size(); }
  double duration_ms() const {
    return 1000.0 * static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

enum class Label : int {
  kNormal = 0,
  kRhonchi,
  kWheeze,
  kStridor,
  kCoarseCrackle,
  kFineCrackle,
  kWheezeAndCrackle,
};

inline constexpr int kNumLabels = 7;

/// Canonical display name ("Normal", "Fine Crackle", ...).
std::string_view label_name(Label label);
/// Maps an annotation type string onto the seven classes. Accepts the
/// canonical names and the aliases used by dataset releases
/// ("Wheeze+Crackle", "Both", "CC", ...); nullopt when unknown.
std::optional<Label> parse_label(std::string_view text);
inline int label_index(Label label) { return static_cast<int>(label); }
Label label_from_index(int index);

struct RespiratoryEvent {
  std::string recording_id;
  std::int64_t onset_ms = 0;
  std::int64_t offset_ms = 0;
  Label label = Label::kNormal;
  std::string patient_id;
};

enum class SplitName { kTrain, kTestIntra, kTestInter };
std::string_view split_name(SplitName name);
std::optional<SplitName> parse_split_name(std::string_view text);

struct DatasetSplit {
  SplitName name = SplitName::kTrain;
  std::vector<RespiratoryEvent> events;

  std::array<std::size_t, kNumLabels> class_counts() const;
};

struct SplitTriple {
  DatasetSplit train{SplitName::kTrain, {}};
  DatasetSplit test_intra{SplitName::kTestIntra, {}};
  DatasetSplit test_inter{SplitName::kTestInter, {}};

  const DatasetSplit& get(SplitName name) const;
};

enum class WavEncoding { kPcm16, kFloat32 };

AudioClip load_wav(const std::filesystem::path& path);
/// Parses an in-memory RIFF/WAVE image; `origin` names it in errors.
AudioClip decode_wav(const std::vector<std::uint8_t>& bytes,
                     const std::string& origin);
std::vector<std::uint8_t> encode_wav(const AudioClip& clip,
                                     WavEncoding encoding);
void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavEncoding encoding = WavEncoding::kPcm16);

/// Reads one per-recording annotation document. The recording id is the
/// file stem; the patient id is the "patient_id" field when present and
/// otherwise the stem's leading '_'-separated token.
std::vector<RespiratoryEvent> load_annotations(
    const std::filesystem::path& path);
std::vector<RespiratoryEvent> parse_annotations(std::string_view json_text,
                                                const std::string& recording_id,
                                                const std::string& origin);

AudioClip slice_event(const AudioClip& clip, const RespiratoryEvent& event);

/// recording_id -> split, one "recording_id split" pair per line; '#'
/// starts a comment.
using SplitManifest = std::map<std::string, SplitName>;
SplitManifest load_manifest(const std::filesystem::path& path);
SplitManifest parse_manifest(std::string_view text, const std::string& origin);
void write_manifest(const std::filesystem::path& path,
                    const SplitManifest& manifest);

SplitTriple make_splits(const std::vector<RespiratoryEvent>& events,
                        const SplitManifest& manifest);
/// Throws a validation error when a split triple breaks patient disjointness.
void check_split_invariants(const SplitTriple& splits);

/// A directory holding <recording>.wav and <recording>.json pairs plus a
/// "splits.txt" manifest.
struct Corpus {
  std::filesystem::path root;
  SplitTriple splits;

  std::filesystem::path wav_path(const std::string& recording_id) const;
  AudioClip load_event(const RespiratoryEvent& event) const;
};

Corpus load_corpus(const std::filesystem::path& root);

/// Three surrogate classes written at 8 kHz: Normal (band-limited noise),
/// Wheeze (a 400-800 Hz tone over a noise floor) and Fine Crackle (3-10
/// decaying impulses over a noise floor).
SplitTriple generate_synthetic_corpus(int n_per_class, std::uint64_t seed,
                                      const std::filesystem::path& out_dir);

inline constexpr int kSyntheticRateHz = 8000;
inline constexpr std::array<Label, 3> kSyntheticLabels = {
    Label::kNormal, Label::kWheeze, Label::kFineCrackle};

/// One synthetic event signal, exposed for spectral tests.
AudioClip synthesize_event(Label label, double seconds, std::uint64_t seed);

}  // namespace wlann::dataio

#endif  // WLANN_CORE_DATAIO_HPP_
