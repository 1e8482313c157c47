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
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "wlann/core/dataio.hpp"
#include "wlann/core/error.hpp"

namespace wlann::dataio {

namespace {

constexpr std::array<std::string_view, kNumLabels> kLabelNames = {
    "Normal",         "Rhonchi",      "Wheeze",          "Stridor",
    "Coarse Crackle", "Fine Crackle", "Wheeze & Crackle"};

// Keys are lowercased with blanks, '_' and '-' removed.
const std::map<std::string, Label, std::less<>>& alias_table() {
  static const std::map<std::string, Label, std::less<>> table = {
      {"normal", Label::kNormal},
      {"n", Label::kNormal},
      {"rhonchi", Label::kRhonchi},
      {"rho", Label::kRhonchi},
      {"wheeze", Label::kWheeze},
      {"w", Label::kWheeze},
      {"stridor", Label::kStridor},
      {"str", Label::kStridor},
      {"coarsecrackle", Label::kCoarseCrackle},
      {"cc", Label::kCoarseCrackle},
      {"finecrackle", Label::kFineCrackle},
      {"fc", Label::kFineCrackle},
      {"wheeze+crackle", Label::kWheezeAndCrackle},
      {"wheeze&crackle", Label::kWheezeAndCrackle},
      {"wheezeandcrackle", Label::kWheezeAndCrackle},
      {"both", Label::kWheezeAndCrackle},
  };
  return table;
}

std::string normalize_key(std::string_view text) {
  std::string key;
  for (char c : text) {
    if (c == ' ' || c == '_' || c == '-' || c == '\t') continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return key;
}

std::int64_t read_ms(const nlohmann::json& v, const std::string& what) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number()) return static_cast<std::int64_t>(v.get<double>());
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    std::size_t used = 0;
    try {
      const double d = std::stod(s, &used);
      if (used == s.size()) return static_cast<std::int64_t>(d);
    } catch (const std::exception&) {
    }
  }
  fail(Errc::kValidation, what + " is not a millisecond value");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string_view label_name(Label label) {
  return kLabelNames.at(static_cast<std::size_t>(label));
}

std::optional<Label> parse_label(std::string_view text) {
  const auto& table = alias_table();
  auto it = table.find(normalize_key(text));
  if (it == table.end()) return std::nullopt;
  return it->second;
}

Label label_from_index(int index) {
  require(index >= 0 && index < kNumLabels, Errc::kValidation,
          "label index out of range: " + std::to_string(index));
  return static_cast<Label>(index);
}

std::string_view split_name(SplitName name) {
  switch (name) {
    case SplitName::kTrain: return "train";
    case SplitName::kTestIntra: return "test_intra";
    case SplitName::kTestInter: return "test_inter";
  }
  return "?";
}

std::optional<SplitName> parse_split_name(std::string_view text) {
  const auto key = normalize_key(text);
  if (key == "train") return SplitName::kTrain;
  if (key == "testintra" || key == "intra") return SplitName::kTestIntra;
  if (key == "testinter" || key == "inter") return SplitName::kTestInter;
  return std::nullopt;
}

std::array<std::size_t, kNumLabels> DatasetSplit::class_counts() const {
  std::array<std::size_t, kNumLabels> counts{};
  for (const auto& e : events) ++counts[static_cast<std::size_t>(e.label)];
  return counts;
}

const DatasetSplit& SplitTriple::get(SplitName name) const {
  switch (name) {
    case SplitName::kTrain: return train;
    case SplitName::kTestIntra: return test_intra;
    case SplitName::kTestInter: return test_inter;
  }
  return train;
}

std::vector<RespiratoryEvent> parse_annotations(std::string_view json_text,
                                                const std::string& recording_id,
                                                const std::string& origin) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(Errc::kFormat, origin + ": " + e.what());
  }
  if (!doc.is_object())
    fail(Errc::kFormat, origin + ": annotation document must be an object");

  const nlohmann::json* list = nullptr;
  for (const char* key : {"event_annotation", "events"}) {
    if (doc.contains(key)) {
      list = &doc[key];
      break;
    }
  }
  if (list == nullptr || !list->is_array())
    fail(Errc::kFormat, origin + ": missing event_annotation list");

  std::string patient = recording_id.substr(0, recording_id.find('_'));
  if (doc.contains("patient_id") && doc["patient_id"].is_string())
    patient = doc["patient_id"].get<std::string>();

  std::vector<RespiratoryEvent> events;
  events.reserve(list->size());
  for (std::size_t i = 0; i < list->size(); ++i) {
    const auto& entry = (*list)[i];
    const std::string where = origin + ": event " + std::to_string(i);
    if (!entry.is_object() || !entry.contains("start") ||
        !entry.contains("end") || !entry.contains("type"))
      fail(Errc::kFormat, where + " needs start, end and type");
    RespiratoryEvent ev;
    ev.recording_id = recording_id;
    ev.patient_id = patient;
    ev.onset_ms = read_ms(entry["start"], where + " start");
    ev.offset_ms = read_ms(entry["end"], where + " end");
    if (!entry["type"].is_string())
      fail(Errc::kValidation, where + ": type must be a string");
    const auto type = entry["type"].get<std::string>();
    const auto label = parse_label(type);
    if (!label)
      fail(Errc::kValidation, where + ": unknown label \"" + type + "\"");
    ev.label = *label;
    if (ev.onset_ms < 0)
      fail(Errc::kValidation, where + ": negative onset");
    if (ev.offset_ms <= ev.onset_ms)
      fail(Errc::kValidation, where + ": offset " +
                                  std::to_string(ev.offset_ms) +
                                  " ms is not after onset " +
                                  std::to_string(ev.onset_ms) + " ms");
    events.push_back(std::move(ev));
  }
  return events;
}

std::vector<RespiratoryEvent> load_annotations(
    const std::filesystem::path& path) {
  return parse_annotations(read_text(path), path.stem().string(),
                           path.string());
}

AudioClip slice_event(const AudioClip& clip, const RespiratoryEvent& event) {
  require(event.onset_ms >= 0 && event.offset_ms > event.onset_ms,
          Errc::kValidation, "slice_event: invalid interval");
  const std::int64_t rate = clip.sample_rate_hz;
  const std::int64_t begin = event.onset_ms * rate / 1000;
  const std::int64_t end = event.offset_ms * rate / 1000;
  const auto n = static_cast<std::int64_t>(clip.samples.size());
  if (end > n || static_cast<double>(event.offset_ms) > clip.duration_ms())
    fail(Errc::kRange, "event [" + std::to_string(event.onset_ms) + ", " +
                           std::to_string(event.offset_ms) +
                           ") ms exceeds recording " + event.recording_id +
                           " of " + std::to_string(clip.duration_ms()) + " ms");
  if (end <= begin)
    fail(Errc::kRange, "event shorter than one sample in " +
                           event.recording_id);
  AudioClip out;
  out.sample_rate_hz = clip.sample_rate_hz;
  out.samples.assign(clip.samples.begin() + begin, clip.samples.begin() + end);
  return out;
}

SplitManifest parse_manifest(std::string_view text, const std::string& origin) {
  SplitManifest manifest;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    std::istringstream fields(line);
    std::string rec, split, extra;
    if (!(fields >> rec)) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (!(fields >> split) || (fields >> extra))
      fail(Errc::kFormat, where + ": expected \"recording_id split\"");
    const auto name = parse_split_name(split);
    if (!name)
      fail(Errc::kValidation, where + ": unknown split \"" + split + "\"");
    auto [it, inserted] = manifest.emplace(rec, *name);
    if (!inserted && it->second != *name)
      fail(Errc::kValidation,
           where + ": recording " + rec + " assigned to two splits");
  }
  return manifest;
}

SplitManifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_text(path), path.string());
}

void write_manifest(const std::filesystem::path& path,
                    const SplitManifest& manifest) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::kIo, "cannot write " + path.string());
  for (const auto& [rec, split] : manifest)
    out << rec << ' ' << split_name(split) << '\n';
  if (!out) fail(Errc::kIo, "write failed: " + path.string());
}

void check_split_invariants(const SplitTriple& splits) {
  std::set<std::string> train_patients;
  for (const auto& e : splits.train.events) train_patients.insert(e.patient_id);
  for (const auto& e : splits.test_inter.events) {
    if (train_patients.count(e.patient_id))
      fail(Errc::kValidation, "patient " + e.patient_id +
                                  " appears in both train and test_inter");
  }
  for (const auto& e : splits.test_intra.events) {
    if (!train_patients.count(e.patient_id))
      fail(Errc::kValidation, "test_intra patient " + e.patient_id +
                                  " has no training events");
  }
}

SplitTriple make_splits(const std::vector<RespiratoryEvent>& events,
                        const SplitManifest& manifest) {
  SplitTriple splits;
  for (const auto& e : events) {
    auto it = manifest.find(e.recording_id);
    if (it == manifest.end())
      fail(Errc::kValidation,
           "recording " + e.recording_id + " is not assigned by the manifest");
    switch (it->second) {
      case SplitName::kTrain: splits.train.events.push_back(e); break;
      case SplitName::kTestIntra: splits.test_intra.events.push_back(e); break;
      case SplitName::kTestInter: splits.test_inter.events.push_back(e); break;
    }
  }
  check_split_invariants(splits);
  return splits;
}

std::filesystem::path Corpus::wav_path(const std::string& recording_id) const {
  return root / (recording_id + ".wav");
}

AudioClip Corpus::load_event(const RespiratoryEvent& event) const {
  return slice_event(load_wav(wav_path(event.recording_id)), event);
}

Corpus load_corpus(const std::filesystem::path& root) {
  std::error_code ec;
  if (!std::filesystem::is_directory(root, ec))
    fail(Errc::kIo, "not a directory: " + root.string());
  std::vector<std::filesystem::path> docs;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      docs.push_back(entry.path());
  }
  std::sort(docs.begin(), docs.end());
  std::vector<RespiratoryEvent> events;
  for (const auto& doc : docs) {
    auto evs = load_annotations(doc);
    events.insert(events.end(), evs.begin(), evs.end());
  }
  Corpus corpus;
  corpus.root = root;
  corpus.splits = make_splits(events, load_manifest(root / "splits.txt"));
  return corpus;
}

}  // namespace wlann::dataio
