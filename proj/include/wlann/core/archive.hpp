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

// Named-tensor archive shared by checkpoints and cached features:
//
//   "WLANN1"                       6-byte magic
//   u32 n, n bytes                 config document (JSON text)
//   u32 n, n bytes                 metadata document (JSON text)
//   u32 count                      number of tensors
//   per tensor:
//     u32 n, n bytes               name (unique)
//     u32 rank, rank x u64         dimensions
//     prod(dims) x f32             payload
//
// All integers and floats are little-endian.

#ifndef WLANN_CORE_ARCHIVE_HPP_
#define WLANN_CORE_ARCHIVE_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "wlann/core/tensor.hpp"

namespace wlann {

inline constexpr char kArchiveMagic[] = "WLANN1";

struct NamedArray {
  std::string name;
  nd::Shape shape;
  std::vector<float> values;
};

struct TensorArchive {
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
  std::vector<NamedArray> tensors;

  const NamedArray* find(const std::string& name) const;
  void add(const std::string& name, const nd::Tensor& t);
};

std::vector<std::uint8_t> encode_archive(const TensorArchive& archive);
/// Errc::kMagicMismatch on a foreign file, Errc::kTruncatedPayload when the
/// data ends early, Errc::kFormat for other structural problems.
TensorArchive decode_archive(const std::vector<std::uint8_t>& bytes, const std::string& origin);

void write_archive(const std::filesystem::path& path, const TensorArchive& archive);
TensorArchive read_archive(const std::filesystem::path& path);

}  // namespace wlann

#endif  // WLANN_CORE_ARCHIVE_HPP_
