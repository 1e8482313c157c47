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

#include "wlann/core/archive.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include "wlann/core/error.hpp"

namespace wlann {

namespace {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void f32(float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, sizeof v);
    u32(v);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& data, const std::string& origin)
      : data_(data), origin_(origin) {}

  void need(std::size_t n) const {
    if (data_.size() - pos_ < n)
      fail(Errc::kTruncatedPayload, origin_ + ": truncated payload at byte " +
                                        std::to_string(pos_));
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  float f32() {
    const std::uint32_t v = u32();
    float f;
    std::memcpy(&f, &v, sizeof f);
    return f;
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& data_;
  const std::string& origin_;
  std::size_t pos_ = 0;
};

nlohmann::ordered_json parse_doc(const std::string& text, const std::string& origin,
                                 const char* what) {
  try {
    return nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(Errc::kFormat, origin + ": bad " + what + " document: " + e.what());
  }
}

}  // namespace

const NamedArray* TensorArchive::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

void TensorArchive::add(const std::string& name, const nd::Tensor& t) {
  NamedArray a;
  a.name = name;
  a.shape = t.shape();
  a.values.resize(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) a.values[i] = static_cast<float>(t[i]);
  tensors.push_back(std::move(a));
}

std::vector<std::uint8_t> encode_archive(const TensorArchive& archive) {
  std::set<std::string> seen;
  Writer w;
  w.bytes(kArchiveMagic, 6);
  w.str(archive.config.dump());
  w.str(archive.metadata.dump());
  w.u32(static_cast<std::uint32_t>(archive.tensors.size()));
  for (const auto& t : archive.tensors) {
    require(seen.insert(t.name).second, Errc::kFormat, "archive: duplicate tensor " + t.name);
    require(t.values.size() == nd::shape_size(t.shape), Errc::kShape,
            "archive: payload size mismatch for " + t.name);
    w.str(t.name);
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) w.u64(d);
    for (float v : t.values) w.f32(v);
  }
  return w.take();
}

TensorArchive decode_archive(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  if (bytes.size() < 6 || std::memcmp(bytes.data(), kArchiveMagic, 6) != 0)
    fail(Errc::kMagicMismatch, origin + ": not a WLANN1 archive (magic mismatch)");
  std::vector<std::uint8_t> body(bytes.begin() + 6, bytes.end());
  Reader r(body, origin);
  TensorArchive a;
  a.config = parse_doc(r.str(), origin, "config");
  a.metadata = parse_doc(r.str(), origin, "metadata");
  const std::uint32_t count = r.u32();
  std::set<std::string> seen;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray t;
    t.name = r.str();
    if (!seen.insert(t.name).second)
      fail(Errc::kFormat, origin + ": duplicate tensor " + t.name);
    const std::uint32_t rank = r.u32();
    std::size_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      const std::uint64_t d = r.u64();
      t.shape.push_back(static_cast<std::size_t>(d));
      n *= static_cast<std::size_t>(d);
    }
    if (n > r.remaining() / 4)
      fail(Errc::kTruncatedPayload, origin + ": truncated payload in tensor " + t.name);
    t.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) t.values[k] = r.f32();
    a.tensors.push_back(std::move(t));
  }
  return a;
}

void write_archive(const std::filesystem::path& path, const TensorArchive& archive) {
  const auto bytes = encode_archive(archive);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::kIo, "write failed: " + path.string());
}

TensorArchive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_archive(bytes, path.string());
}

}  // namespace wlann
