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

#include "wlann/core/log.hpp"

#include <iostream>
#include <mutex>
#include <string>

#include "wlann/core/error.hpp"

namespace wlann {

namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

LogSink& sink_slot() {
  static LogSink sink;
  return sink;
}

void emit(LogLevel level, std::string_view message) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  if (sink_slot()) {
    sink_slot()(level, message);
  } else if (level == LogLevel::kWarning) {
    std::cerr << "WARNING: " << message << '\n';
  }
}

}  // namespace

void set_log_sink(LogSink sink) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  sink_slot() = std::move(sink);
}

void log_info(std::string_view message) { emit(LogLevel::kInfo, message); }

void log_warning(std::string_view message) {
  emit(LogLevel::kWarning, message);
}

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::kPrecondition: return "precondition";
    case Errc::kValidation: return "validation";
    case Errc::kConfig: return "config";
    case Errc::kShape: return "shape";
    case Errc::kRange: return "range";
    case Errc::kFormat: return "format";
    case Errc::kEmptyInput: return "empty input";
    case Errc::kDegenerateInput: return "degenerate input";
    case Errc::kIo: return "io";
    case Errc::kNumeric: return "numeric";
    case Errc::kMagicMismatch: return "magic mismatch";
    case Errc::kTruncatedPayload: return "truncated payload";
    case Errc::kShapeMismatch: return "shape mismatch";
  }
  return "unknown";
}

}  // namespace wlann
