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

#ifndef WLANN_CORE_ERROR_HPP_
#define WLANN_CORE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace wlann {

enum class Errc {
  kPrecondition,
  kValidation,
  kConfig,
  kShape,
  kRange,
  kFormat,
  kEmptyInput,
  kDegenerateInput,
  kIo,
  kNumeric,
  kMagicMismatch,
  kTruncatedPayload,
  kShapeMismatch,
};

const char* errc_name(Errc code);

/// Every failure inside the core library is reported as an Error carrying a
/// category; the C API maps categories onto status codes.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace wlann

#endif  // WLANN_CORE_ERROR_HPP_
