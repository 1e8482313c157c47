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

// Finite-difference checks of every differentiable operation and of the
// whole network at the micro configuration.

#ifndef WLANN_CORE_GRADCHECK_SUITE_HPP_
#define WLANN_CORE_GRADCHECK_SUITE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "wlann/core/gradcheck.hpp"

namespace wlann::nd {

struct SuiteOptions {
  double tolerance = 1e-4;
  double step = 1e-4;
  bool end_to_end = true;
  /// Sampled entries per parameter tensor in the end-to-end check.
  std::size_t end_to_end_entries = 24;
  std::uint64_t seed = 0;
};

struct SuiteEntry {
  std::string op;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::string worst_tensor;
  bool passed = true;
};

std::vector<SuiteEntry> run_gradcheck_suite(const SuiteOptions& options = {});

}  // namespace wlann::nd

#endif  // WLANN_CORE_GRADCHECK_SUITE_HPP_
