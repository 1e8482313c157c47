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

#ifndef WLANN_CORE_GRADCHECK_HPP_
#define WLANN_CORE_GRADCHECK_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wlann/core/tensor.hpp"

namespace wlann::nd {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Relative error is |a - n| / max(|a|, |n|, floor); the floor keeps
  /// near-zero gradients from turning round-off into large ratios.
  double denominator_floor = 1e-6;
  /// 0 checks every entry; otherwise a seeded sample of this many entries
  /// per tensor.
  std::size_t max_entries_per_tensor = 0;
  std::uint64_t seed = 0;
};

struct TensorCheck {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<TensorCheck> tensors;

  bool passed() const;
  double max_rel_error() const;
};

/// f(true) evaluates the scalar and fills the grad buffers of the checked
/// tensors by reverse mode; f(false) only evaluates. The checker zeroes the
/// buffers before the reverse pass and compares each checked entry against
/// the central difference (f(theta + h e_i) - f(theta - h e_i)) / 2h.
using ScalarFunction = std::function<double(bool with_grad)>;

GradCheckReport grad_check(const ScalarFunction& f, std::span<const NamedTensor> params,
                           const GradCheckOptions& options = {});

double relative_error(double analytic, double numeric, double floor);

}  // namespace wlann::nd

#endif  // WLANN_CORE_GRADCHECK_HPP_
