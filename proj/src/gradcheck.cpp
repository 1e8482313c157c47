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

#include "wlann/core/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wlann/core/error.hpp"
#include "wlann/core/rng.hpp"

namespace wlann::nd {

bool GradCheckReport::passed() const {
  return std::all_of(tensors.begin(), tensors.end(),
                     [](const TensorCheck& t) { return t.passed; });
}

double GradCheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& t : tensors) m = std::max(m, t.max_rel_error);
  return m;
}

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const ScalarFunction& f, std::span<const NamedTensor> params,
                           const GradCheckOptions& options) {
  for (const auto& p : params) {
    p.tensor->set_requires_grad(true);
    p.tensor->zero_grad();
  }
  const double base = f(true);
  if (!std::isfinite(base)) fail(Errc::kNumeric, "grad_check: non-finite value at base point");

  GradCheckReport report;
  for (const auto& p : params) {
    Tensor& t = *p.tensor;
    const std::vector<double> analytic = t.grad();
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      if (!std::isfinite(analytic[i]))
        fail(Errc::kNumeric, "grad_check: non-finite gradient at " + p.name + "[" +
                                 std::to_string(i) + "]");
    }

    std::vector<std::size_t> indices(t.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (options.max_entries_per_tensor > 0 && indices.size() > options.max_entries_per_tensor) {
      Rng rng = Rng::derive(options.seed, hash_name(p.name));
      // Partial Fisher-Yates: the first k entries form the sample.
      for (std::size_t k = 0; k < options.max_entries_per_tensor; ++k) {
        const auto j = static_cast<std::size_t>(
            rng.uniform_int(static_cast<std::int64_t>(k),
                            static_cast<std::int64_t>(indices.size() - 1)));
        std::swap(indices[k], indices[j]);
      }
      indices.resize(options.max_entries_per_tensor);
      std::sort(indices.begin(), indices.end());
    }

    TensorCheck check;
    check.name = p.name;
    for (std::size_t i : indices) {
      const double saved = t[i];
      t[i] = saved + options.step;
      const double plus = f(false);
      t[i] = saved - options.step;
      const double minus = f(false);
      t[i] = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus))
        fail(Errc::kNumeric, "grad_check: non-finite value while perturbing " + p.name +
                                 "[" + std::to_string(i) + "]");
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double err = relative_error(analytic[i], numeric, options.denominator_floor);
      ++check.checked;
      if (err > check.max_rel_error || check.checked == 1) {
        check.max_rel_error = err;
        check.worst_index = i;
        check.analytic_at_worst = analytic[i];
        check.numeric_at_worst = numeric;
      }
    }
    check.passed = check.max_rel_error < options.tolerance;
    report.tensors.push_back(check);
  }
  return report;
}

}  // namespace wlann::nd
