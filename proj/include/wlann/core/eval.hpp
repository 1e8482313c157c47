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

// Challenge scoring: 7-class confusion matrix, SN/SP and the derived
// average, harmonic and total scores.

#ifndef WLANN_CORE_EVAL_HPP_
#define WLANN_CORE_EVAL_HPP_

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wlann/core/model.hpp"

namespace wlann::train {
struct Example;
}

namespace wlann::eval {

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int classes = 7);

  int classes() const { return classes_; }
  void add(int truth, int predicted);
  std::size_t at(int truth, int predicted) const;
  std::size_t row_sum(int truth) const;
  std::size_t total() const;

 private:
  int classes_;
  std::vector<std::size_t> counts_;
};

struct DerivedScores {
  double as = 0.0;
  double hs = 0.0;
  double ts = 0.0;
};

/// AS = (SN+SP)/2, HS = 2 SN SP/(SN+SP) (0 when both are 0), TS = (AS+HS)/2.
DerivedScores consistency_check(double sn, double sp);

struct ScoreReport {
  std::string split;
  std::size_t events = 0;
  std::size_t cas = 0, tas = 0, cns = 0, tns = 0;
  /// Unset when the denominator is empty; the name then appears in
  /// `undefined`.
  std::optional<double> sn, sp, as, hs, ts;
  /// Abnormal events predicted as any abnormal class.
  std::size_t binary_cas = 0;
  std::optional<double> binary_sn;
  double accuracy = 0.0;
  std::vector<std::optional<double>> per_class_recall;
  std::vector<std::string> undefined;
  ConfusionMatrix confusion;
};

/// Pairs are (true label, predicted label); class 0 is Normal.
ScoreReport score(std::span<const std::pair<int, int>> pairs, int classes = 7,
                  std::string split = "");

/// Deterministic forward (no augmentation) and argmax for every example.
/// Errc::kEmptyInput on an empty split.
ScoreReport evaluate(const WlannModel& model, const std::vector<train::Example>& examples,
                     const std::string& split, int jobs = 1,
                     std::vector<int>* predictions = nullptr);

std::string format_ratio(const std::optional<double>& v);
nlohmann::ordered_json report_to_json(const ScoreReport& report);
/// Human-readable multi-line summary.
std::string format_summary(const ScoreReport& report);

}  // namespace wlann::eval

#endif  // WLANN_CORE_EVAL_HPP_
