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

#include <cstdio>
#include <exception>
#include <sstream>
#include <thread>

#include "wlann/core/error.hpp"
#include "wlann/core/eval.hpp"
#include "wlann/core/train.hpp"

namespace wlann::eval {

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::ordered_json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(int classes)
    : classes_(classes), counts_(static_cast<std::size_t>(classes * classes), 0) {
  require(classes > 0, Errc::kPrecondition, "confusion matrix needs at least one class");
}

void ConfusionMatrix::add(int truth, int predicted) {
  require(truth >= 0 && truth < classes_ && predicted >= 0 && predicted < classes_,
          Errc::kValidation,
          "label pair (" + std::to_string(truth) + ", " + std::to_string(predicted) +
              ") outside [0, " + std::to_string(classes_) + ")");
  ++counts_[static_cast<std::size_t>(truth * classes_ + predicted)];
}

std::size_t ConfusionMatrix::at(int truth, int predicted) const {
  return counts_.at(static_cast<std::size_t>(truth * classes_ + predicted));
}

std::size_t ConfusionMatrix::row_sum(int truth) const {
  std::size_t s = 0;
  for (int p = 0; p < classes_; ++p) s += at(truth, p);
  return s;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t s = 0;
  for (std::size_t c : counts_) s += c;
  return s;
}

DerivedScores consistency_check(double sn, double sp) {
  require(sn >= 0.0 && sn <= 1.0 && sp >= 0.0 && sp <= 1.0, Errc::kValidation,
          "consistency_check: SN and SP must lie in [0, 1]");
  DerivedScores d;
  d.as = 0.5 * (sn + sp);
  // 2*sn*sp/(sn+sp) written as AS - d^2/AS so that HS <= AS survives rounding
  const double half_gap = 0.5 * (sn - sp);
  d.hs = sn > 0.0 && sp > 0.0 ? d.as - half_gap * half_gap / d.as : 0.0;
  d.ts = 0.5 * (d.as + d.hs);
  return d;
}

ScoreReport score(std::span<const std::pair<int, int>> pairs, int classes, std::string split) {
  require(!pairs.empty(), Errc::kEmptyInput, "score: no events");
  ScoreReport r;
  r.split = std::move(split);
  r.confusion = ConfusionMatrix(classes);
  for (const auto& [t, p] : pairs) r.confusion.add(t, p);
  r.events = pairs.size();

  const ConfusionMatrix& m = r.confusion;
  std::size_t correct = 0;
  for (int c = 0; c < classes; ++c) correct += m.at(c, c);
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.events);
  r.tns = m.row_sum(0);
  r.cns = m.at(0, 0);
  for (int c = 1; c < classes; ++c) {
    r.tas += m.row_sum(c);
    r.cas += m.at(c, c);
    r.binary_cas += m.row_sum(c) - m.at(c, 0);
  }
  r.sn = ratio(r.cas, r.tas);
  r.sp = ratio(r.cns, r.tns);
  r.binary_sn = ratio(r.binary_cas, r.tas);
  if (!r.sn) r.undefined.push_back("SN");
  if (!r.sp) r.undefined.push_back("SP");
  if (r.sn && r.sp) {
    const DerivedScores d = consistency_check(*r.sn, *r.sp);
    r.as = d.as;
    r.hs = d.hs;
    r.ts = d.ts;
  } else {
    r.undefined.insert(r.undefined.end(), {"AS", "HS", "TS"});
  }
  for (int c = 0; c < classes; ++c) r.per_class_recall.push_back(ratio(m.at(c, c), m.row_sum(c)));
  return r;
}

ScoreReport evaluate(const WlannModel& model, const std::vector<train::Example>& examples,
                     const std::string& split, int jobs, std::vector<int>* predictions) {
  require(!examples.empty(), Errc::kEmptyInput, "evaluate: split '" + split + "' is empty");
  const std::size_t n = examples.size();
  std::vector<int> preds(n, 0);
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](std::size_t i) {
    try {
      preds[i] = argmax(model.forward(examples[i].input));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += workers) work(i);
      });
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pairs.emplace_back(examples[i].label, preds[i]);
  if (predictions) *predictions = preds;
  return score(pairs, model.config().classes, split);
}

std::string format_ratio(const std::optional<double>& v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

nlohmann::ordered_json report_to_json(const ScoreReport& r) {
  nlohmann::ordered_json j;
  const int classes = r.confusion.classes();
  j["split"] = r.split;
  j["events"] = r.events;
  j["accuracy"] = r.accuracy;
  j["SN"] = opt_json(r.sn);
  j["SP"] = opt_json(r.sp);
  j["AS"] = opt_json(r.as);
  j["HS"] = opt_json(r.hs);
  j["TS"] = opt_json(r.ts);
  j["CAS"] = r.cas;
  j["TAS"] = r.tas;
  j["CNS"] = r.cns;
  j["TNS"] = r.tns;
  j["undefined"] = r.undefined;
  j["binary_detection"] = {{"CAS", r.binary_cas}, {"SN", opt_json(r.binary_sn)}};
  nlohmann::ordered_json recall = nlohmann::ordered_json::object();
  std::vector<std::string> labels;
  for (int c = 0; c < classes; ++c) {
    const std::string name(dataio::label_name(dataio::label_from_index(c)));
    labels.push_back(name);
    recall[name] = opt_json(r.per_class_recall[static_cast<std::size_t>(c)]);
  }
  j["per_class_recall"] = recall;
  j["labels"] = labels;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (int t = 0; t < classes; ++t) {
    std::vector<std::size_t> row;
    for (int p = 0; p < classes; ++p) row.push_back(r.confusion.at(t, p));
    rows.push_back(row);
  }
  j["confusion"] = rows;
  return j;
}

std::string format_summary(const ScoreReport& r) {
  std::ostringstream os;
  os << "split " << (r.split.empty() ? "-" : r.split) << ": " << r.events << " events, accuracy "
     << format_ratio(r.accuracy) << "\n";
  os << "SN " << format_ratio(r.sn) << "  SP " << format_ratio(r.sp) << "  AS "
     << format_ratio(r.as) << "  HS " << format_ratio(r.hs) << "  TS " << format_ratio(r.ts)
     << "\n";
  os << "CAS/TAS " << r.cas << "/" << r.tas << "  CNS/TNS " << r.cns << "/" << r.tns
     << "  binary SN " << format_ratio(r.binary_sn) << "\n";
  return os.str();
}

}  // namespace wlann::eval
