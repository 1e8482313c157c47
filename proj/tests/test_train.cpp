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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "wlann/core/archive.hpp"
#include "wlann/core/error.hpp"
#include "wlann/core/log.hpp"
#include "wlann/core/train.hpp"

using namespace wlann;
using namespace wlann::train;
namespace fs = std::filesystem;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::kPrecondition;
}

Tensor vec(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor({n}, std::move(v));
}

fs::path temp_file(const std::string& tag) {
  return fs::temp_directory_path() / ("wlann_train_" + tag + "_" + std::to_string(::getpid()));
}

std::vector<Example> small_set(const WlannConfig& cfg, int n) {
  std::vector<Example> out;
  for (int i = 0; i < n; ++i) {
    const auto label = dataio::kSyntheticLabels[static_cast<std::size_t>(i) % 3];
    out.push_back(make_example(dataio::synthesize_event(label, 1.0, 100 + static_cast<std::uint64_t>(i)),
                               dataio::label_index(label), "ev" + std::to_string(i), cfg));
  }
  return out;
}

std::vector<const Example*> pointers(const std::vector<Example>& ex) {
  std::vector<const Example*> p;
  for (const auto& e : ex) p.push_back(&e);
  return p;
}

std::vector<std::uint8_t> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool same_parameters(TrainState& a, TrainState& b) {
  auto pa = a.model.params().named(), pb = b.model.params().named();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (pa[i].tensor->storage() != pb[i].tensor->storage()) return false;
  return true;
}

}  // namespace

TEST_CASE("focal loss worked examples") {
  const Tensor y = vec({0.2, 0.7, 0.1});
  const Tensor p = one_hot(1, 3);
  CHECK(focal_loss(y, p, 0.0) == doctest::Approx(0.356675).epsilon(1e-6));
  CHECK(std::abs(focal_loss(y, p, 0.0) + std::log(0.7)) < 1e-15);
  CHECK(focal_loss(y, p, 2.0) == doctest::Approx(0.0321).epsilon(1e-3));
  CHECK(std::abs(focal_loss(y, p, 2.0) - 0.09 * -std::log(0.7)) < 1e-15);
  CHECK(focal_loss(vec({1e-9, 1.0 - 1e-12, 1e-9}), p, 2.0) < 1e-12);
}

TEST_CASE("focal loss reduces to cross-entropy at gamma 0") {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> y(7), p(7);
    double z = 0.0;
    for (std::size_t i = 0; i < 7; ++i) {
      y[i] = u(gen);
      z += (p[i] = u(gen));
    }
    double ce = 0.0;
    for (std::size_t i = 0; i < 7; ++i) {
      p[i] /= z;
      ce -= p[i] * std::log(y[i]);
    }
    CHECK(std::abs(focal_loss(vec(y), vec(p), 0.0) - ce) < 1e-12);
  }
}

TEST_CASE("focal loss properties") {
  const Tensor p = one_hot(0, 2);
  double prev = 1e300;
  for (double yt = 0.01; yt < 1.0; yt += 0.01) {
    const Tensor y = vec({yt, 0.3});
    const double g2 = focal_loss(y, p, 2.0), g0 = focal_loss(y, p, 0.0);
    CHECK(g2 >= 0.0);
    CHECK(g2 < prev);
    prev = g2;
    if (yt >= 0.5) CHECK(g2 <= g0);
    CHECK(g2 / g0 == doctest::Approx((1.0 - yt) * (1.0 - yt)).epsilon(1e-12));
  }
  CHECK(code_of([] { focal_loss(vec({0.5, 0.5}), vec({0.7, 0.7}), 2.0); }) == Errc::kValidation);
  CHECK(code_of([] { focal_loss(vec({0.5, 0.5}), vec({1.2, -0.2}), 2.0); }) == Errc::kValidation);
  CHECK(code_of([] { focal_loss(vec({0.5, 0.5}), vec({1.0, 0.0}), -1.0); }) == Errc::kValidation);
  CHECK(code_of([] { focal_loss(vec({0.5, 0.5}), vec({1.0}), 2.0); }) == Errc::kValidation);
}

TEST_CASE("focal loss gradient matches central differences") {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (double gamma : {0.0, 0.5, 2.0, 3.0}) {
    std::vector<double> yv(5), pv(5);
    double z = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      yv[i] = u(gen);
      z += (pv[i] = u(gen));
    }
    for (double& v : pv) v /= z;
    const Tensor p = vec(pv);
    const Tensor g = focal_loss_grad(vec(yv), p, gamma);
    for (std::size_t i = 0; i < 5; ++i) {
      const double h = 1e-6;
      auto yp = yv, ym = yv;
      yp[i] += h;
      ym[i] -= h;
      const double num = (focal_loss(vec(yp), p, gamma) - focal_loss(vec(ym), p, gamma)) / (2 * h);
      CHECK(std::abs(num - g[i]) / std::max({std::abs(num), std::abs(g[i]), 1e-6}) < 1e-6);
    }
  }
}

TEST_CASE("normalized scores") {
  const Tensor s = vec({0.2, 0.6, 0.2});
  const Tensor n = normalize_scores(s);
  CHECK(n[0] == doctest::Approx(0.2));
  CHECK(n[1] == doctest::Approx(0.6));
  const Tensor d = normalize_scores_backward(vec({0.1, 0.2, 0.3, 0.4}), vec({1.0, 1.0, 1.0, 1.0}));
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(d[i]) < 1e-15);

  WlannConfig cfg = WlannConfig::micro();
  Tensor dp;
  const Tensor probs = vec({0.9, 0.1, 0.8, 0.1, 0.1, 0.2, 0.1});
  const double l = scored_loss(probs, one_hot(2, 7), cfg, &dp);
  CHECK(l == doctest::Approx(focal_loss(normalize_scores(probs), one_hot(2, 7), 2.0)));
  cfg.loss_scores = "sigmoid";
  CHECK(scored_loss(probs, one_hot(2, 7), cfg) == doctest::Approx(focal_loss(probs, one_hot(2, 7), 2.0)));
}

TEST_CASE("label prior bias") {
  const WlannConfig cfg = WlannConfig::micro();
  const auto ex = small_set(cfg, 6);
  WlannModel m(cfg);
  m.initialize(1);
  apply_label_prior(m, ex);
  const auto& b = m.params().head_b;
  CHECK(b[0] == doctest::Approx(std::log(0.5)).epsilon(1e-6));
  CHECK(b[2] == doctest::Approx(std::log(0.5)).epsilon(1e-6));
  CHECK(b[1] == doctest::Approx(std::log(1e-3 / (1 - 1e-3))).epsilon(1e-6));
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  WlannConfig cfg = WlannConfig::micro();
  cfg.optim.learning_rate = 0.0;
  const auto ex = small_set(cfg, 3);
  TrainState s = init_state(cfg, 4);
  TrainState ref = init_state(cfg, 4);
  const auto batch = pointers(ex);
  train_step(batch, s);
  train_step(batch, s);
  CHECK(s.step == 2);
  CHECK(same_parameters(s, ref));
}

TEST_CASE("training is reproducible and independent of the worker count") {
  const WlannConfig cfg = WlannConfig::micro();
  const auto ex = small_set(cfg, 4);
  const auto batch = pointers(ex);
  TrainState a = init_state(cfg, 5), b = init_state(cfg, 5);
  StepOptions threaded;
  threaded.jobs = 3;
  for (int i = 0; i < 3; ++i) {
    const double la = train_step(batch, a);
    const double lb = train_step(batch, b, threaded);
    CHECK(la == lb);
  }
  CHECK(same_parameters(a, b));
}

TEST_CASE("zero-gamma two-class loss decreases over a fixed batch") {
  WlannConfig cfg = WlannConfig::micro();
  cfg.classes = 2;
  cfg.focal_gamma = 0.0;
  cfg.optim.learning_rate = 1e-4;
  std::vector<Example> ex;
  for (int i = 0; i < 4; ++i) {
    const auto label = i % 2 == 0 ? dataio::Label::kNormal : dataio::Label::kWheeze;
    ex.push_back(make_example(dataio::synthesize_event(label, 1.0, 50 + static_cast<std::uint64_t>(i)), i % 2,
                              "b" + std::to_string(i), cfg));
  }
  TrainState s = init_state(cfg, 6);
  StepOptions opt;
  opt.augment = false;
  const auto batch = pointers(ex);
  double prev = 1e300;
  for (int i = 0; i < 20; ++i) {
    const double l = train_step(batch, s, opt);
    CHECK(l < prev);
    prev = l;
  }
}

TEST_CASE("non-finite loss names the step and example") {
  const WlannConfig cfg = WlannConfig::micro();
  const auto ex = small_set(cfg, 2);
  TrainState s = init_state(cfg, 7);
  s.model.params().head_w[0] = std::nan("");
  try {
    train_step(pointers(ex), s);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kNumeric);
    const std::string what = e.what();
    CHECK(what.find("step 1") != std::string::npos);
    CHECK(what.find("ev0") != std::string::npos);
  }
}

TEST_CASE("checkpoint round trip and error codes") {
  const WlannConfig cfg = WlannConfig::micro();
  const auto ex = small_set(cfg, 3);
  TrainState s = init_state(cfg, 8);
  train_step(pointers(ex), s);
  const fs::path path = temp_file("ckpt");
  save_checkpoint(path, s);
  TrainState back = load_checkpoint(path);
  CHECK(same_parameters(s, back));
  CHECK(back.step == s.step);
  CHECK(back.seed == s.seed);
  REQUIRE(back.adam_m.size() == s.adam_m.size());
  for (std::size_t i = 0; i < s.adam_m.size(); ++i) {
    CHECK(back.adam_m[i].storage() == s.adam_m[i].storage());
    CHECK(back.adam_v[i].storage() == s.adam_v[i].storage());
  }
  const auto bytes = file_bytes(path);
  CHECK(encode_archive(to_archive(back)) == bytes);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK(code_of([&] { decode_archive(truncated, "t"); }) == Errc::kTruncatedPayload);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(code_of([&] { decode_archive(bad_magic, "t"); }) == Errc::kMagicMismatch);

  TensorArchive extra = to_archive(s);
  extra.add("future.tensor", Tensor({2}, 1.0));
  std::vector<std::string> warnings;
  set_log_sink([&](LogLevel level, std::string_view msg) {
    if (level == LogLevel::kWarning) warnings.emplace_back(msg);
  });
  TrainState with_extra = state_from_archive(decode_archive(encode_archive(extra), "x"), "x");
  set_log_sink(nullptr);
  CHECK(same_parameters(with_extra, s));
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("future.tensor") != std::string::npos);

  TensorArchive missing = to_archive(s);
  missing.tensors.erase(missing.tensors.begin());
  CHECK(code_of([&] { state_from_archive(missing, "m"); }) == Errc::kShapeMismatch);
  TensorArchive reshaped = to_archive(s);
  reshaped.tensors[0].shape.push_back(1);
  CHECK(code_of([&] { state_from_archive(reshaped, "m"); }) == Errc::kShapeMismatch);
  TensorArchive dup = to_archive(s);
  dup.tensors.push_back(dup.tensors[0]);
  CHECK(code_of([&] { decode_archive(encode_archive(dup), "d"); }) == Errc::kFormat);
  fs::remove(path);
}

TEST_CASE("fit with zero epochs writes the initial parameters") {
  const WlannConfig cfg = WlannConfig::micro();
  const auto ex = small_set(cfg, 3);
  TrainState s = init_state(cfg, 9);
  const fs::path path = temp_file("zero");
  FitOptions opt;
  opt.epochs = 0;
  opt.out = path;
  CHECK(fit(ex, s, opt).empty());
  TrainState back = load_checkpoint(path);
  CHECK(back.step == 0);
  CHECK(same_parameters(back, s));
  fs::remove(path);
}

TEST_CASE("resume matches an uninterrupted run") {
  WlannConfig cfg = WlannConfig::micro();
  cfg.optim.batch_size = 2;
  const auto ex = small_set(cfg, 5);
  const fs::path full = temp_file("full"), part = temp_file("part");
  FitOptions opt;
  opt.epochs = 2;
  opt.out = full;
  TrainState a = init_state(cfg, 10);
  fit(ex, a, opt);

  TrainState b = init_state(cfg, 10);
  opt.epochs = 1;
  opt.out = part;
  fit(ex, b, opt);
  TrainState resumed = load_checkpoint(part);
  opt.epochs = 2;
  fit(ex, resumed, opt);
  CHECK(file_bytes(part) == file_bytes(full));
  CHECK(resumed.epoch_losses == a.epoch_losses);
  fs::remove(full);
  fs::remove(part);
}
