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

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "wlann/wlann.h"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string output;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(WLANN_CLI_PATH) + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::set<std::string> help_flags(const std::string& help) {
  std::set<std::string> flags;
  static const std::regex long_flag("--[a-z][a-z-]*");
  for (auto it = std::sregex_iterator(help.begin(), help.end(), long_flag); it != std::sregex_iterator(); ++it)
    flags.insert(it->str());
  return flags;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("wlann_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string take(char* s) {
  std::string out = s ? s : "";
  wlann_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("no arguments prints usage and fails") {
  const RunResult r = run("");
  CHECK(r.code == 1);
  CHECK(r.output.find("synth") != std::string::npos);
  CHECK(r.output.find("gradcheck") != std::string::npos);
  CHECK(run("frobnicate").code == 1);
  CHECK(run("--help").code == 0);
  CHECK(run("eval --data x --model y --bogus").code == 1);
  CHECK(run("eval --data x --model y --split sideways").code == 1);
}

TEST_CASE("help text enumerates every flag") {
  const std::set<std::string> config_flags{"--preset", "--config", "--seed", "--seconds"};
  const std::set<std::string> train_flags{"--lr", "--batch-size", "--gamma"};
  auto with = [](std::set<std::string> a, const std::set<std::string>& b) {
    a.insert(b.begin(), b.end());
    a.insert("--help");
    return a;
  };
  struct Case {
    const char* sub;
    std::set<std::string> flags;
  };
  const Case cases[] = {
      {"synth", with({"--out", "--per-class", "--seed"}, {})},
      {"features", with({"--wav", "--out", "--augment"}, config_flags)},
      {"train", with(with({"--data", "--out", "--epochs", "--jobs", "--resume", "--no-augment"}, config_flags),
                     train_flags)},
      {"eval", with({"--data", "--model", "--split", "--report", "--jobs"}, {})},
      {"predict", with({"--wav", "--model"}, {})},
      {"gradcheck", with({"--tolerance", "--seed", "--ops-only"}, {})},
  };
  for (const auto& c : cases) {
    const RunResult r = run(std::string(c.sub) + " --help");
    INFO(c.sub << "\n" << r.output);
    CHECK(r.code == 0);
    CHECK(help_flags(r.output) == c.flags);
  }
  const RunResult top = run("--help");
  CHECK(help_flags(top.output) == std::set<std::string>{"--help", "--version", "--quiet"});
}

TEST_CASE("exit codes follow the error class") {
  TempDir dir("codes");
  CHECK(run("eval --data " + dir.path.string() + "/none --model " + dir.path.string() + "/none.wlann").code == 2);
  CHECK(run("predict --wav /nonexistent.wav --model /nonexistent.wlann").code == 2);
  CHECK(run("synth --out " + dir.path.string() + "/c -n 0").code == 1);
  CHECK(run("train --data " + dir.path.string() + " --out x.wlann --preset nope").code == 1);
  CHECK(wlann_exit_code(WLANN_OK) == 0);
  CHECK(wlann_exit_code(WLANN_ERR_VALIDATION) == 1);
  CHECK(wlann_exit_code(WLANN_ERR_IO) == 2);
  CHECK(wlann_exit_code(WLANN_ERR_MAGIC_MISMATCH) == 2);
  CHECK(wlann_exit_code(WLANN_ERR_NUMERIC) == 3);
}

TEST_CASE("synth, features, train, eval and predict end to end") {
  TempDir dir("e2e");
  const std::string corpus = (dir.path / "corpus").string();
  const RunResult s = run("--quiet synth --out " + corpus + " -n 10 --seed 4");
  REQUIRE(s.code == 0);
  CHECK(fs::exists(fs::path(corpus) / "splits.txt"));

  std::string wav;
  for (const auto& e : fs::directory_iterator(corpus))
    if (e.path().extension() == ".wav" && e.path().filename().string().find("wheeze") != std::string::npos)
      wav = e.path().string();
  REQUIRE(!wav.empty());
  const std::string tns = (dir.path / "f.tns").string();
  CHECK(run("features --preset micro --wav " + wav + " --out " + tns).code == 0);
  CHECK(fs::file_size(tns) > 0);

  const std::string model = (dir.path / "m.wlann").string();
  const RunResult t = run("--quiet train --preset micro --data " + corpus + " --out " + model + " --epochs 1");
  INFO(t.output);
  REQUIRE(t.code == 0);
  const std::string report = (dir.path / "r.json").string();
  const RunResult e = run("eval --data " + corpus + " --model " + model + " --split heldout --report " + report);
  INFO(e.output);
  REQUIRE(e.code == 0);
  const auto doc = nlohmann::json::parse(std::ifstream(report));
  CHECK(doc["split"] == "heldout");
  CHECK(doc["events"] == 9);
  CHECK(doc.contains("config"));
  CHECK(doc["config"]["fixed_input_seconds"] == 1.0);

  const RunResult p = run("predict --wav " + wav + " --model " + model);
  CHECK(p.code == 0);
  CHECK(p.output.rfind("label ", 0) == 0);
  int lines = 0;
  for (char ch : p.output) lines += ch == '\n';
  CHECK(lines == 8);
}

TEST_CASE("c api configuration") {
  CHECK(std::string(wlann_version()).size() > 0);
  CHECK(wlann_num_labels() == 7);
  CHECK(std::string(wlann_label_name(2)) == "Wheeze");
  CHECK(wlann_label_name(9) == nullptr);

  wlann_config* cfg = nullptr;
  REQUIRE(wlann_config_create("default", &cfg) == WLANN_OK);
  char* text = nullptr;
  REQUIRE(wlann_config_shapes_json(cfg, &text) == WLANN_OK);
  const auto shapes = nlohmann::json::parse(take(text));
  CHECK(shapes["spec_frames"] == 798);
  CHECK(shapes["fused_channels"] == 80);
  CHECK(wlann_config_merge_json(cfg, R"({"ast": {"heads": 3}})") == WLANN_ERR_CONFIG);
  CHECK(std::string(wlann_last_error()).find("heads") != std::string::npos);
  CHECK(wlann_config_merge_json(cfg, "{broken") == WLANN_ERR_CONFIG);
  REQUIRE(wlann_config_merge_json(cfg, R"({"gru_hidden": 32})") == WLANN_OK);
  REQUIRE(wlann_config_to_json(cfg, &text) == WLANN_OK);
  CHECK(nlohmann::json::parse(take(text))["gru_hidden"] == 32);
  wlann_config_free(cfg);

  wlann_config* bad = nullptr;
  CHECK(wlann_config_create("huge", &bad) == WLANN_ERR_CONFIG);
  CHECK(bad == nullptr);
  CHECK(std::string(wlann_status_name(WLANN_ERR_TRUNCATED_PAYLOAD)) == "truncated payload");
}

TEST_CASE("c api model errors") {
  wlann_model* m = nullptr;
  CHECK(wlann_model_load("/nonexistent.wlann", &m) == WLANN_ERR_IO);
  CHECK(m == nullptr);
  TempDir dir("bad");
  const fs::path junk = dir.path / "junk.wlann";
  {
    std::ofstream out(junk, std::ios::binary);
    out << "NOTAWLANNFILE";
  }
  CHECK(wlann_model_load(junk.string().c_str(), &m) == WLANN_ERR_MAGIC_MISMATCH);
  CHECK(wlann_model_load(nullptr, &m) == WLANN_ERR_PRECONDITION);
}

TEST_CASE("gradcheck through the c api") {
  wlann_gradcheck* suite = nullptr;
  REQUIRE(wlann_gradcheck_run(1e-4, 0, 0, &suite) == WLANN_OK);
  CHECK(wlann_gradcheck_count(suite) >= 20);
  for (std::size_t i = 0; i < wlann_gradcheck_count(suite); ++i) {
    const char* op = nullptr;
    double err = 0.0;
    std::size_t checked = 0;
    int passed = 0;
    REQUIRE(wlann_gradcheck_entry(suite, i, &op, &err, &checked, &passed) == WLANN_OK);
    CHECK(passed == 1);
    CHECK(err < 1e-4);
    CHECK(checked > 0);
  }
  wlann_gradcheck_free(suite);
  const RunResult r = run("gradcheck --ops-only");
  CHECK(r.code == 0);
  CHECK(r.output.find("transformer_block") != std::string::npos);
}
