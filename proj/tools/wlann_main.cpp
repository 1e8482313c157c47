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

// wlann: command-line front end over the C library.
//
// Exit codes: 0 success, 1 validation/usage error, 2 I/O error, 3 numeric
// failure.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wlann/wlann.h"

namespace {

struct OwnedString {
  char* s = nullptr;
  ~OwnedString() { wlann_string_free(s); }
  std::string str() const { return s ? s : ""; }
};

int report(wlann_status st, const std::string& what) {
  if (st == WLANN_OK) return 0;
  std::cerr << "error: " << what << " failed (" << wlann_status_name(st)
            << "): " << wlann_last_error() << "\n";
  return wlann_exit_code(st);
}

void log_to_console(wlann_log_level level, const char* message, void*) {
  if (level == WLANN_LOG_WARNING)
    std::cerr << "WARNING: " << message << "\n";
  else
    std::cout << message << "\n" << std::flush;
}

struct ConfigFlags {
  std::string preset = "default";
  std::string file;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr;
  std::optional<int> batch_size;
  std::optional<double> gamma;
  std::optional<double> seconds;

  void add_to(CLI::App* app, bool training) {
    app->add_option("--preset", preset, "Built-in config: default or micro")
        ->check(CLI::IsMember({"default", "micro"}))
        ->capture_default_str();
    app->add_option("--config", file, "JSON config file overlaid on the preset");
    app->add_option("--seed", seed, "Random seed (overrides the config)");
    app->add_option("--seconds", seconds, "Fixed input length in seconds");
    if (training) {
      app->add_option("--lr", lr, "Adam learning rate");
      app->add_option("--batch-size", batch_size, "Events per optimizer step");
      app->add_option("--gamma", gamma, "Focal loss gamma");
    }
  }

  // defaults < file < flags
  wlann_status build(wlann_config** out) const {
    wlann_status st = wlann_config_create(preset.c_str(), out);
    if (st != WLANN_OK) return st;
    if (!file.empty() && (st = wlann_config_load_file(*out, file.c_str())) != WLANN_OK) return st;
    nlohmann::json overlay = nlohmann::json::object();
    if (seed) overlay["seed"] = *seed;
    if (seconds) overlay["fixed_input_seconds"] = *seconds;
    if (gamma) overlay["focal_gamma"] = *gamma;
    if (lr) overlay["optim"]["learning_rate"] = *lr;
    if (batch_size) overlay["optim"]["batch_size"] = *batch_size;
    return wlann_config_merge_json(*out, overlay.dump().c_str());
  }
};

struct ConfigHandle {
  wlann_config* p = nullptr;
  ~ConfigHandle() { wlann_config_free(p); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Respiratory sound event classifier (waveform CNN + spectrogram transformer)",
               "wlann"};
  app.require_subcommand(1);
  app.set_version_flag("--version", wlann_version());
  bool quiet = false;
  app.add_flag("--quiet", quiet, "Suppress progress lines");

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic 3-class corpus");
  std::string synth_out;
  int synth_n = 60;
  std::uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("-n,--per-class", synth_n, "Events per class")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Random seed")->capture_default_str();

  // features
  auto* features = app.add_subcommand("features", "Prepare model inputs for one WAV file");
  ConfigFlags feat_cfg;
  std::string feat_wav, feat_out;
  bool feat_augment = false;
  features->add_option("--wav", feat_wav, "Input WAV file")->required();
  features->add_option("--out", feat_out, "Output tensor archive (.tns)")->required();
  features->add_flag("--augment", feat_augment, "Apply SpecAugment to the spectrogram");
  feat_cfg.add_to(features, false);

  // train
  auto* train = app.add_subcommand("train", "Train on the train split of a corpus");
  ConfigFlags train_cfg;
  std::string train_data, train_out, train_resume;
  int train_epochs = 1, train_jobs = 1;
  bool train_no_augment = false;
  train->add_option("--data", train_data, "Corpus directory")->required();
  train->add_option("--out", train_out, "Checkpoint path")->required();
  train->add_option("--epochs", train_epochs, "Total epochs")->capture_default_str();
  train->add_option("--jobs", train_jobs, "Worker threads per batch")->capture_default_str();
  train->add_option("--resume", train_resume, "Continue from this checkpoint");
  train->add_flag("--no-augment", train_no_augment, "Disable SpecAugment");
  train_cfg.add_to(train, true);

  // eval
  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a corpus split");
  std::string eval_data, eval_model, eval_split = "inter", eval_report;
  int eval_jobs = 1;
  eval->add_option("--data", eval_data, "Corpus directory")->required();
  eval->add_option("--model", eval_model, "Checkpoint path")->required();
  eval->add_option("--split", eval_split, "train, intra, inter or heldout")
      ->check(CLI::IsMember({"train", "intra", "inter", "test_intra", "test_inter", "heldout"}))
      ->capture_default_str();
  eval->add_option("--report", eval_report, "JSON report path");
  eval->add_option("--jobs", eval_jobs, "Worker threads")->capture_default_str();

  // predict
  auto* predict = app.add_subcommand("predict", "Classify one WAV file");
  std::string pred_wav, pred_model;
  predict->add_option("--wav", pred_wav, "Input WAV file")->required();
  predict->add_option("--model", pred_model, "Checkpoint path")->required();

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  double gc_tol = 1e-4;
  std::uint64_t gc_seed = 0;
  bool gc_ops_only = false;
  gradcheck->add_option("--tolerance", gc_tol, "Relative error bound")->capture_default_str();
  gradcheck->add_option("--seed", gc_seed, "Random seed")->capture_default_str();
  gradcheck->add_flag("--ops-only", gc_ops_only, "Skip the whole-network check");

  if (argc <= 1) {
    std::cout << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  wlann_set_log_callback(quiet ? nullptr : log_to_console, nullptr);

  if (*synth) {
    OwnedString summary;
    const auto st = wlann_synth(synth_out.c_str(), synth_n, synth_seed, &summary.s);
    if (st != WLANN_OK) return report(st, "synth");
    std::cout << summary.str() << "\n";
    return 0;
  }

  if (*features) {
    ConfigHandle cfg;
    auto st = feat_cfg.build(&cfg.p);
    if (st != WLANN_OK) return report(st, "config");
    OwnedString summary;
    st = wlann_features(cfg.p, feat_wav.c_str(), feat_out.c_str(), feat_augment ? 1 : 0,
                        feat_cfg.seed.value_or(0), &summary.s);
    if (st != WLANN_OK) return report(st, "features");
    std::cout << summary.str() << "\n";
    return 0;
  }

  if (*train) {
    ConfigHandle cfg;
    auto st = train_cfg.build(&cfg.p);
    if (st != WLANN_OK) return report(st, "config");
    wlann_train_options opts{train_epochs, train_jobs, train_no_augment ? 0 : 1,
                             train_resume.empty() ? nullptr : train_resume.c_str()};
    OwnedString summary;
    st = wlann_train(cfg.p, train_data.c_str(), train_out.c_str(), &opts, &summary.s);
    if (st != WLANN_OK) return report(st, "train");
    std::cout << summary.str() << "\n";
    return 0;
  }

  if (*eval) {
    OwnedString summary;
    const auto st = wlann_eval(eval_data.c_str(), eval_model.c_str(), eval_split.c_str(),
                               eval_report.empty() ? nullptr : eval_report.c_str(), eval_jobs,
                               &summary.s);
    if (st != WLANN_OK) return report(st, "eval");
    std::cout << summary.str();
    return 0;
  }

  if (*predict) {
    wlann_model* model = nullptr;
    auto st = wlann_model_load(pred_model.c_str(), &model);
    if (st != WLANN_OK) return report(st, "loading model");
    std::vector<double> scores(static_cast<std::size_t>(wlann_model_num_classes(model)));
    int label = 0;
    st = wlann_model_predict_wav(model, pred_wav.c_str(), &label, scores.data());
    wlann_model_free(model);
    if (st != WLANN_OK) return report(st, "predict");
    std::cout << "label " << wlann_label_name(label) << "\n";
    for (std::size_t i = 0; i < scores.size(); ++i) {
      char line[96];
      std::snprintf(line, sizeof line, "%-20s %.6f\n", wlann_label_name(static_cast<int>(i)),
                    scores[i]);
      std::cout << line;
    }
    return 0;
  }

  if (*gradcheck) {
    wlann_gradcheck* suite = nullptr;
    const auto st = wlann_gradcheck_run(gc_tol, gc_ops_only ? 0 : 1, gc_seed, &suite);
    if (st != WLANN_OK) return report(st, "gradcheck");
    bool all = true;
    for (std::size_t i = 0; i < wlann_gradcheck_count(suite); ++i) {
      const char* op = nullptr;
      double err = 0.0;
      std::size_t checked = 0;
      int passed = 0;
      wlann_gradcheck_entry(suite, i, &op, &err, &checked, &passed);
      char line[160];
      std::snprintf(line, sizeof line, "%-28s max_rel_err %.3e  entries %6zu  %s\n", op, err,
                    checked, passed ? "ok" : "FAIL");
      std::cout << line;
      all = all && passed;
    }
    wlann_gradcheck_free(suite);
    std::cout << (all ? "all operations within tolerance\n" : "gradient check FAILED\n");
    return all ? 0 : 3;
  }
  return 1;
}
