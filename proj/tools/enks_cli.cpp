// Copyright 2026 The EnKS Authors
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


// enks: twin experiments with the ensemble Kushner-Stratonovich filter.
//
//   enks simulate --problem population --out data/pop
//   enks run --config samples/population.cfg --filter enks --filter enkf
//   enks sweep --problem linear-gaussian --variable N --values 50,100,200,400
//   enks compare --problem pendulum --horizon 5
//
// Exit status: 0 success, 2 configuration error, 3 numeric failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "enks/config.hpp"
#include "enks/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct Flags {
  std::string config;
  std::string problem;
  std::vector<std::string> filters;
  std::string ensemble, dt, alpha, kappa, seed, horizon, out, data, gain_clock;
  std::string variable, values, repeats;
  std::vector<std::string> sets;  // section.key=value
};

void AddCommonFlags(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "Config file (key = value, sectioned)");
  app->add_option("--problem", f.problem,
                  "frame50 | frame20-damaged | pendulum | population | linear-gaussian");
  app->add_option("--filter", f.filters, "enks | enks-iter | enkf (repeatable)");
  app->add_option("--ensemble", f.ensemble, "Ensemble size N");
  app->add_option("--dt", f.dt, "Time step");
  app->add_option("--alpha", f.alpha, "Denominator blend in (0, 1)");
  app->add_option("--kappa", f.kappa, "Inner iterations for enks-iter");
  app->add_option("--seed", f.seed, "Random seed");
  app->add_option("--horizon", f.horizon, "Final time T");
  app->add_option("--out", f.out, "Output directory");
  app->add_option("--data", f.data, "Load truth and measurements from this directory");
  app->add_option("--gain-clock", f.gain_clock, "interval | absolute");
  app->add_option("--set", f.sets, "Override any config key: section.key=value (repeatable)");
}

enks::ExperimentConfig Resolve(const Flags& f) {
  enks::ExperimentConfig cfg;
  if (!f.config.empty()) cfg = enks::LoadConfig(f.config);
  auto set = [&](const char* section, const char* key, const std::string& v) {
    if (!v.empty()) enks::ApplyConfigKey(cfg, section, key, v);
  };
  set("run", "problem", f.problem);
  if (!f.filters.empty()) {
    std::string joined;
    for (const auto& name : f.filters) joined += (joined.empty() ? "" : ",") + name;
    set("run", "filters", joined);
  }
  set("run", "ensemble", f.ensemble);
  set("run", "dt", f.dt);
  set("run", "alpha", f.alpha);
  set("run", "kappa", f.kappa);
  set("run", "seed", f.seed);
  set("run", "horizon", f.horizon);
  set("run", "out", f.out);
  set("run", "data", f.data);
  set("run", "gain_clock", f.gain_clock);
  set("sweep", "variable", f.variable);
  set("sweep", "values", f.values);
  set("sweep", "repeats", f.repeats);
  for (const auto& s : f.sets) {
    const auto dot = s.find('.');
    const auto eq = s.find('=');
    if (dot == std::string::npos || eq == std::string::npos || dot > eq) {
      throw enks::ConfigError("--set expects section.key=value, got '" + s + "'");
    }
    enks::ApplyConfigKey(cfg, s.substr(0, dot), s.substr(dot + 1, eq - dot - 1),
                         s.substr(eq + 1));
  }
  cfg.Validate();
  return cfg;
}

void PrintTable(const enks::ExperimentResult& result, bool all_channels) {
  const auto& summary = result.summary;
  std::vector<std::string> channels =
      all_channels ? result.twin.channels : result.twin.tracked;
  std::printf("%-12s", "channel");
  for (const auto& f : result.record.filters) std::printf(" %14s", (f + "_rmse").c_str());
  std::printf("\n");
  for (const auto& c : channels) {
    std::printf("%-12s", c.c_str());
    for (const auto& f : result.record.filters) {
      std::printf(" %14.6g", summary.at(f).at(c));
    }
    std::printf("\n");
  }
  std::printf("%-12s", "mean");
  for (const auto& f : result.record.filters) {
    double acc = 0.0;
    for (const auto& [c, v] : summary.at(f)) acc += v;
    std::printf(" %14.6g", acc / static_cast<double>(summary.at(f).size()));
  }
  std::printf("\n");
}

int Simulate(const enks::ExperimentConfig& cfg) {
  const std::string dir = cfg.out_dir.empty() ? "out" : cfg.out_dir;
  const enks::Twin twin = enks::MakeTwin(cfg);
  enks::WriteTwinData(twin, dir);
  std::ofstream(std::filesystem::path(dir) / "dataset.cfg", std::ios::binary)
      << enks::EmitConfigString(cfg);
  std::printf("%s: %zu steps, %zu state channels, %lld measured -> %s\n",
              enks::ToString(cfg.problem).c_str(), twin.steps(), twin.channels.size(),
              static_cast<long long>(twin.meas.q), dir.c_str());
  return 0;
}

int Run(enks::ExperimentConfig cfg, bool compare) {
  if (cfg.out_dir.empty()) cfg.out_dir = "out";
  if (compare && cfg.filters.empty()) {
    cfg.filters = {enks::FilterKind::kEnks, enks::FilterKind::kEnksIterative,
                   enks::FilterKind::kEnkf};
  }
  const auto result = enks::RunExperiment(cfg);
  std::printf("%s  N=%lld dt=%g T=%g seed=%llu  (%.2f s)\n",
              enks::ToString(cfg.problem).c_str(), static_cast<long long>(cfg.N()),
              cfg.Dt(), cfg.Horizon(), static_cast<unsigned long long>(cfg.seed),
              result.record.wall_seconds);
  PrintTable(result, !compare && result.twin.channels.size() <= 8);
  std::printf("wrote %s/run.csv\n", cfg.out_dir.c_str());
  return 0;
}

int Sweep(enks::ExperimentConfig cfg) {
  if (cfg.out_dir.empty()) cfg.out_dir = "out";
  if (cfg.sweep.values.empty()) {
    cfg.sweep.values = cfg.sweep.variable == enks::SweepVariable::kEnsembleSize
                           ? std::vector<double>{50, 100, 200, 400, 800, 1600}
                           : std::vector<double>{0.02, 0.01, 0.005, 0.0025};
  }
  const auto report = enks::RunSweep(cfg);
  const std::string name = enks::ToString(report.variable);
  std::printf("%10s %14s %14s\n", name.c_str(), "mean_error", "std_error");
  for (std::size_t i = 0; i < report.values.size(); ++i) {
    std::printf("%10g %14.6g %14.6g\n", report.values[i], report.mean_error[i],
                report.std_error[i]);
  }
  std::printf("log-log slope %.4f (intercept %.4f)\n", report.slope, report.intercept);
  std::filesystem::create_directories(cfg.out_dir);
  enks::EmitSweepCsv(report, (std::filesystem::path(cfg.out_dir) / "sweep.csv").string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensemble Kushner-Stratonovich filter twin experiments"};
  app.require_subcommand(1);
  Flags flags;
  auto* simulate = app.add_subcommand("simulate", "Simulate truth and measurements");
  auto* run = app.add_subcommand("run", "Run filters over a twin experiment");
  auto* sweep = app.add_subcommand("sweep", "Convergence study over N or dt");
  auto* compare = app.add_subcommand("compare", "RMSE table across filters");
  for (auto* sub : {simulate, run, sweep, compare}) AddCommonFlags(sub, flags);
  sweep->add_option("--variable", flags.variable, "N | dt");
  sweep->add_option("--values", flags.values, "Comma-separated sweep values");
  sweep->add_option("--repeats", flags.repeats, "Repeats per value (>= 5)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const enks::ExperimentConfig cfg = Resolve(flags);
    if (simulate->parsed()) return Simulate(cfg);
    if (run->parsed()) return Run(cfg, false);
    if (compare->parsed()) return Run(cfg, true);
    return Sweep(cfg);
  } catch (const enks::NumericFailure& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kExitNumeric;
  } catch (const enks::InvalidArgument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
