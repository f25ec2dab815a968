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


// Acceptance runs. One line per criterion; exit status is nonzero if any
// selected criterion fails.
//
//   acceptance               all criteria
//   acceptance --criterion 3 just one

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "enks/config.hpp"
#include "enks/enkf.hpp"
#include "enks/enks.hpp"
#include "enks/enks_iterative.hpp"
#include "enks/experiment.hpp"
#include "enks/metrics.hpp"
#include "enks/record.hpp"

namespace enks {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

ExperimentConfig LinearGaussian(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.problem = Problem::kLinearGaussian;
  cfg.seed = seed;
  cfg.ensemble_size = 2000;
  cfg.dt = 0.01;
  cfg.horizon = 10.0;
  return cfg;
}

// Kalman equivalence on the scalar linear-Gaussian problem. One data set,
// ten filter seeds; the seed-averaged mean must sit within 3 standard errors
// of the Kalman mean on time average.
Outcome KalmanEquivalence() {
  const ExperimentConfig cfg = LinearGaussian(1);
  const Twin twin = MakeTwin(cfg);
  const Matrix kalman = KalmanMeans(twin);
  const int seeds = 10;
  std::vector<Matrix> means;
  for (int s = 1; s <= seeds; ++s) {
    RunOptions opt = RunOptions::From(cfg);
    opt.seed = static_cast<std::uint64_t>(s);
    means.push_back(RunFilter(twin, FilterKind::kEnks, opt).mean);
  }
  const Eigen::Index steps = kalman.cols();
  double deviation = 0.0, standard_error = 0.0;
  for (Eigen::Index k = 0; k < steps; ++k) {
    double sum = 0.0, sq = 0.0;
    for (const auto& m : means) sum += m(0, k);
    const double avg = sum / seeds;
    for (const auto& m : means) sq += (m(0, k) - avg) * (m(0, k) - avg);
    deviation += std::abs(avg - kalman(0, k));
    standard_error += std::sqrt(sq / (seeds - 1)) / std::sqrt(static_cast<double>(seeds));
  }
  deviation /= static_cast<double>(steps);
  standard_error /= static_cast<double>(steps);
  return {deviation <= 3.0 * standard_error,
          "mean |enks - kalman| = " + Num(deviation) + ", 3 x MC standard error = " +
              Num(3.0 * standard_error)};
}

Outcome EnsembleConvergence() {
  ExperimentConfig cfg = LinearGaussian(1);
  cfg.filters = {FilterKind::kEnks};
  cfg.sweep.variable = SweepVariable::kEnsembleSize;
  cfg.sweep.values = {50, 100, 200, 400, 800, 1600};
  cfg.sweep.repeats = 10;
  const auto report = RunSweep(cfg);
  std::string errors;
  for (double e : report.mean_error) errors += (errors.empty() ? "" : " ") + Num(e);
  return {report.slope >= -0.7 && report.slope <= -0.3,
          "slope vs N = " + Num(report.slope) + " (want [-0.7, -0.3]); errors " + errors};
}

Outcome TimeStepConvergence() {
  ExperimentConfig cfg = LinearGaussian(1);
  cfg.filters = {FilterKind::kEnks};
  cfg.ensemble_size = 200;
  cfg.horizon = 2.0;
  cfg.model.noise_reference_dt = 0.01;
  cfg.sweep.variable = SweepVariable::kTimeStep;
  cfg.sweep.values = {0.02, 0.01, 0.005, 0.0025};
  cfg.sweep.repeats = 5;
  cfg.sweep.reference_factor = 10.0;
  const auto report = RunSweep(cfg);
  std::string errors;
  for (double e : report.mean_error) errors += (errors.empty() ? "" : " ") + Num(e);
  return {report.slope >= 0.4,
          "slope vs dt = " + Num(report.slope) + " (want >= 0.4); errors " + errors};
}

double TrackError(const Matrix& mean, const Twin& twin) {
  return (mean - twin.truth.rightCols(mean.cols())).cwiseAbs().mean();
}

Outcome PopulationComparison() {
  const int wanted = 20;
  int used = 0, wins = 0;
  std::vector<std::uint64_t> skipped;
  for (std::uint64_t seed = 1; used < wanted; ++seed) {
    ExperimentConfig cfg;
    cfg.problem = Problem::kPopulation;
    cfg.seed = seed;
    Twin twin;
    try {
      twin = MakeTwin(cfg);
    } catch (const NumericFailure&) {
      skipped.push_back(seed);
      continue;
    }
    ++used;
    auto error = [&](FilterKind kind) {
      try {
        return TrackError(RunFilter(twin, kind, RunOptions::From(cfg)).mean, twin);
      } catch (const NumericFailure&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    wins += error(FilterKind::kEnks) < error(FilterKind::kEnkf);
  }
  return {wins >= 16, "enks better in " + std::to_string(wins) + "/" + std::to_string(wanted) +
                          " seeds (want >= 16); " + std::to_string(skipped.size()) +
                          " seeds skipped for truth overflow"};
}

Outcome DamageDetection() {
  const int seeds = 10;
  int hits = 0;
  std::string estimates;
  for (int s = 1; s <= seeds; ++s) {
    ExperimentConfig cfg;
    cfg.problem = Problem::kFrame20Damaged;
    cfg.seed = static_cast<std::uint64_t>(s);
    cfg.ensemble_size = 300;
    cfg.dt = 0.01;
    cfg.horizon = 20.0;
    cfg.model.dof = 4;
    cfg.model.damaged_storey = 3;
    cfg.model.meas_noise_rel = 0.005;
    const Twin twin = MakeTwin(cfg);
    const Matrix mean = RunFilter(twin, FilterKind::kEnks, RunOptions::From(cfg)).mean;
    const Vector k = mean.col(mean.cols() - 1).segment(8, 4);
    Eigen::Index argmin = 0;
    k.minCoeff(&argmin);
    hits += argmin == 2;
    estimates += " k" + std::to_string(argmin + 1);
  }
  return {hits >= 7, "damaged storey is the minimum in " + std::to_string(hits) + "/" +
                         std::to_string(seeds) + " seeds (want >= 7); argmin:" + estimates};
}

Outcome IterativeBehaviour() {
  const int seeds = 10;
  std::size_t monotone = 0, traced = 0;
  double sq_plain = 0.0, sq_iter = 0.0;
  for (int s = 1; s <= seeds; ++s) {
    ExperimentConfig cfg = LinearGaussian(static_cast<std::uint64_t>(s));
    cfg.kappa = 10;
    const Twin twin = MakeTwin(cfg);
    RunOptions opt = RunOptions::From(cfg);
    opt.keep_traces = true;
    const auto iter = RunFilter(twin, FilterKind::kEnksIterative, opt);
    const auto plain = RunFilter(twin, FilterKind::kEnks, opt);
    for (const auto& trace : iter.traces) {
      const auto& r = trace.residuals;
      bool ok = true;
      for (std::size_t k = 1; k < r.size(); ++k) ok = ok && r[k] <= r[k - 1];
      monotone += ok;
      ++traced;
    }
    const Eigen::Index last = twin.truth.cols() - 1;
    const double x = twin.truth(0, last);
    sq_iter += std::pow(iter.mean(0, last - 1) - x, 2);
    sq_plain += std::pow(plain.mean(0, last - 1) - x, 2);
  }
  const double fraction = static_cast<double>(monotone) / static_cast<double>(traced);
  const double rmse_iter = std::sqrt(sq_iter / seeds), rmse_plain = std::sqrt(sq_plain / seeds);
  const bool residual_ok = fraction >= 0.9;
  const bool rmse_ok = rmse_iter <= 1.1 * rmse_plain;
  return {residual_ok && rmse_ok,
          std::string(residual_ok ? "" : "[residual part fails] ") +
              (rmse_ok ? "" : "[rmse part fails] ") + "nonincreasing residual traces " +
              Num(100.0 * fraction) + "% (want >= 90%); final rmse iter " + Num(rmse_iter) +
              " vs plain " + Num(rmse_plain) + " (want <= 1.1x)"};
}

Outcome NoCollapse() {
  ExperimentConfig cfg;
  cfg.problem = Problem::kPopulation;
  cfg.ensemble_size = 100;
  cfg.dt = 0.1;
  cfg.horizon = 100.0;
  Twin twin;
  for (cfg.seed = 1;; ++cfg.seed) {
    try {
      twin = MakeTwin(cfg);
      break;
    } catch (const NumericFailure&) {
    }
  }
  const auto run = RunFilter(twin, FilterKind::kEnks, RunOptions::From(cfg));
  const Matrix& x = run.final_ensemble.particles();
  std::vector<double> values(x.data(), x.data() + x.size());
  std::sort(values.begin(), values.end());
  const bool distinct = std::adjacent_find(values.begin(), values.end()) == values.end();
  const double sd = run.std(0, run.std.cols() - 1);
  return {distinct && sd > 1e-8 && twin.steps() == 1000,
          "seed " + std::to_string(cfg.seed) + ", " + std::to_string(twin.steps()) +
              " steps: particles " + (distinct ? "pairwise distinct" : "NOT distinct") +
              ", std " + Num(sd)};
}

bool AllZero(const Matrix& m) { return (m.array() == 0.0).all(); }

Outcome ExactInvariants() {
  std::vector<std::string> failures;
  auto require = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };

  // Zero spread, zero gain, for all three update rules.
  const Ensemble flat(Eigen::Vector3d(1.0, -2.0, 0.5).replicate(1, 8));
  const Matrix h_flat = Eigen::Vector2d(0.7, 3.0).replicate(1, 8);
  FilterState st;
  st.t_prev = 0.3;
  st.t_curr = 0.31;
  st.prev_state_mean = Eigen::Vector3d(0.9, -2.1, 0.4);
  st.prev_meas_mean = Eigen::Vector2d(0.6, 2.9);
  const Matrix sigma = 0.2 * Matrix::Identity(2, 2);
  for (GainClock clock : {GainClock::kInterval, GainClock::kAbsolute}) {
    FilterConfig fc;
    fc.clock = clock;
    require(AllZero(ComputeGain(flat, h_flat, st, fc, sigma).values), "enks gain nonzero");
    require(AllZero(IterativeGain(flat, h_flat, st, fc, sigma).values),
            "iterative gain nonzero");
  }
  require(AllZero(EnkfGain(flat, h_flat, sigma * sigma.transpose()).values),
          "enkf gain nonzero");

  // kappa = 1 reproduces the plain update bit for bit.
  for (Problem p : {Problem::kPendulum, Problem::kPopulation, Problem::kLinearGaussian,
                    Problem::kFrame20Damaged}) {
    ExperimentConfig cfg;
    cfg.problem = p;
    cfg.seed = 3;
    cfg.ensemble_size = 50;
    cfg.kappa = 1;
    cfg.horizon = 20 * cfg.Dt();
    const Twin twin = MakeTwin(cfg);
    const auto a = RunFilter(twin, FilterKind::kEnks, RunOptions::From(cfg));
    const auto b = RunFilter(twin, FilterKind::kEnksIterative, RunOptions::From(cfg));
    require(a.final_ensemble == b.final_ensemble && a.mean == b.mean,
            "kappa=1 differs on " + ToString(p));
  }

  // CSV round trip.
  RunRecord record;
  record.filters = {"enks", "enks-iter", "enkf"};
  RngStream rng(99, 1);
  for (std::size_t k = 1; k <= 200; ++k) {
    const double scale = std::pow(10.0, std::clamp(rng.NextNormal() * 50.0, -300.0, 300.0));
    record.rows.push_back({k, 0.01 * static_cast<double>(k), "c" + std::to_string(k % 7),
                           rng.NextNormal() * scale,
                           {rng.NextNormal(), rng.NextNormal() * scale, 1.0 / 3.0},
                           {std::abs(rng.NextNormal()), 5e-324, 1e300}});
  }
  const std::string text = EmitCsvString(record);
  const RunRecord back = LoadCsvString(text);
  require(back == record && EmitCsvString(back) == text, "csv round trip");

  // Power-law sweeps.
  const std::vector<double> sizes = {3, 17, 250, 4096};
  for (double p : {-0.5, 0.5, 1.0, -1.0}) {
    const auto report = ConvergenceSweep(SweepVariable::kEnsembleSize, sizes, 5,
                                         [p](double v, int) { return 0.37 * std::pow(v, p); });
    require(std::abs(report.slope - p) <= 1e-12, "power law " + Num(p) + " gave " +
                                                     Num(report.slope));
  }

  std::string detail = failures.empty() ? "zero gains, kappa=1 identity, csv round trip, "
                                          "power-law slopes all exact"
                                        : "";
  for (const auto& f : failures) detail += (detail.empty() ? "" : "; ") + f;
  return {failures.empty(), detail};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& Criteria() {
  static const std::vector<Criterion> all = {
      {1, "kalman equivalence", KalmanEquivalence},
      {2, "ensemble convergence order", EnsembleConvergence},
      {3, "time-step convergence", TimeStepConvergence},
      {4, "population enks vs enkf", PopulationComparison},
      {5, "damage detection (4-dof)", DamageDetection},
      {6, "iterative enks", IterativeBehaviour},
      {7, "no particle collapse", NoCollapse},
      {8, "exact invariants", ExactInvariants},
  };
  return all;
}

}  // namespace
}  // namespace enks

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      selected.insert(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion N]...\n");
      return 2;
    }
  }
  int failed = 0;
  for (const auto& c : enks::Criteria()) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    enks::Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d %s: %s (%s) [%.1fs]\n", c.id, out.pass ? "PASS" : "FAIL", c.name,
                out.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !out.pass;
  }
  return failed == 0 ? 0 : 1;
}
