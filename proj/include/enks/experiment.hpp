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


#ifndef ENKS_EXPERIMENT_HPP_
#define ENKS_EXPERIMENT_HPP_

// Twin experiments: simulate a truth from the problem's model, corrupt it into
// measurements, run each selected filter over the same data, and tabulate.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "enks/benchmarks.hpp"
#include "enks/common.hpp"
#include "enks/config.hpp"
#include "enks/enkf.hpp"
#include "enks/enks.hpp"
#include "enks/enks_iterative.hpp"
#include "enks/metrics.hpp"
#include "enks/record.hpp"
#include "enks/rng.hpp"
#include "enks/sde.hpp"
#include "enks/svg.hpp"

namespace enks {

struct Twin {
  Problem problem = Problem::kLinearGaussian;
  double dt = 0.0;
  ProcessModel proc;        // filter's process model
  MeasurementModel meas;    // filter's measurement model
  ProcessModel truth_proc;  // parameters frozen
  Vector x0;
  Vector guess;
  Vector spread;
  Matrix r;  // per-sample observation-error covariance
  std::vector<std::string> channels;
  std::vector<std::string> tracked;
  std::optional<LinearGaussianSpec> linear;
  // Data.
  std::vector<double> grid;  // t_0..t_M
  Matrix truth;              // n x (M+1)
  MeasurementSeries series;  // at t_1..t_M
  Vector noise_std;

  std::size_t steps() const { return series.size(); }
};

namespace detail {

inline std::vector<std::string> Numbered(const std::string& prefix, Eigen::Index count) {
  std::vector<std::string> out;
  for (Eigen::Index i = 1; i <= count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

inline double ForcingScale(std::uint64_t seed) {
  return std::abs(RngStream(seed, MakeStreamId(StreamPurpose::kForcing, 0)).NormalAt(0));
}

// Fills the models, truth start and initial-ensemble spec. Measurement
// intensity is set later, once the noise level is known.
inline void BuildProblem(const ExperimentConfig& cfg, Twin& twin) {
  const auto& m = cfg.model;
  const double param_diffusion = cfg.Filter().param_diffusion;
  switch (cfg.problem) {
    case Problem::kFrame50:
    case Problem::kFrame20Damaged: {
      const bool damaged_default = cfg.problem == Problem::kFrame20Damaged;
      const Eigen::Index dof = m.dof.value_or(damaged_default ? 20 : 50);
      ShearFrameSpec spec = ShearFrameSpec::Uniform(dof);
      if (damaged_default || m.damaged_storey || m.damaged_k) {
        spec = DamagedFrameSpec(dof, m.damaged_storey.value_or(std::min<Eigen::Index>(10, dof)),
                                m.damaged_k.value_or(98.0));
      }
      spec.forcing_scale = ForcingScale(cfg.seed);
      if (m.forcing_amp) spec.forcing_amp = *m.forcing_amp;
      if (m.proc_noise) spec.proc_noise = *m.proc_noise;
      ShearFrameSpec truth_spec = spec;
      truth_spec.param_diffusion = 0.0;
      spec.param_diffusion = param_diffusion;
      twin.truth_proc = BuildShearFrame(truth_spec).first;
      std::tie(twin.proc, twin.meas) = BuildShearFrame(spec);

      twin.x0 = Vector::Zero(4 * dof);
      twin.x0.segment(2 * dof, dof) = spec.k_ref;
      twin.x0.segment(3 * dof, dof) = spec.c_ref;
      const double scale = m.guess_scale.value_or(1.0);
      const double rel = m.spread_rel.value_or(0.1);
      twin.guess = Vector::Zero(4 * dof);
      twin.guess.segment(2 * dof, dof).setConstant(100.0 * scale);
      twin.guess.segment(3 * dof, dof).setConstant(5.0 * scale);
      twin.spread = Vector::Constant(4 * dof, m.state_spread.value_or(1e-3));
      twin.spread.segment(2 * dof, 2 * dof) = rel * twin.guess.segment(2 * dof, 2 * dof);

      for (const auto& prefix : {"u", "v", "k", "c"}) {
        for (auto& s : Numbered(prefix, dof)) twin.channels.push_back(std::move(s));
      }
      if (damaged_default || m.damaged_storey || m.damaged_k) {
        const Eigen::Index s = m.damaged_storey.value_or(std::min<Eigen::Index>(10, dof));
        for (Eigen::Index i = std::max<Eigen::Index>(1, s - 1);
             i <= std::min(dof, s + 1); ++i) {
          twin.tracked.push_back("k" + std::to_string(i));
        }
      } else {
        twin.tracked = {"k1", "k" + std::to_string(dof), "c1"};
      }
      twin.tracked.push_back("v" + std::to_string(dof));
      break;
    }
    case Problem::kPendulum: {
      PendulumSpec spec;
      spec.forcing_scale = ForcingScale(cfg.seed);
      if (m.forcing_amp) spec.forcing_amp = *m.forcing_amp;
      if (m.proc_noise) spec.proc_noise = *m.proc_noise;
      PendulumSpec truth_spec = spec;
      truth_spec.param_diffusion = 0.0;
      spec.param_diffusion = param_diffusion;
      twin.truth_proc = BuildPendulum(truth_spec).first;
      std::tie(twin.proc, twin.meas) = BuildPendulum(spec);
      twin.x0 = Vector(4);
      twin.x0 << 0.0, 0.0, spec.k, spec.c;
      const double scale = m.guess_scale.value_or(1.2);
      const double rel = m.spread_rel.value_or(0.2);
      const double state_spread = m.state_spread.value_or(0.01);
      twin.guess = Vector(4);
      twin.guess << 0.0, 0.0, scale * spec.k, scale * spec.c;
      twin.spread = Vector(4);
      twin.spread << state_spread, state_spread, rel * twin.guess[2], rel * twin.guess[3];
      twin.channels = {"x", "xdot", "k", "c"};
      twin.tracked = {"x", "k", "c"};
      break;
    }
    case Problem::kPopulation: {
      PopulationSpec spec;
      spec.dt = cfg.Dt();
      if (m.x0) spec.x0 = *m.x0;
      if (m.proc_noise) spec.proc_noise_std = *m.proc_noise;
      if (m.meas_noise) spec.meas_noise_std = *m.meas_noise;
      std::tie(twin.proc, twin.meas) = BuildPopulation(spec);
      twin.truth_proc = twin.proc;
      twin.x0 = Vector::Constant(1, spec.x0);
      twin.guess = Vector::Constant(1, m.guess.value_or(spec.x0));
      twin.spread = Vector::Constant(1, m.spread.value_or(0.1));
      twin.noise_std = Vector::Constant(1, spec.meas_noise_std);
      twin.channels = {"x"};
      twin.tracked = {"x"};
      break;
    }
    case Problem::kLinearGaussian: {
      const double spread = m.spread.value_or(1.0);
      LinearGaussianSpec spec = LinearGaussianSpec::Scalar(
          m.lg_a.value_or(-1.0), m.lg_f.value_or(m.proc_noise.value_or(1.0)),
          m.lg_h.value_or(1.0), m.lg_r.value_or(0.01), m.guess.value_or(0.0),
          spread * spread);
      if (m.meas_noise) spec.r(0, 0) = *m.meas_noise * *m.meas_noise;
      twin.linear = spec;
      twin.x0 = spec.x0_mean;
      if (spread > 0.0) {
        RngStream s(cfg.seed, MakeStreamId(StreamPurpose::kTruthInitial, 0));
        const Matrix lower = spec.x0_cov.llt().matrixL();
        twin.x0 += lower * s.NextNormals(spec.n());
      }
      twin.guess = spec.x0_mean;
      twin.spread = spec.x0_cov.diagonal().cwiseSqrt();
      twin.noise_std = spec.r.diagonal().cwiseSqrt();
      twin.channels = {"x"};
      twin.tracked = {"x"};
      break;
    }
  }
}

// Applies the per-sample noise level to the filter's measurement model.
inline void FinishMeasurementModel(const ExperimentConfig& cfg, Twin& twin) {
  if (twin.linear) {
    twin.linear->r = twin.noise_std.cwiseAbs2().asDiagonal();
    twin.r = twin.linear->r;
    auto pair = BuildLinearGaussian(*twin.linear, twin.dt);
    twin.proc = pair.first;
    twin.truth_proc = pair.first;
    twin.meas = pair.second;
    return;
  }
  (void)cfg;
  twin.r = twin.noise_std.cwiseAbs2().asDiagonal();
  twin.meas.nu = NoiseIntensityFromStd(twin.noise_std, twin.dt);
  twin.meas.dt_scale = twin.dt;
}

inline MeasurementSeries Observe(const Twin& twin, RngStream& stream,
                                 double fine_dt) {
  const Eigen::Index steps = twin.truth.cols() - 1;
  const std::span<const double> times(twin.grid.data() + 1, static_cast<std::size_t>(steps));
  if (fine_dt <= 0.0) {
    return SynthMeasurements(twin.meas, twin.truth.rightCols(steps), times, stream,
                             twin.noise_std);
  }
  // Coarse-step noise built from the same fine increments at every dt.
  MeasurementSeries series;
  series.times.assign(times.begin(), times.end());
  series.values.resize(twin.meas.q, steps);
  for (Eigen::Index k = 0; k < steps; ++k) {
    const double t = times[static_cast<std::size_t>(k)];
    const Vector w = BrownianIncrementsRefined(stream, twin.meas.q, twin.dt, fine_dt) /
                     std::sqrt(twin.dt);
    series.values.col(k) =
        twin.meas.h(twin.truth.col(k + 1), t) + twin.noise_std.cwiseProduct(w);
  }
  series.Validate();
  return series;
}

}  // namespace detail

// Models, truth and measurements for one configured run. Deterministic in
// cfg.seed. Throws NumericFailure if the truth leaves the finite range.
inline Twin MakeTwin(const ExperimentConfig& cfg) {
  cfg.Validate();
  Twin twin;
  twin.problem = cfg.problem;
  twin.dt = cfg.Dt();
  twin.grid = UniformGrid(0.0, twin.dt, cfg.Steps());
  detail::BuildProblem(cfg, twin);

  const double fine_dt = cfg.noise_resolution;
  RngStream truth_stream(cfg.seed, MakeStreamId(StreamPurpose::kTruthProcess, 0));
  twin.truth = SimulateTruth(twin.linear ? BuildLinearGaussian(*twin.linear, twin.dt).first
                                         : twin.truth_proc,
                             twin.x0, twin.grid, truth_stream, fine_dt);

  if (twin.noise_std.size() == 0) {
    if (cfg.model.meas_noise) {
      twin.noise_std = Vector::Constant(twin.meas.q, *cfg.model.meas_noise);
    } else {
      const double rel = cfg.model.meas_noise_rel.value_or(0.01);
      twin.noise_std = rel * SignalStd(twin.meas, twin.truth, twin.grid);
    }
  }
  if (cfg.model.noise_reference_dt && *cfg.model.noise_reference_dt > 0.0) {
    twin.noise_std *= std::sqrt(*cfg.model.noise_reference_dt / twin.dt);
  }
  detail::FinishMeasurementModel(cfg, twin);

  RngStream noise_stream(cfg.seed, MakeStreamId(StreamPurpose::kMeasurementNoise, 0));
  twin.series = detail::Observe(twin, noise_stream, fine_dt);
  return twin;
}

struct FilterRun {
  FilterKind kind = FilterKind::kEnks;
  Matrix mean;  // n x M, after each update
  Matrix std;   // n x M
  Ensemble final_ensemble;
  std::vector<IterationTrace> traces;  // iterative filter only
};

struct RunOptions {
  Eigen::Index ensemble_size = 100;
  double alpha = 0.8;
  int kappa = 10;
  std::uint64_t seed = 1;
  GainClock clock = GainClock::kInterval;
  double noise_resolution = 0.0;
  bool keep_traces = false;

  static RunOptions From(const ExperimentConfig& cfg) {
    RunOptions o;
    o.ensemble_size = cfg.N();
    o.alpha = cfg.alpha;
    o.kappa = cfg.kappa;
    o.seed = cfg.seed;
    o.clock = cfg.clock;
    o.noise_resolution = cfg.noise_resolution;
    return o;
  }
};

inline FilterRun RunFilter(const Twin& twin, FilterKind kind, const RunOptions& opt) {
  FilterConfig fc;
  fc.ensemble_size = opt.ensemble_size;
  fc.dt = twin.dt;
  fc.alpha = opt.alpha;
  fc.seed = opt.seed;
  fc.clock = opt.clock;
  fc.noise_resolution = opt.noise_resolution;
  fc.Validate();

  EnkfConfig ec;
  AnnealingSchedule schedule;
  if (kind == FilterKind::kEnkf) {
    ec.ensemble_size = opt.ensemble_size;
    ec.r = twin.r;
    ec.seed = opt.seed;
    ec.dt = twin.dt;
    ec.noise_resolution = opt.noise_resolution;
    ec.Validate();
  } else if (kind == FilterKind::kEnksIterative) {
    schedule = MakeSchedule(opt.kappa);
  }

  const Eigen::Index n = twin.proc.n;
  const auto steps = static_cast<Eigen::Index>(twin.steps());
  FilterRun run;
  run.kind = kind;
  run.mean.resize(n, steps);
  run.std.resize(n, steps);

  auto streams = MakeParticleStreams(opt.seed, static_cast<std::size_t>(opt.ensemble_size),
                                     StreamPurpose::kProcessNoise);
  RngStream perturbations(opt.seed, MakeStreamId(StreamPurpose::kObservationPerturbation, 0));
  FilterState state = InitFilterState(
      SampleEnsemble(twin.guess, twin.spread, opt.ensemble_size, opt.seed), twin.meas,
      twin.grid.front());

  for (Eigen::Index k = 0; k < steps; ++k) {
    const Vector y = twin.series.values.col(k);
    try {
      switch (kind) {
        case FilterKind::kEnks:
          state = EnksStep(state, twin.proc, twin.meas, y, fc, streams);
          break;
        case FilterKind::kEnksIterative: {
          auto result = EnksIterativeStep(state, twin.proc, twin.meas, y, fc, schedule, streams);
          state = std::move(result.state);
          if (opt.keep_traces) run.traces.push_back(std::move(result.trace));
          break;
        }
        case FilterKind::kEnkf:
          state = EnkfStep(state, twin.proc, twin.meas, y, ec, streams, perturbations);
          break;
      }
    } catch (const NumericFailure& e) {
      throw NumericFailure(ToString(kind) + ": " + e.what(), e.particle(),
                           twin.series.times[static_cast<std::size_t>(k)],
                           static_cast<std::size_t>(k + 1));
    }
    const Matrix& x = state.ensemble.particles();
    const Vector mean = EnsembleMean(x);
    run.mean.col(k) = mean;
    run.std.col(k) = (Deviations(x, mean).rowwise().squaredNorm() /
                      static_cast<double>(x.cols() - 1))
                         .cwiseSqrt();
  }
  run.final_ensemble = std::move(state.ensemble);
  return run;
}

inline RunRecord MakeRecord(const Twin& twin, const std::vector<FilterRun>& runs) {
  RunRecord record;
  for (const auto& r : runs) record.filters.push_back(ToString(r.kind));
  const auto steps = static_cast<Eigen::Index>(twin.steps());
  for (Eigen::Index k = 0; k < steps; ++k) {
    for (std::size_t c = 0; c < twin.channels.size(); ++c) {
      const auto i = static_cast<Eigen::Index>(c);
      RunRow row;
      row.step = static_cast<std::size_t>(k + 1);
      row.time = twin.grid[static_cast<std::size_t>(k + 1)];
      row.channel = twin.channels[c];
      row.truth = twin.truth(i, k + 1);
      for (const auto& r : runs) {
        row.mean.push_back(r.mean(i, k));
        row.std.push_back(r.std(i, k));
      }
      record.rows.push_back(std::move(row));
    }
  }
  return record;
}

// Long-format dataset files: truth.csv and measurements.csv with columns
// step,time,channel,value, plus noise.csv (channel,std).
inline void WriteTwinData(const Twin& twin, const std::string& dir) {
  using detail::FormatDouble;
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(std::filesystem::path(dir) / name, std::ios::binary);
    if (!f) throw InvalidArgument("cannot write " + dir + "/" + name);
    return f;
  };
  {
    auto f = open("truth.csv");
    f << "step,time,channel,value\n";
    for (Eigen::Index k = 0; k < twin.truth.cols(); ++k) {
      for (std::size_t c = 0; c < twin.channels.size(); ++c) {
        f << k << ',' << FormatDouble(twin.grid[static_cast<std::size_t>(k)]) << ','
          << twin.channels[c] << ','
          << FormatDouble(twin.truth(static_cast<Eigen::Index>(c), k)) << '\n';
      }
    }
  }
  {
    auto f = open("measurements.csv");
    f << "step,time,channel,value\n";
    for (Eigen::Index k = 0; k < twin.series.values.cols(); ++k) {
      for (Eigen::Index c = 0; c < twin.series.q(); ++c) {
        f << k + 1 << ',' << FormatDouble(twin.series.times[static_cast<std::size_t>(k)])
          << ",y" << c + 1 << ',' << FormatDouble(twin.series.values(c, k)) << '\n';
      }
    }
  }
  {
    auto f = open("noise.csv");
    f << "channel,std\n";
    for (Eigen::Index c = 0; c < twin.noise_std.size(); ++c) {
      f << 'y' << c + 1 << ',' << FormatDouble(twin.noise_std[c]) << '\n';
    }
  }
}

namespace detail {

inline std::vector<std::vector<std::string>> ReadCsvRows(const std::string& path,
                                                         const std::string& header) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read " + path);
  std::string line;
  if (!std::getline(f, line) || line != header) {
    throw ConfigError(path + ": expected header '" + header + "'");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    for (auto c : SplitComma(line)) cells.emplace_back(c);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace detail

// Replaces the twin's truth, measurements and noise level with the files
// from WriteTwinData. The models must come from the same configuration.
inline void LoadTwinData(Twin& twin, const std::string& dir) {
  const auto path = [&](const char* name) {
    return (std::filesystem::path(dir) / name).string();
  };
  const auto n = static_cast<std::size_t>(twin.proc.n);
  const auto truth_rows = detail::ReadCsvRows(path("truth.csv"), "step,time,channel,value");
  if (truth_rows.size() != twin.grid.size() * n) {
    throw ConfigError("truth.csv does not match the configured problem and horizon");
  }
  for (std::size_t i = 0; i < truth_rows.size(); ++i) {
    const auto& cells = truth_rows[i];
    if (cells.size() != 4 || cells[2] != twin.channels[i % n]) {
      throw ConfigError("truth.csv: unexpected row " + std::to_string(i + 2));
    }
    twin.truth(static_cast<Eigen::Index>(i % n), static_cast<Eigen::Index>(i / n)) =
        detail::ParseDouble(cells[3]);
  }
  const auto q = static_cast<std::size_t>(twin.meas.q);
  const auto meas_rows =
      detail::ReadCsvRows(path("measurements.csv"), "step,time,channel,value");
  if (meas_rows.size() != twin.steps() * q) {
    throw ConfigError("measurements.csv does not match the configured problem and horizon");
  }
  for (std::size_t i = 0; i < meas_rows.size(); ++i) {
    if (meas_rows[i].size() != 4) throw ConfigError("measurements.csv: ragged row");
    twin.series.values(static_cast<Eigen::Index>(i % q), static_cast<Eigen::Index>(i / q)) =
        detail::ParseDouble(meas_rows[i][3]);
  }
  const auto noise_rows = detail::ReadCsvRows(path("noise.csv"), "channel,std");
  if (noise_rows.size() != q) throw ConfigError("noise.csv has the wrong channel count");
  for (std::size_t c = 0; c < q; ++c) {
    if (noise_rows[c].size() != 2) throw ConfigError("noise.csv: ragged row");
    twin.noise_std[static_cast<Eigen::Index>(c)] = detail::ParseDouble(noise_rows[c][1]);
  }
  detail::FinishMeasurementModel(ExperimentConfig{}, twin);
}

struct ExperimentResult {
  Twin twin;
  std::vector<FilterRun> runs;
  RunRecord record;
  RmseTable summary;
};

inline std::vector<FilterKind> SelectedFilters(const ExperimentConfig& cfg) {
  if (!cfg.filters.empty()) return cfg.filters;
  return {FilterKind::kEnks, FilterKind::kEnkf};
}

// Runs every selected filter over one twin. With cfg.out_dir set, writes
// run.csv, summary.csv, config.cfg and one chart per tracked channel.
inline ExperimentResult RunExperiment(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult result;
  result.twin = MakeTwin(cfg);
  if (!cfg.data_dir.empty()) LoadTwinData(result.twin, cfg.data_dir);
  const RunOptions opt = RunOptions::From(cfg);
  for (FilterKind kind : SelectedFilters(cfg)) {
    result.runs.push_back(RunFilter(result.twin, kind, opt));
  }
  result.record = MakeRecord(result.twin, result.runs);
  result.record.seed = cfg.seed;
  result.summary = SummarizeRmse(result.record);
  result.record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!cfg.out_dir.empty()) {
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    EmitCsv(result.record, (dir / "run.csv").string());
    EmitSummaryCsv(result.summary, (dir / "summary.csv").string());
    std::ofstream(dir / "config.cfg", std::ios::binary) << EmitConfigString(cfg);
    for (const auto& channel : result.twin.tracked) {
      EmitLineChart(result.record, {channel}, (dir / (channel + ".svg")).string(),
                    ToString(cfg.problem) + ": " + channel);
    }
  }
  return result;
}

// Time-averaged mean absolute difference between two n x M mean histories.
inline double MeanTrackError(const Matrix& a, const Matrix& b) {
  detail::Require(a.rows() == b.rows() && a.cols() == b.cols() && a.size() > 0,
                  "track error: shape mismatch");
  return (a - b).cwiseAbs().mean();
}

inline Matrix KalmanMeans(const Twin& twin) {
  detail::Require(twin.linear.has_value(), "kalman means: problem is not linear-Gaussian");
  const auto traj = KalmanOracle(*twin.linear, twin.series, twin.dt);
  Matrix out(twin.proc.n, static_cast<Eigen::Index>(traj.means.size()));
  for (std::size_t k = 0; k < traj.means.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = traj.means[k];
  }
  return out;
}

// Convergence study over N or dt. Repeat r uses seed cfg.seed + r for both
// data and filter. References:
//  N sweep, linear-Gaussian: the exact Kalman mean.
//  N sweep, otherwise: the same filter at N_max * reference_factor.
//  dt sweep: the same filter at dt_min / reference_factor with the same
//    Brownian paths (noise assembled at the reference step) and a
//    dt-independent measurement noise intensity.
inline ConvergenceReport RunSweep(const ExperimentConfig& cfg) {
  const auto& sw = cfg.sweep;
  detail::Require(sw.values.size() >= 3, "sweep: need >= 3 values");
  const FilterKind kind = cfg.filters.empty() ? FilterKind::kEnks : cfg.filters.front();

  auto seeded = [&](int r) {
    ExperimentConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(r);
    return c;
  };

  if (sw.variable == SweepVariable::kEnsembleSize) {
    for (double v : sw.values) {
      detail::Require(v >= 2 && v == std::floor(v), "sweep: N values must be integers >= 2");
    }
    const double n_max = *std::max_element(sw.values.begin(), sw.values.end());
    std::map<int, std::pair<Twin, Matrix>> cache;
    auto reference = [&](int r) -> const std::pair<Twin, Matrix>& {
      auto it = cache.find(r);
      if (it != cache.end()) return it->second;
      const ExperimentConfig c = seeded(r);
      Twin twin = MakeTwin(c);
      Matrix ref;
      if (twin.linear) {
        ref = KalmanMeans(twin);
      } else {
        RunOptions o = RunOptions::From(c);
        o.ensemble_size = static_cast<Eigen::Index>(n_max * sw.reference_factor);
        o.seed = c.seed ^ 0x5eed5eedULL;
        ref = RunFilter(twin, kind, o).mean;
      }
      return cache.emplace(r, std::make_pair(std::move(twin), std::move(ref))).first->second;
    };
    return ConvergenceSweep(SweepVariable::kEnsembleSize, sw.values, sw.repeats,
                            [&](double value, int r) {
                              const auto& [twin, ref] = reference(r);
                              RunOptions o = RunOptions::From(seeded(r));
                              o.ensemble_size = static_cast<Eigen::Index>(value);
                              return MeanTrackError(RunFilter(twin, kind, o).mean, ref);
                            });
  }

  const double dt_min = *std::min_element(sw.values.begin(), sw.values.end());
  const double fine = dt_min / sw.reference_factor;
  const double noise_dt = cfg.model.noise_reference_dt.value_or(cfg.Dt());
  auto at_dt = [&](int r, double dt) {
    ExperimentConfig c = seeded(r);
    c.dt = dt;
    c.noise_resolution = fine;
    c.model.noise_reference_dt = noise_dt;
    return c;
  };
  std::map<int, Matrix> refs;
  auto reference = [&](int r) -> const Matrix& {
    auto it = refs.find(r);
    if (it != refs.end()) return it->second;
    const ExperimentConfig c = at_dt(r, fine);
    return refs.emplace(r, RunFilter(MakeTwin(c), kind, RunOptions::From(c)).mean)
        .first->second;
  };
  return ConvergenceSweep(
      SweepVariable::kTimeStep, sw.values, sw.repeats, [&](double dt, int r) {
        const Matrix& ref = reference(r);
        const ExperimentConfig c = at_dt(r, dt);
        const Matrix coarse = RunFilter(MakeTwin(c), kind, RunOptions::From(c)).mean;
        const auto stride = std::llround(dt / fine);
        Matrix matched(coarse.rows(), coarse.cols());
        for (Eigen::Index k = 0; k < coarse.cols(); ++k) {
          matched.col(k) = ref.col((k + 1) * stride - 1);
        }
        return MeanTrackError(coarse, matched);
      });
}

inline void EmitSweepCsv(const ConvergenceReport& report, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot write " + path);
  f << ToString(report.variable) << ",mean_error,std_error\n";
  for (std::size_t i = 0; i < report.values.size(); ++i) {
    f << detail::FormatDouble(report.values[i]) << ','
      << detail::FormatDouble(report.mean_error[i]) << ','
      << detail::FormatDouble(report.std_error[i]) << '\n';
  }
  f << "# slope," << detail::FormatDouble(report.slope) << ",intercept,"
    << detail::FormatDouble(report.intercept) << '\n';
}

}  // namespace enks

#endif  // ENKS_EXPERIMENT_HPP_
