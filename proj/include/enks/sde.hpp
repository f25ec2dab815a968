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


#ifndef ENKS_SDE_HPP_
#define ENKS_SDE_HPP_

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "enks/common.hpp"
#include "enks/rng.hpp"

namespace enks {

using VectorField = std::function<Vector(const Vector& x, double t)>;
using MatrixField = std::function<Matrix(const Vector& x, double t)>;

// dX = b(X,t) dt + f(X,t) dB, X in R^n, B in R^m.
struct ProcessModel {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  VectorField drift;
  MatrixField diffusion;
  // Set when f ignores its arguments; lets prediction evaluate it once per
  // step instead of once per particle.
  bool constant_diffusion = false;
};

// Y = h(X,t) + noise, with scaled intensity sigma = nu * dt_scale.
struct MeasurementModel {
  Eigen::Index q = 0;
  VectorField h;
  Matrix nu;
  double dt_scale = 1.0;

  Matrix sigma() const { return nu * dt_scale; }
  Matrix sigma_gram() const {
    const Matrix s = sigma();
    return s.transpose() * s;
  }
};

// Intensity for a discrete measurement with per-sample noise std s taken as a
// Brownian increment over one step: s = nu * sqrt(dt), hence sigma = s*sqrt(dt).
inline Matrix NoiseIntensityFromStd(const Vector& noise_std, double dt) {
  detail::Require(dt > 0.0, "noise intensity: dt must be positive");
  detail::Require((noise_std.array() >= 0.0).all(),
                  "noise intensity: std must be nonnegative");
  return (noise_std / std::sqrt(dt)).asDiagonal();
}

// n x N particle matrix; the empirical filtering distribution.
class Ensemble {
 public:
  Ensemble() = default;
  explicit Ensemble(Matrix particles) : particles_(std::move(particles)) {
    detail::Require(particles_.cols() >= 2, "ensemble: need N >= 2");
    detail::Require(particles_.rows() >= 1, "ensemble: need n >= 1");
    if (!particles_.allFinite()) {
      throw NumericFailure("ensemble: non-finite particle entries");
    }
  }

  Eigen::Index dim() const { return particles_.rows(); }
  Eigen::Index size() const { return particles_.cols(); }
  const Matrix& particles() const { return particles_; }
  auto particle(Eigen::Index j) const { return particles_.col(j); }

  friend bool operator==(const Ensemble& a, const Ensemble& b) {
    return a.particles_.rows() == b.particles_.rows() &&
           a.particles_.cols() == b.particles_.cols() &&
           a.particles_ == b.particles_;
  }

 private:
  Matrix particles_;
};

// Column mean. Accumulates deviations from the first column so that an
// ensemble of identical columns has a mean equal to that column exactly.
inline Vector EnsembleMean(const Matrix& columns) {
  detail::Require(columns.cols() >= 1, "ensemble_mean: need N >= 1");
  const Vector pivot = columns.col(0);
  return pivot +
         (columns.colwise() - pivot).rowwise().sum() /
             static_cast<double>(columns.cols());
}

inline Vector EnsembleMean(const Ensemble& ens) {
  return EnsembleMean(ens.particles());
}

inline Matrix Deviations(const Matrix& columns, const Vector& mean) {
  return columns.colwise() - mean;
}

// Gaussian cloud around a guess with per-channel spread.
inline Ensemble SampleEnsemble(const Vector& guess, const Vector& spread,
                               Eigen::Index size, std::uint64_t seed) {
  detail::Require(guess.size() == spread.size(),
                  "sample_ensemble: guess/spread length mismatch");
  detail::Require((spread.array() >= 0.0).all(),
                  "sample_ensemble: negative spread");
  Matrix particles(guess.size(), size);
  for (Eigen::Index j = 0; j < size; ++j) {
    RngStream s(seed, MakeStreamId(StreamPurpose::kInitialEnsemble,
                                   static_cast<std::uint64_t>(j)));
    particles.col(j) =
        guess + spread.cwiseProduct(s.NextNormals(guess.size()));
  }
  return Ensemble(std::move(particles));
}

// Matrix of h evaluated at every particle (q x N).
inline Matrix EvaluateMeasurements(const MeasurementModel& meas,
                                   const Matrix& particles, double t) {
  Matrix out(meas.q, particles.cols());
  for (Eigen::Index j = 0; j < particles.cols(); ++j) {
    Vector hj = meas.h(particles.col(j), t);
    if (hj.size() != meas.q) {
      throw InvalidArgument("measurement: h returned wrong length");
    }
    if (!hj.allFinite()) {
      throw NumericFailure("measurement: non-finite h", std::size_t(j), t);
    }
    out.col(j) = std::move(hj);
  }
  return out;
}

namespace detail {

inline Vector EmStepWithDiffusion(const ProcessModel& model, const Vector& x,
                                  double t, double dt, const Vector& dB,
                                  const Matrix& f,
                                  std::optional<std::size_t> particle) {
  const Vector b = model.drift(x, t);
  if (b.size() != model.n || f.rows() != model.n || f.cols() != model.m) {
    throw InvalidArgument("em_step: model output has the wrong shape");
  }
  if (!b.allFinite() || !f.allFinite()) {
    throw NumericFailure("em_step: non-finite model output", particle, t);
  }
  Vector next = x + b * dt;
  if (model.m > 0) next.noalias() += f * dB;
  if (!next.allFinite()) {
    throw NumericFailure("em_step: non-finite state", particle, t);
  }
  return next;
}

}  // namespace detail

// Explicit Euler-Maruyama: x + b(x,t) dt + f(x,t) dB.
inline Vector EmStep(const ProcessModel& model, const Vector& x, double t,
                     double dt, const Vector& dB,
                     std::optional<std::size_t> particle = std::nullopt) {
  detail::Require(dt > 0.0, "em_step: dt must be positive");
  detail::Require(x.size() == model.n, "em_step: state length != n");
  detail::Require(dB.size() == model.m, "em_step: dB length != m");
  return detail::EmStepWithDiffusion(model, x, t, dt, dB,
                                     model.diffusion(x, t), particle);
}

// Propagates every particle one EM step with its own stream. fine_dt > 0
// assembles each increment from sub-increments (see BrownianIncrementsRefined).
inline Ensemble PredictEnsemble(const ProcessModel& model, const Ensemble& ens,
                                double t_prev, double dt,
                                std::span<RngStream> streams,
                                double fine_dt = 0.0) {
  detail::Require(dt > 0.0, "predict_ensemble: dt must be positive");
  detail::Require(ens.dim() == model.n, "predict_ensemble: n mismatch");
  detail::Require(static_cast<Eigen::Index>(streams.size()) == ens.size(),
                  "predict_ensemble: one stream per particle required");
  Matrix out(ens.dim(), ens.size());
  if (model.constant_diffusion) {
    // One shared f: batch the noise term as a single matrix product.
    const Matrix f = model.diffusion(ens.particle(0), t_prev);
    if (f.rows() != model.n || f.cols() != model.m) {
      throw InvalidArgument("predict_ensemble: diffusion has the wrong shape");
    }
    if (!f.allFinite()) {
      throw NumericFailure("predict_ensemble: non-finite diffusion", std::nullopt, t_prev);
    }
    Matrix increments(model.m, ens.size());
    for (Eigen::Index j = 0; j < ens.size(); ++j) {
      auto& stream = streams[static_cast<std::size_t>(j)];
      increments.col(j) = fine_dt > 0.0
                              ? BrownianIncrementsRefined(stream, model.m, dt, fine_dt)
                              : BrownianIncrements(stream, model.m, dt);
      const Vector b = model.drift(ens.particle(j), t_prev);
      if (b.size() != model.n) {
        throw InvalidArgument("predict_ensemble: drift has the wrong shape");
      }
      if (!b.allFinite()) {
        throw NumericFailure("em_step: non-finite model output",
                             static_cast<std::size_t>(j), t_prev);
      }
      out.col(j) = ens.particle(j) + b * dt;
    }
    if (model.m > 0) out.noalias() += f * increments;
    for (Eigen::Index j = 0; j < ens.size(); ++j) {
      if (!out.col(j).allFinite()) {
        throw NumericFailure("em_step: non-finite state",
                             static_cast<std::size_t>(j), t_prev);
      }
    }
    return Ensemble(std::move(out));
  }
  for (Eigen::Index j = 0; j < ens.size(); ++j) {
    auto& stream = streams[static_cast<std::size_t>(j)];
    const Vector dB = fine_dt > 0.0
                          ? BrownianIncrementsRefined(stream, model.m, dt, fine_dt)
                          : BrownianIncrements(stream, model.m, dt);
    const Vector x = ens.particle(j);
    out.col(j) = detail::EmStepWithDiffusion(model, x, t_prev, dt, dB,
                                             model.diffusion(x, t_prev),
                                             static_cast<std::size_t>(j));
  }
  return Ensemble(std::move(out));
}

// t_0 + k dt for k = 0..steps, each point computed directly (no accumulation).
inline std::vector<double> UniformGrid(double t0, double dt, std::size_t steps) {
  detail::Require(dt > 0.0, "grid: dt must be positive");
  std::vector<double> grid(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) grid[k] = t0 + static_cast<double>(k) * dt;
  return grid;
}

inline std::size_t StepCount(double horizon, double dt) {
  detail::Require(dt > 0.0 && horizon > 0.0, "grid: horizon and dt must be positive");
  const double ratio = horizon / dt;
  const auto steps = std::llround(ratio);
  detail::Require(steps >= 1 && std::abs(ratio - static_cast<double>(steps)) < 1e-6,
                  "grid: horizon must be a multiple of dt");
  return static_cast<std::size_t>(steps);
}

// Single EM path; column k is the state at grid[k], column 0 is x0.
inline Matrix SimulateTruth(const ProcessModel& model, const Vector& x0,
                            std::span<const double> grid, RngStream& stream,
                            double fine_dt = 0.0) {
  detail::Require(x0.size() == model.n, "simulate_truth: x0 length != n");
  detail::Require(!grid.empty(), "simulate_truth: empty grid");
  for (std::size_t k = 1; k < grid.size(); ++k) {
    detail::Require(grid[k] > grid[k - 1], "simulate_truth: grid not increasing");
  }
  Matrix path(model.n, static_cast<Eigen::Index>(grid.size()));
  path.col(0) = x0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double dt = grid[k] - grid[k - 1];
    const Vector dB = fine_dt > 0.0
                          ? BrownianIncrementsRefined(stream, model.m, dt, fine_dt)
                          : BrownianIncrements(stream, model.m, dt);
    const Vector x = path.col(static_cast<Eigen::Index>(k - 1));
    try {
      path.col(static_cast<Eigen::Index>(k)) = EmStep(model, x, grid[k - 1], dt, dB);
    } catch (const NumericFailure& e) {
      throw NumericFailure("simulate_truth: path left the finite range",
                           std::nullopt, grid[k - 1], k);
    }
  }
  return path;
}

struct MeasurementSeries {
  std::vector<double> times;
  Matrix values;  // q x M

  Eigen::Index q() const { return values.rows(); }
  std::size_t size() const { return times.size(); }

  void Validate() const {
    detail::Require(static_cast<Eigen::Index>(times.size()) == values.cols(),
                    "measurement series: column count != number of times");
    for (std::size_t k = 1; k < times.size(); ++k) {
      detail::Require(times[k] > times[k - 1],
                      "measurement series: times not strictly increasing");
    }
  }
};

// Y_k = h(x(t_k), t_k) + eps_k, eps_k ~ N(0, diag(noise_std^2)).
inline MeasurementSeries SynthMeasurements(const MeasurementModel& meas,
                                           const Matrix& trajectory,
                                           std::span<const double> grid,
                                           RngStream& stream,
                                           const Vector& noise_std) {
  detail::Require(trajectory.cols() == static_cast<Eigen::Index>(grid.size()),
                  "synth_measurements: grid/trajectory length mismatch");
  detail::Require(noise_std.size() == meas.q,
                  "synth_measurements: noise_std length != q");
  detail::Require((noise_std.array() >= 0.0).all(),
                  "synth_measurements: negative noise_std");
  MeasurementSeries series;
  series.times.assign(grid.begin(), grid.end());
  series.values.resize(meas.q, trajectory.cols());
  for (Eigen::Index k = 0; k < trajectory.cols(); ++k) {
    const double t = grid[static_cast<std::size_t>(k)];
    Vector y = meas.h(trajectory.col(k), t);
    detail::Require(y.size() == meas.q, "synth_measurements: h returned wrong length");
    y += noise_std.cwiseProduct(stream.NextNormals(meas.q));
    series.values.col(k) = y;
  }
  series.Validate();
  return series;
}

// Per-channel standard deviation of the noise-free signal h(x(t_k)).
inline Vector SignalStd(const MeasurementModel& meas, const Matrix& trajectory,
                        std::span<const double> grid) {
  detail::Require(trajectory.cols() == static_cast<Eigen::Index>(grid.size()) &&
                      trajectory.cols() >= 2,
                  "signal_std: need at least two samples");
  Matrix clean(meas.q, trajectory.cols());
  for (Eigen::Index k = 0; k < trajectory.cols(); ++k) {
    clean.col(k) = meas.h(trajectory.col(k), grid[static_cast<std::size_t>(k)]);
  }
  const Vector mean = EnsembleMean(clean);
  const Matrix dev = Deviations(clean, mean);
  return (dev.rowwise().squaredNorm() / static_cast<double>(clean.cols() - 1))
      .cwiseSqrt();
}

}  // namespace enks

#endif  // ENKS_SDE_HPP_
