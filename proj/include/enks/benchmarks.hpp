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


#ifndef ENKS_BENCHMARKS_HPP_
#define ENKS_BENCHMARKS_HPP_

// Model builders for the identification problems (shear frames, base-reaction
// pendulum, population growth) and a linear-Gaussian problem whose exact
// filter is the Kalman recursion.

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "enks/common.hpp"
#include "enks/sde.hpp"

namespace enks {

using ModelPair = std::pair<ProcessModel, MeasurementModel>;

// Chain stiffness pattern: diagonal p_i + p_{i+1} (last row p_dof),
// off-diagonals -p_{i+1}.
inline Matrix TridiagonalStiffness(const Vector& params) {
  const Eigen::Index dof = params.size();
  detail::Require(dof >= 1, "tridiagonal_stiffness: dof must be >= 1");
  detail::Require((params.array() > 0.0).all(),
                  "tridiagonal_stiffness: parameters must be positive");
  Matrix k = Matrix::Zero(dof, dof);
  for (Eigen::Index i = 0; i < dof; ++i) {
    k(i, i) = params[i] + (i + 1 < dof ? params[i + 1] : 0.0);
    if (i + 1 < dof) k(i, i + 1) = k(i + 1, i) = -params[i + 1];
  }
  return k;
}

namespace detail {

// y = T(p) v for the chain pattern above, without forming T.
inline Vector ApplyChain(const Eigen::Ref<const Vector>& p,
                         const Eigen::Ref<const Vector>& v) {
  const Eigen::Index dof = p.size();
  Vector y(dof);
  for (Eigen::Index i = 0; i < dof; ++i) {
    double acc = p[i] * v[i];
    if (i + 1 < dof) acc += p[i + 1] * (v[i] - v[i + 1]);
    if (i > 0) acc -= p[i] * v[i - 1];
    y[i] = acc;
  }
  return y;
}

}  // namespace detail

struct ShearFrameSpec {
  Eigen::Index dof = 50;
  Vector k_ref;  // per-storey stiffness
  Vector c_ref;  // per-storey damping
  double forcing_amp = 500.0;
  double forcing_decay = 1.0;
  double forcing_freq = 5.0;
  // |xi| with xi ~ N(0,1), drawn once per run and shared by truth and filter.
  double forcing_scale = 1.0;
  double proc_noise = 5.0;       // on velocity channels
  double param_diffusion = 0.01; // on stiffness/damping channels
  std::vector<Eigen::Index> measured;  // observed velocity channels (0-based)

  static ShearFrameSpec Uniform(Eigen::Index dof, double k = 100.0,
                                double c = 5.0) {
    ShearFrameSpec spec;
    spec.dof = dof;
    spec.k_ref = Vector::Constant(dof, k);
    spec.c_ref = Vector::Constant(dof, c);
    spec.measured.resize(static_cast<std::size_t>(dof));
    for (Eigen::Index i = 0; i < dof; ++i) spec.measured[static_cast<std::size_t>(i)] = i;
    return spec;
  }

  void Validate() const {
    detail::Require(dof >= 1, "shear frame: dof must be >= 1");
    detail::Require(k_ref.size() == dof && c_ref.size() == dof,
                    "shear frame: parameter vectors must have length dof");
    detail::Require((k_ref.array() > 0.0).all() && (c_ref.array() > 0.0).all(),
                    "shear frame: stiffness and damping must be positive");
    detail::Require(proc_noise >= 0.0 && param_diffusion >= 0.0,
                    "shear frame: noise intensities must be nonnegative");
    detail::Require(!measured.empty(), "shear frame: no measured channels");
    for (auto i : measured) {
      detail::Require(i >= 0 && i < dof, "shear frame: measured channel out of range");
    }
  }

  double Forcing(double t) const {
    return forcing_amp * std::exp(-forcing_decay * t) * forcing_scale *
           std::cos(forcing_freq * t);
  }
};

// Augmented state (U, U', K, C) in R^{4 dof}. The drift rebuilds the chain
// matrices from the parameter channels on every call.
inline ModelPair BuildShearFrame(const ShearFrameSpec& spec) {
  spec.Validate();
  const Eigen::Index d = spec.dof;
  ProcessModel proc;
  proc.n = 4 * d;
  proc.m = 3 * d;
  proc.drift = [spec, d](const Vector& x, double t) {
    Vector out = Vector::Zero(4 * d);
    const auto u = x.segment(0, d);
    const auto v = x.segment(d, d);
    const auto k = x.segment(2 * d, d);
    const auto c = x.segment(3 * d, d);
    out.segment(0, d) = v;
    out.segment(d, d) = Vector::Constant(d, spec.Forcing(t)) -
                        detail::ApplyChain(c, v) - detail::ApplyChain(k, u);
    return out;
  };
  Matrix f = Matrix::Zero(4 * d, 3 * d);
  f.block(d, 0, d, d).diagonal().setConstant(spec.proc_noise);
  f.block(2 * d, d, 2 * d, 2 * d).diagonal().setConstant(spec.param_diffusion);
  proc.diffusion = [f](const Vector&, double) { return f; };
  proc.constant_diffusion = true;

  MeasurementModel meas;
  meas.q = static_cast<Eigen::Index>(spec.measured.size());
  meas.h = [measured = spec.measured, d](const Vector& x, double) {
    Vector y(static_cast<Eigen::Index>(measured.size()));
    for (std::size_t i = 0; i < measured.size(); ++i) {
      y[static_cast<Eigen::Index>(i)] = x[d + measured[i]];
    }
    return y;
  };
  meas.nu = Matrix::Identity(meas.q, meas.q);
  return {std::move(proc), std::move(meas)};
}

// Uniform frame with one storey's stiffness lowered. damaged_storey is 1-based.
inline ShearFrameSpec DamagedFrameSpec(Eigen::Index dof,
                                       Eigen::Index damaged_storey = 10,
                                       double damaged_k = 98.0) {
  detail::Require(damaged_storey >= 1 && damaged_storey <= dof,
                  "damaged frame: storey out of range");
  detail::Require(damaged_k > 0.0, "damaged frame: stiffness must be positive");
  ShearFrameSpec spec = ShearFrameSpec::Uniform(dof);
  spec.k_ref[damaged_storey - 1] = damaged_k;
  return spec;
}

inline ModelPair BuildDamagedFrame(ShearFrameSpec spec,
                                   Eigen::Index damaged_storey = 10,
                                   double damaged_k = 98.0) {
  detail::Require(damaged_storey >= 1 && damaged_storey <= spec.dof,
                  "damaged frame: storey out of range");
  detail::Require(damaged_k > 0.0, "damaged frame: stiffness must be positive");
  spec.k_ref[damaged_storey - 1] = damaged_k;
  return BuildShearFrame(spec);
}

struct PendulumSpec {
  double c = 0.5;
  double k = 10.0;
  double forcing_amp = 5.0;
  double forcing_decay = 0.01;
  double forcing_freq = 5.0;
  double forcing_scale = 1.0;  // |xi|
  double proc_noise = 0.05;
  double param_diffusion = 0.01;

  void Validate() const {
    detail::Require(c > 0.0 && k > 0.0, "pendulum: c and k must be positive");
    detail::Require(proc_noise >= 0.0 && param_diffusion >= 0.0,
                    "pendulum: noise intensities must be nonnegative");
  }

  double Forcing(double t) const {
    return forcing_amp * std::exp(-forcing_decay * t) * forcing_scale *
           std::cos(forcing_freq * t);
  }
};

// State (x, x', k, c); base reaction y = c x' + k sin x.
inline ModelPair BuildPendulum(const PendulumSpec& spec) {
  spec.Validate();
  ProcessModel proc;
  proc.n = 4;
  proc.m = 3;
  proc.drift = [spec](const Vector& s, double t) {
    Vector out(4);
    out << s[1], spec.Forcing(t) - s[3] * s[1] - s[2] * std::sin(s[0]), 0.0, 0.0;
    return out;
  };
  Matrix f = Matrix::Zero(4, 3);
  f(1, 0) = spec.proc_noise;
  f(2, 1) = spec.param_diffusion;
  f(3, 2) = spec.param_diffusion;
  proc.diffusion = [f](const Vector&, double) { return f; };
  proc.constant_diffusion = true;

  MeasurementModel meas;
  meas.q = 1;
  meas.h = [](const Vector& s, double) {
    Vector y(1);
    y[0] = s[3] * s[1] + s[2] * std::sin(s[0]);
    return y;
  };
  meas.nu = Matrix::Identity(1, 1);
  return {std::move(proc), std::move(meas)};
}

struct PopulationSpec {
  double r1 = 1.0;
  double r2 = 2.0;
  double x0 = 2.1;
  double proc_noise_std = 0.2;
  double meas_noise_std = 0.1;
  double dt = 0.1;

  void Validate() const {
    detail::Require(r2 > 0.0, "population: r2 must be positive");
    detail::Require(proc_noise_std >= 0.0 && meas_noise_std >= 0.0,
                    "population: noise must be nonnegative");
    detail::Require(dt > 0.0, "population: dt must be positive");
  }
};

// dX = -r1 (1 - X/r2) X dt + s dB, Y = X + noise.
inline ModelPair BuildPopulation(const PopulationSpec& spec) {
  spec.Validate();
  ProcessModel proc;
  proc.n = 1;
  proc.m = 1;
  proc.drift = [r1 = spec.r1, r2 = spec.r2](const Vector& x, double) {
    Vector out(1);
    out[0] = -r1 * (1.0 - x[0] / r2) * x[0];
    return out;
  };
  const Matrix f = Matrix::Constant(1, 1, spec.proc_noise_std);
  proc.diffusion = [f](const Vector&, double) { return f; };
  proc.constant_diffusion = true;

  MeasurementModel meas;
  meas.q = 1;
  meas.h = [](const Vector& x, double) { return Vector(x.head(1)); };
  meas.nu = NoiseIntensityFromStd(Vector::Constant(1, spec.meas_noise_std), spec.dt);
  meas.dt_scale = spec.dt;
  return {std::move(proc), std::move(meas)};
}

struct LinearGaussianSpec {
  Matrix a;  // n x n drift
  Matrix f;  // n x m diffusion
  Matrix h;  // q x n observation
  Matrix r;  // q x q observation-error covariance
  Vector x0_mean;
  Matrix x0_cov;

  static LinearGaussianSpec Scalar(double a, double f, double h, double r,
                                   double m0 = 0.0, double p0 = 1.0) {
    LinearGaussianSpec spec;
    spec.a = Matrix::Constant(1, 1, a);
    spec.f = Matrix::Constant(1, 1, f);
    spec.h = Matrix::Constant(1, 1, h);
    spec.r = Matrix::Constant(1, 1, r);
    spec.x0_mean = Vector::Constant(1, m0);
    spec.x0_cov = Matrix::Constant(1, 1, p0);
    return spec;
  }

  Eigen::Index n() const { return a.rows(); }
  Eigen::Index q() const { return h.rows(); }

  void Validate() const {
    const Eigen::Index n = a.rows();
    detail::Require(n >= 1 && a.cols() == n, "linear-gaussian: A must be n x n");
    detail::Require(f.rows() == n, "linear-gaussian: F must have n rows");
    detail::Require(h.cols() == n && h.rows() >= 1, "linear-gaussian: H must be q x n");
    detail::Require(r.rows() == h.rows() && r.cols() == h.rows(),
                    "linear-gaussian: R must be q x q");
    detail::Require(r.isApprox(r.transpose(), 1e-12) &&
                        r.llt().info() == Eigen::Success,
                    "linear-gaussian: R must be symmetric positive definite");
    detail::Require(x0_mean.size() == n && x0_cov.rows() == n && x0_cov.cols() == n,
                    "linear-gaussian: prior has wrong shape");
  }
};

// dX = A X dt + F dB, Y = H X + noise(R). Measurement intensity is chosen so
// that sigma^T sigma = R dt.
inline ModelPair BuildLinearGaussian(const LinearGaussianSpec& spec, double dt) {
  spec.Validate();
  detail::Require(dt > 0.0, "linear-gaussian: dt must be positive");
  ProcessModel proc;
  proc.n = spec.a.rows();
  proc.m = spec.f.cols();
  proc.drift = [a = spec.a](const Vector& x, double) { return Vector(a * x); };
  proc.diffusion = [f = spec.f](const Vector&, double) { return f; };
  proc.constant_diffusion = true;

  MeasurementModel meas;
  meas.q = spec.h.rows();
  meas.h = [h = spec.h](const Vector& x, double) { return Vector(h * x); };
  const Matrix upper = spec.r.llt().matrixU();
  meas.nu = upper / std::sqrt(dt);
  meas.dt_scale = dt;
  return {std::move(proc), std::move(meas)};
}

struct KalmanTrajectory {
  std::vector<Vector> means;        // posterior mean after each measurement
  std::vector<Matrix> covariances;  // posterior covariance after each
};

// Exact filter for the EM-discretized linear model: transition I + A dt,
// process covariance F F^T dt, one measurement per step.
inline KalmanTrajectory KalmanOracle(const LinearGaussianSpec& spec,
                                     const MeasurementSeries& series, double dt) {
  spec.Validate();
  series.Validate();
  detail::Require(dt > 0.0, "kalman_oracle: dt must be positive");
  detail::Require(series.q() == spec.q(), "kalman_oracle: measurement dimension");
  const Eigen::Index n = spec.n();
  const Matrix transition = Matrix::Identity(n, n) + spec.a * dt;
  const Matrix process_cov = spec.f * spec.f.transpose() * dt;

  KalmanTrajectory out;
  out.means.reserve(series.size());
  out.covariances.reserve(series.size());
  Vector mean = spec.x0_mean;
  Matrix cov = spec.x0_cov;
  for (std::size_t k = 0; k < series.size(); ++k) {
    mean = transition * mean;
    cov = transition * cov * transition.transpose() + process_cov;
    const Matrix innov_cov = spec.h * cov * spec.h.transpose() + spec.r;
    const Eigen::LLT<Matrix> llt(innov_cov);
    if (llt.info() != Eigen::Success) {
      throw NumericFailure("kalman_oracle: singular innovation covariance",
                           std::nullopt, series.times[k], k);
    }
    const Matrix gain = llt.solve(spec.h * cov).transpose();  // n x q
    mean += gain * (series.values.col(static_cast<Eigen::Index>(k)) - spec.h * mean);
    // Joseph form keeps the covariance symmetric positive semidefinite.
    const Matrix i_kh = Matrix::Identity(n, n) - gain * spec.h;
    cov = i_kh * cov * i_kh.transpose() + gain * spec.r * gain.transpose();
    out.means.push_back(mean);
    out.covariances.push_back(cov);
  }
  return out;
}

}  // namespace enks

#endif  // ENKS_BENCHMARKS_HPP_
