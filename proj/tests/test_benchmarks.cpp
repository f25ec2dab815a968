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


#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "enks/benchmarks.hpp"

namespace enks {
namespace {

TEST(TridiagonalStiffness, SingleStorey) {
  EXPECT_EQ(TridiagonalStiffness(Vector::Constant(1, 5.0)), Matrix::Constant(1, 1, 5.0));
}

TEST(TridiagonalStiffness, TwoStoreys) {
  Matrix expect(2, 2);
  expect << 5, -3, -3, 3;
  EXPECT_EQ(TridiagonalStiffness(Eigen::Vector2d(2.0, 3.0)), expect);
}

TEST(TridiagonalStiffness, FiftyUniformStoreys) {
  const Matrix k = TridiagonalStiffness(Vector::Constant(50, 100.0));
  for (int i = 0; i < 49; ++i) {
    EXPECT_EQ(k(i, i), 200.0);
    EXPECT_EQ(k(i, i + 1), -100.0);
    EXPECT_EQ(k(i + 1, i), -100.0);
  }
  EXPECT_EQ(k(49, 49), 100.0);
  EXPECT_EQ(k(0, 2), 0.0);
}

TEST(TridiagonalStiffness, RejectsNonpositive) {
  EXPECT_THROW(TridiagonalStiffness(Eigen::Vector2d(1.0, 0.0)), InvalidArgument);
  EXPECT_THROW(TridiagonalStiffness(Vector(0)), InvalidArgument);
}

TEST(TridiagonalStiffness, SymmetricPositiveDefinite) {
  RngStream rng(1, 1);
  for (int dof = 1; dof <= 50; ++dof) {
    Vector p(dof);
    for (int i = 0; i < dof; ++i) p[i] = 1.0 + 100.0 * std::abs(rng.NextNormal());
    const Matrix k = TridiagonalStiffness(p);
    EXPECT_EQ(k, k.transpose());
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Matrix>(k).eigenvalues().minCoeff(), 0.0) << dof;
  }
}

TEST(ApplyChain, AgreesWithDenseMatrix) {
  RngStream rng(2, 2);
  for (int dof : {1, 2, 5, 20}) {
    Vector p(dof), v(dof);
    for (int i = 0; i < dof; ++i) {
      p[i] = 1.0 + std::abs(rng.NextNormal());
      v[i] = rng.NextNormal();
    }
    EXPECT_TRUE(detail::ApplyChain(p, v).isApprox(TridiagonalStiffness(p) * v, 1e-13));
  }
}

TEST(ShearFrame, AugmentedDimensions) {
  EXPECT_EQ(BuildShearFrame(ShearFrameSpec::Uniform(50)).first.n, 200);
  EXPECT_EQ(BuildShearFrame(ShearFrameSpec::Uniform(20)).first.n, 80);
  EXPECT_EQ(BuildShearFrame(ShearFrameSpec::Uniform(20)).second.q, 20);
}

ShearFrameSpec Unforced(Eigen::Index dof) {
  ShearFrameSpec spec = ShearFrameSpec::Uniform(dof);
  spec.forcing_amp = 0.0;
  return spec;
}

Vector AtReference(const ShearFrameSpec& spec, const Vector& u, const Vector& v) {
  const Eigen::Index d = spec.dof;
  Vector x(4 * d);
  x << u, v, spec.k_ref, spec.c_ref;
  return x;
}

TEST(ShearFrame, EquilibriumAtRest) {
  const auto spec = Unforced(50);
  const auto proc = BuildShearFrame(spec).first;
  EXPECT_TRUE((proc.drift(AtReference(spec, Vector::Zero(50), Vector::Zero(50)), 1.3).array() == 0.0)
                  .all());
}

TEST(ShearFrame, DriftLinearInStateForFrozenParameters) {
  const auto spec = Unforced(6);
  const auto proc = BuildShearFrame(spec).first;
  RngStream rng(3, 3);
  Vector u(6), v(6);
  for (int i = 0; i < 6; ++i) {
    u[i] = rng.NextNormal();
    v[i] = rng.NextNormal();
  }
  const Vector d1 = proc.drift(AtReference(spec, u, v), 0.0);
  const Vector d2 = proc.drift(AtReference(spec, 2 * u, 2 * v), 0.0);
  EXPECT_TRUE(d2.head(12).isApprox(2.0 * d1.head(12), 1e-14));
  EXPECT_TRUE((d1.tail(12).array() == 0.0).all());
}

TEST(ShearFrame, DriftMatchesDenseEquationOfMotion) {
  ShearFrameSpec spec = ShearFrameSpec::Uniform(4);
  spec.k_ref << 100, 98, 101, 99;
  spec.c_ref << 5, 4, 6, 5;
  const auto proc = BuildShearFrame(spec).first;
  Vector u(4), v(4);
  u << 0.1, -0.2, 0.3, 0.05;
  v << 1.0, 0.5, -0.5, 0.2;
  const double t = 0.7;
  const Vector d = proc.drift(AtReference(spec, u, v), t);
  const Vector accel = Vector::Constant(4, spec.Forcing(t)) -
                       TridiagonalStiffness(spec.c_ref) * v - TridiagonalStiffness(spec.k_ref) * u;
  EXPECT_EQ(d.head(4), v);
  EXPECT_TRUE(d.segment(4, 4).isApprox(accel, 1e-13));
  EXPECT_NEAR(spec.Forcing(t), 500.0 * std::exp(-t) * std::cos(5 * t), 1e-12);
}

TEST(ShearFrame, MeasuresVelocities) {
  const auto spec = ShearFrameSpec::Uniform(3);
  const auto meas = BuildShearFrame(spec).second;
  Vector x = Vector::Zero(12);
  x.segment(3, 3) << 7, 8, 9;
  EXPECT_EQ(meas.h(x, 0.0), Eigen::Vector3d(7, 8, 9));
}

TEST(DamagedFrame, DefaultsLowerStoreyTen) {
  const ShearFrameSpec spec = DamagedFrameSpec(20);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(spec.k_ref[i], i == 9 ? 98.0 : 100.0);
}

TEST(DamagedFrame, UndamagedValueIsUniformFrame) {
  const ShearFrameSpec spec = DamagedFrameSpec(20, 10, 100.0);
  EXPECT_EQ(spec.k_ref, ShearFrameSpec::Uniform(20).k_ref);
  const auto a = BuildDamagedFrame(ShearFrameSpec::Uniform(20), 10, 100.0).first;
  const auto b = BuildShearFrame(ShearFrameSpec::Uniform(20)).first;
  const Vector x = Vector::LinSpaced(80, -1.0, 1.0);
  EXPECT_EQ(a.drift(x, 0.3), b.drift(x, 0.3));
}

TEST(DamagedFrame, StoreyOutOfRange) {
  EXPECT_THROW(DamagedFrameSpec(20, 21), InvalidArgument);
  EXPECT_THROW(DamagedFrameSpec(20, 0), InvalidArgument);
  EXPECT_THROW(BuildDamagedFrame(ShearFrameSpec::Uniform(4), 5), InvalidArgument);
}

TEST(Pendulum, EquilibriumWithoutForcing) {
  PendulumSpec spec;
  spec.forcing_amp = 0.0;
  const auto proc = BuildPendulum(spec).first;
  Vector x(4);
  x << 0.0, 0.0, spec.k, spec.c;
  EXPECT_TRUE((proc.drift(x, 2.0).array() == 0.0).all());
}

TEST(Pendulum, BaseReaction) {
  const auto meas = BuildPendulum(PendulumSpec{}).second;
  Vector x(4);
  x << std::numbers::pi / 2, 1.0, 2.0, 3.0;
  EXPECT_NEAR(meas.h(x, 0.0)[0], 5.0, 1e-15);
}

TEST(Pendulum, ForcingAndValidation) {
  PendulumSpec spec;
  EXPECT_NEAR(spec.Forcing(2.0), 5.0 * std::exp(-0.02) * std::cos(10.0), 1e-14);
  spec.c = 0.0;
  EXPECT_THROW(BuildPendulum(spec), InvalidArgument);
}

TEST(Population, DriftValues) {
  const auto proc = BuildPopulation(PopulationSpec{}).first;
  auto b = [&](double x) { return proc.drift(Vector::Constant(1, x), 0.0)[0]; };
  EXPECT_EQ(b(0.0), 0.0);
  EXPECT_EQ(b(2.0), 0.0);
  EXPECT_NEAR(b(2.1), 0.105, 1e-15);
  EXPECT_DOUBLE_EQ(b(1.0), -0.5);
}

TEST(Population, NoiseFreePathDivergesBeforeTen) {
  PopulationSpec spec;
  spec.proc_noise_std = 0.0;
  const auto proc = BuildPopulation(spec).first;
  Vector x = Vector::Constant(1, 2.1);
  double t = 0.0;
  while (x[0] <= 10.0 && t < 10.0) {
    x = EmStep(proc, x, t, spec.dt, Vector::Zero(1));
    t += spec.dt;
  }
  EXPECT_GT(x[0], 10.0);
  EXPECT_LT(t, 10.0);
}

TEST(Population, RejectsBadSpec) {
  PopulationSpec spec;
  spec.r2 = 0.0;
  EXPECT_THROW(BuildPopulation(spec), InvalidArgument);
}

TEST(LinearGaussian, StillModelKeepsTruthConstant) {
  const auto proc = BuildLinearGaussian(LinearGaussianSpec::Scalar(0, 0, 1, 0.1), 0.01).first;
  const auto grid = UniformGrid(0.0, 0.01, 100);
  RngStream s(1, 1);
  const Matrix path = SimulateTruth(proc, Vector::Constant(1, 0.7), grid, s);
  EXPECT_TRUE((path.array() == 0.7).all());
}

TEST(LinearGaussian, OrnsteinUhlenbeckStationaryVariance) {
  const double dt = 0.01;
  const auto proc = BuildLinearGaussian(LinearGaussianSpec::Scalar(-1, 1, 1, 0.01), dt).first;
  const std::size_t steps = 400000;
  const auto grid = UniformGrid(0.0, dt, steps);
  RngStream s(2, 2);
  const Matrix path = SimulateTruth(proc, Vector::Zero(1), grid, s);
  const auto tail = path.rightCols(static_cast<Eigen::Index>(steps - 1000));
  const double mean = tail.mean();
  const double var = (tail.array() - mean).square().mean();
  // EM stationary variance is F^2 dt / (1 - (1 - dt)^2) = 0.5 / (1 - dt/2).
  EXPECT_NEAR(var, 0.5, 0.05);
}

TEST(LinearGaussian, RejectsNonPositiveDefiniteR) {
  EXPECT_THROW(BuildLinearGaussian(LinearGaussianSpec::Scalar(-1, 1, 1, 0.0), 0.01), InvalidArgument);
  EXPECT_THROW(BuildLinearGaussian(LinearGaussianSpec::Scalar(-1, 1, 1, -1.0), 0.01), InvalidArgument);
}

TEST(LinearGaussian, NoiseIntensityMatchesR) {
  const auto meas = BuildLinearGaussian(LinearGaussianSpec::Scalar(-1, 1, 1, 0.04), 0.01).second;
  EXPECT_NEAR(meas.sigma_gram()(0, 0), 0.04 * 0.01, 1e-16);
}

MeasurementSeries Series(std::vector<double> values, double dt) {
  MeasurementSeries s;
  s.values.resize(1, static_cast<Eigen::Index>(values.size()));
  for (std::size_t k = 0; k < values.size(); ++k) {
    s.times.push_back(dt * static_cast<double>(k + 1));
    s.values(0, static_cast<Eigen::Index>(k)) = values[k];
  }
  return s;
}

TEST(KalmanOracle, OneStepTextbook) {
  const auto traj = KalmanOracle(LinearGaussianSpec::Scalar(0, 0, 1, 1.0), Series({2.0}, 0.1), 0.1);
  EXPECT_DOUBLE_EQ(traj.means[0][0], 1.0);
  EXPECT_DOUBLE_EQ(traj.covariances[0](0, 0), 0.5);
}

TEST(KalmanOracle, ExactObservationLimit) {
  const auto traj =
      KalmanOracle(LinearGaussianSpec::Scalar(-1, 1, 1, 1e-12), Series({0.3, -0.7, 1.1}, 0.01), 0.01);
  EXPECT_NEAR(traj.means[0][0], 0.3, 1e-9);
  EXPECT_NEAR(traj.means[1][0], -0.7, 1e-9);
  EXPECT_NEAR(traj.means[2][0], 1.1, 1e-9);
}

TEST(KalmanOracle, VarianceNonincreasingWithoutProcessNoise) {
  const auto traj = KalmanOracle(LinearGaussianSpec::Scalar(0, 0, 1, 0.5),
                                 Series({1, 2, 0, 1, 3, 2, 1, 0}, 0.1), 0.1);
  for (std::size_t k = 1; k < traj.covariances.size(); ++k) {
    EXPECT_LE(traj.covariances[k](0, 0), traj.covariances[k - 1](0, 0));
  }
}

TEST(KalmanOracle, RejectsMismatchedDimension) {
  MeasurementSeries s;
  s.times = {0.1};
  s.values = Matrix::Zero(2, 1);
  EXPECT_THROW(KalmanOracle(LinearGaussianSpec::Scalar(0, 0, 1, 1.0), s, 0.1), InvalidArgument);
}

}  // namespace
}  // namespace enks
