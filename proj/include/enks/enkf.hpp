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


#ifndef ENKS_ENKF_HPP_
#define ENKS_ENKF_HPP_

// Stochastic (perturbed-observation) ensemble Kalman filter, the baseline:
//   x_j <- x_j + C_xh (C_hh + R)^{-1} (Y + eps_j - h_j),  eps_j ~ N(0, R).

#include <cstdint>
#include <span>
#include <utility>

#include "enks/common.hpp"
#include "enks/enks.hpp"
#include "enks/rng.hpp"
#include "enks/sde.hpp"

namespace enks {

struct EnkfConfig {
  Eigen::Index ensemble_size = 100;
  Matrix r;  // observation-error covariance, q x q
  std::uint64_t seed = 0;
  double dt = 0.01;
  double noise_resolution = 0.0;

  void Validate() const {
    detail::Require(ensemble_size >= 2, "enkf config: N must be >= 2");
    detail::Require(dt > 0.0, "enkf config: dt must be positive");
    detail::Require(r.rows() == r.cols() && r.rows() >= 1,
                    "enkf config: R must be square");
    detail::Require(r.isApprox(r.transpose(), 1e-12),
                    "enkf config: R must be symmetric");
    detail::Require(r.llt().info() == Eigen::Success,
                    "enkf config: R must be positive definite");
  }
};

inline GainMatrix EnkfGain(const Ensemble& pred, const Matrix& h_pred,
                           const Matrix& r) {
  detail::Require(h_pred.cols() == pred.size(), "enkf_gain: H has wrong N");
  detail::Require(r.rows() == h_pred.rows() && r.cols() == h_pred.rows(),
                  "enkf_gain: R must be q x q");
  const double scale = 1.0 / static_cast<double>(pred.size() - 1);
  const Matrix state_dev = Deviations(pred.particles(), EnsembleMean(pred));
  const Matrix meas_dev = Deviations(h_pred, EnsembleMean(h_pred));
  const Matrix c_xh = scale * state_dev * meas_dev.transpose();
  Matrix c_hh = scale * meas_dev * meas_dev.transpose();
  c_hh = 0.5 * (c_hh + c_hh.transpose());
  const Eigen::LLT<Matrix> llt(c_hh + r);
  if (llt.info() != Eigen::Success) {
    throw NumericFailure("enkf_gain: C_hh + R not positive definite");
  }
  return GainMatrix{llt.solve(c_xh.transpose()).transpose()};
}

// Analysis with caller-supplied observation perturbations (q x N).
inline Ensemble EnkfUpdateWithPerturbations(const Ensemble& pred,
                                            const Matrix& h_pred,
                                            const Vector& y, const Matrix& r,
                                            const Matrix& perturbations) {
  detail::Require(y.size() == h_pred.rows(), "enkf_update: Y length != q");
  detail::Require(perturbations.rows() == h_pred.rows() &&
                      perturbations.cols() == pred.size(),
                  "enkf_update: perturbations must be q x N");
  const GainMatrix gain = EnkfGain(pred, h_pred, r);
  const Matrix innovations = ((perturbations - h_pred).colwise() + y);
  Matrix out = pred.particles();
  out.noalias() += gain.values * innovations;
  return Ensemble(std::move(out));
}

inline Ensemble EnkfUpdate(const Ensemble& pred, const Matrix& h_pred,
                           const Vector& y, const EnkfConfig& cfg,
                           RngStream& stream) {
  const Eigen::LLT<Matrix> chol(cfg.r);
  if (chol.info() != Eigen::Success) {
    throw InvalidArgument("enkf_update: R must be positive definite");
  }
  const Matrix lower = chol.matrixL();
  Matrix perturbations(h_pred.rows(), pred.size());
  for (Eigen::Index j = 0; j < pred.size(); ++j) {
    perturbations.col(j) = lower * stream.NextNormals(h_pred.rows());
  }
  return EnkfUpdateWithPerturbations(pred, h_pred, y, cfg.r, perturbations);
}

inline FilterState EnkfStep(const FilterState& state, const ProcessModel& proc,
                            const MeasurementModel& meas, const Vector& y,
                            const EnkfConfig& cfg, std::span<RngStream> streams,
                            RngStream& perturbation_stream) {
  detail::Require(y.size() == meas.q, "enkf_step: Y length != q");
  FilterState next = AdvanceClock(state, cfg.dt);
  const Ensemble pred = PredictEnsemble(proc, state.ensemble, state.t_curr,
                                        cfg.dt, streams, cfg.noise_resolution);
  const Matrix h_pred = EvaluateMeasurements(meas, pred.particles(), next.t_curr);
  next.ensemble = EnkfUpdate(pred, h_pred, y, cfg, perturbation_stream);
  next.prev_state_mean = EnsembleMean(pred);
  next.prev_meas_mean = EnsembleMean(h_pred);
  return next;
}

}  // namespace enks

#endif  // ENKS_ENKF_HPP_
