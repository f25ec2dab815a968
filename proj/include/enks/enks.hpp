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


#ifndef ENKS_ENKS_HPP_
#define ENKS_ENKS_HPP_

// Non-iterative ensemble Kushner-Stratonovich filter: Euler-Maruyama
// prediction followed by an additive, weight-free particle update
//
//   phi_j <- phi~_j + G (Y - h~_j),
//
//   G = (1/N) [ (Phi~ - Phi^)(H~^T tau_i - H^_{i-1}^T tau_{i-1} - dH^T tau_i)
//             + (Phi^ tau_i - Phi^_{i-1} tau_{i-1})(H~^T - H^^T) ]
//       * [ alpha S + (1 - alpha) sigma^T sigma ]^{-1},
//
// where hats are ensemble means replicated across columns, S is the sample
// innovation covariance and dH = H^_i - H^_{i-1}.

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>

#include "enks/common.hpp"
#include "enks/rng.hpp"
#include "enks/sde.hpp"

namespace enks {

// Which clock the gain's time-weighted terms read.
//  kInterval: times measured from the start of the current interval
//             (tau_{i-1} = 0, tau_i = dt_i). Gain is O(dt).
//  kAbsolute: tau = t. Gain grows linearly with t and the update becomes
//             unstable once t_i exceeds roughly 2 alpha.
enum class GainClock { kInterval, kAbsolute };

struct FilterConfig {
  Eigen::Index ensemble_size = 100;
  double dt = 0.01;
  double alpha = 0.8;
  std::uint64_t seed = 0;
  // Diffusion applied to augmented parameter channels by the model builders.
  double param_diffusion = 0.01;
  GainClock clock = GainClock::kInterval;
  // When > 0, Brownian increments are assembled from sub-steps of this size.
  double noise_resolution = 0.0;

  void Validate() const {
    detail::Require(ensemble_size >= 2, "filter config: N must be >= 2");
    detail::Require(dt > 0.0, "filter config: dt must be positive");
    detail::Require(alpha > 0.0 && alpha < 1.0,
                    "filter config: alpha must lie in (0, 1)");
    detail::Require(param_diffusion >= 0.0,
                    "filter config: param_diffusion must be nonnegative");
    detail::Require(noise_resolution >= 0.0,
                    "filter config: noise_resolution must be nonnegative");
  }
};

struct FilterState {
  double t_curr = 0.0;
  double t_prev = 0.0;
  Ensemble ensemble;
  Vector prev_state_mean;  // lagged predicted state mean
  Vector prev_meas_mean;   // lagged predicted measurement mean
};

struct GainMatrix {
  Matrix values;  // n x q
};

struct InnovationRecord {
  Matrix innovations;  // q x N, Y - h_j
  Vector mean;
};

inline InnovationRecord MakeInnovationRecord(const Vector& y, const Matrix& h) {
  detail::Require(y.size() == h.rows(), "innovation: Y length != q");
  InnovationRecord rec;
  rec.innovations = (-h).colwise() + y;
  rec.mean = EnsembleMean(rec.innovations);
  return rec;
}

// (1/(N-1)) sum_j (h_j - hbar)(h_j - hbar)^T.
inline Matrix InnovationCovariance(const Matrix& h_pred, const Vector& h_mean) {
  detail::Require(h_pred.cols() >= 2, "innovation_covariance: need N >= 2");
  detail::Require(h_mean.size() == h_pred.rows(),
                  "innovation_covariance: mean length != q");
  const Matrix dev = Deviations(h_pred, h_mean);
  Matrix s = dev * dev.transpose() / static_cast<double>(h_pred.cols() - 1);
  // Exact symmetry; the product is symmetric up to rounding only.
  return 0.5 * (s + s.transpose());
}

// alpha S + (1 - alpha) sigma^T sigma.
inline Matrix BlendedDenominator(const Matrix& s, const Matrix& sigma,
                                 double alpha) {
  detail::Require(alpha > 0.0 && alpha < 1.0,
                  "blended_denominator: alpha must lie in (0, 1)");
  detail::Require(s.rows() == s.cols() && sigma.cols() == s.rows(),
                  "blended_denominator: shape mismatch");
  const Matrix d = alpha * s + (1.0 - alpha) * (sigma.transpose() * sigma);
  if (!d.allFinite() || d.llt().info() != Eigen::Success) {
    throw NumericFailure("blended_denominator: not positive definite");
  }
  return d;
}

namespace detail {

inline std::pair<double, double> GainTimes(const FilterState& state,
                                           GainClock clock) {
  const double dt = state.t_curr - state.t_prev;
  Require(dt > 0.0, "compute_gain: t_curr must exceed t_prev");
  if (clock == GainClock::kAbsolute) return {state.t_prev, state.t_curr};
  return {0.0, dt};
}

}  // namespace detail

// Gain for the additive update, assembled from the predicted ensemble, its
// measurement images, and the lagged means held in `state`. The state must
// already carry the current interval: t_prev = t_{i-1}, t_curr = t_i.
inline GainMatrix ComputeGain(const Ensemble& pred, const Matrix& h_pred,
                              const FilterState& state,
                              const FilterConfig& cfg, const Matrix& sigma) {
  const Eigen::Index n = pred.dim();
  const Eigen::Index q = h_pred.rows();
  const Eigen::Index count = pred.size();
  detail::Require(h_pred.cols() == count, "compute_gain: H has wrong N");
  detail::Require(state.prev_state_mean.size() == n,
                  "compute_gain: lagged state mean has wrong length");
  detail::Require(state.prev_meas_mean.size() == q,
                  "compute_gain: lagged measurement mean has wrong length");
  detail::Require(sigma.rows() == q && sigma.cols() == q,
                  "compute_gain: sigma must be q x q");
  const auto [tau_prev, tau_curr] = detail::GainTimes(state, cfg.clock);

  const Vector state_mean = EnsembleMean(pred);
  const Vector meas_mean = EnsembleMean(h_pred);
  const Matrix state_dev = Deviations(pred.particles(), state_mean);  // n x N
  const Matrix meas_dev = Deviations(h_pred, meas_mean);              // q x N

  // H~^T tau_i - H^_{i-1}^T tau_{i-1} - (H^_i - H^_{i-1})^T tau_i
  //   = (H~ - H^_i)^T tau_i + H^_{i-1}^T (tau_i - tau_{i-1})
  Matrix meas_factor = meas_dev.transpose() * tau_curr;  // N x q
  meas_factor.rowwise() +=
      (state.prev_meas_mean * (tau_curr - tau_prev)).transpose();
  const Vector mean_drift =
      state_mean * tau_curr - state.prev_state_mean * tau_prev;

  Matrix numerator = state_dev * meas_factor;
  numerator.noalias() += mean_drift * meas_dev.rowwise().sum().transpose();
  numerator /= static_cast<double>(count);

  const Matrix denom = BlendedDenominator(
      InnovationCovariance(h_pred, meas_mean), sigma, cfg.alpha);
  const Eigen::LLT<Matrix> llt(denom);
  if (llt.info() != Eigen::Success) {
    throw NumericFailure("compute_gain: singular denominator", std::nullopt,
                         state.t_curr);
  }
  GainMatrix gain{llt.solve(numerator.transpose()).transpose()};
  if (!gain.values.allFinite()) {
    throw NumericFailure("compute_gain: non-finite gain", std::nullopt,
                         state.t_curr);
  }
  return gain;
}

// phi_j + G (Y - h_j) for every column; no weights, no resampling.
inline Ensemble AdditiveUpdate(const Ensemble& pred, const GainMatrix& gain,
                               const Vector& y, const Matrix& h_pred) {
  detail::Require(gain.values.rows() == pred.dim(),
                  "additive_update: gain rows != n");
  detail::Require(gain.values.cols() == y.size() && h_pred.rows() == y.size(),
                  "additive_update: measurement dimension mismatch");
  detail::Require(h_pred.cols() == pred.size(), "additive_update: H has wrong N");
  const Matrix innovations = (-h_pred).colwise() + y;
  Matrix out = pred.particles();
  out.noalias() += gain.values * innovations;
  return Ensemble(std::move(out));
}

// Filter state at t0 with lagged means taken from the initial ensemble.
inline FilterState InitFilterState(Ensemble initial,
                                   const MeasurementModel& meas,
                                   double t0 = 0.0) {
  FilterState state;
  state.t_curr = t0;
  state.t_prev = t0;
  state.prev_state_mean = EnsembleMean(initial);
  state.prev_meas_mean =
      EnsembleMean(EvaluateMeasurements(meas, initial.particles(), t0));
  state.ensemble = std::move(initial);
  return state;
}

// State for the interval (t_curr, t_curr + dt] with the lags still in place.
inline FilterState AdvanceClock(const FilterState& state, double dt) {
  FilterState next;
  next.t_prev = state.t_curr;
  next.t_curr = state.t_curr + dt;
  next.prev_state_mean = state.prev_state_mean;
  next.prev_meas_mean = state.prev_meas_mean;
  return next;
}

inline FilterState EnksStep(const FilterState& state, const ProcessModel& proc,
                            const MeasurementModel& meas, const Vector& y,
                            const FilterConfig& cfg,
                            std::span<RngStream> streams) {
  detail::Require(y.size() == meas.q, "enks_step: Y length != q");
  FilterState next = AdvanceClock(state, cfg.dt);
  const Ensemble pred = PredictEnsemble(proc, state.ensemble, state.t_curr,
                                        cfg.dt, streams, cfg.noise_resolution);
  const Matrix h_pred = EvaluateMeasurements(meas, pred.particles(), next.t_curr);
  const GainMatrix gain = ComputeGain(pred, h_pred, next, cfg, meas.sigma());
  next.ensemble = AdditiveUpdate(pred, gain, y, h_pred);
  next.prev_state_mean = EnsembleMean(pred);
  next.prev_meas_mean = EnsembleMean(h_pred);
  return next;
}

}  // namespace enks

#endif  // ENKS_ENKS_HPP_
