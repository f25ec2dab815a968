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


#ifndef ENKS_ENKS_ITERATIVE_HPP_
#define ENKS_ENKS_ITERATIVE_HPP_

// Annealed inner iterations at a fixed measurement time:
//
//   Phi_k = Phi_{k-1} + beta_{k-1} G_{k-1} (Y - H_{k-1}),  k = 1..kappa,
//
// with Phi_0 the predicted ensemble and G_{k-1} the non-iterative gain
// evaluated on the current iterate. Lagged means stay frozen across k.

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "enks/common.hpp"
#include "enks/enks.hpp"
#include "enks/sde.hpp"

namespace enks {

struct AnnealingSchedule {
  std::vector<double> betas;

  std::size_t kappa() const { return betas.size(); }

  void Validate() const {
    detail::Require(!betas.empty(), "schedule: kappa must be >= 1");
    for (std::size_t k = 0; k < betas.size(); ++k) {
      detail::Require(betas[k] > 0.0 && std::isfinite(betas[k]),
                      "schedule: multipliers must be positive");
      if (k > 0) {
        detail::Require(betas[k - 1] <= betas[k],
                        "schedule: multipliers must be nondecreasing");
      }
    }
    detail::Require(betas.back() == 1.0, "schedule: last multiplier must be 1");
  }
};

// beta_k = exp(k + 1 - kappa): increasing, ending exactly at 1.
inline AnnealingSchedule MakeSchedule(int kappa) {
  detail::Require(kappa >= 1, "make_schedule: kappa must be >= 1");
  AnnealingSchedule schedule;
  schedule.betas.resize(static_cast<std::size_t>(kappa));
  for (int k = 0; k < kappa; ++k) {
    schedule.betas[static_cast<std::size_t>(k)] =
        std::exp(static_cast<double>(k + 1 - kappa));
  }
  return schedule;
}

struct IterationTrace {
  // ||Phi_k - Phi_{k-1}||_F for k = 1..kappa.
  std::vector<double> residuals;
  // ||Y - mean_j h(phi_{k,j})|| after pass k.
  std::vector<double> innovation_norms;
};

// Same formula as the non-iterative gain, evaluated on the iterate.
inline GainMatrix IterativeGain(const Ensemble& iterate, const Matrix& h_iterate,
                                const FilterState& state,
                                const FilterConfig& cfg, const Matrix& sigma) {
  return ComputeGain(iterate, h_iterate, state, cfg, sigma);
}

// Runs all kappa damped passes (no early exit). `state` must carry the
// current interval and the frozen lags, as for ComputeGain.
inline std::pair<Ensemble, IterationTrace> IterateUpdate(
    const Ensemble& pred, const FilterState& state, const Vector& y,
    const AnnealingSchedule& schedule, const MeasurementModel& meas,
    const FilterConfig& cfg) {
  schedule.Validate();
  detail::Require(y.size() == meas.q, "iterate_update: Y length != q");
  const Matrix sigma = meas.sigma();
  IterationTrace trace;
  trace.residuals.reserve(schedule.kappa());
  trace.innovation_norms.reserve(schedule.kappa());

  Ensemble iterate = pred;
  Matrix h_iterate = EvaluateMeasurements(meas, iterate.particles(), state.t_curr);
  for (std::size_t k = 1; k <= schedule.kappa(); ++k) {
    try {
      GainMatrix gain = IterativeGain(iterate, h_iterate, state, cfg, sigma);
      gain.values *= schedule.betas[k - 1];
      Ensemble next = AdditiveUpdate(iterate, gain, y, h_iterate);
      trace.residuals.push_back(
          (next.particles() - iterate.particles()).norm());
      iterate = std::move(next);
      h_iterate = EvaluateMeasurements(meas, iterate.particles(), state.t_curr);
      trace.innovation_norms.push_back((y - EnsembleMean(h_iterate)).norm());
    } catch (const NumericFailure& e) {
      throw NumericFailure(std::string("iterate_update: ") + e.what(),
                           e.particle(), state.t_curr, k);
    }
  }
  return {std::move(iterate), std::move(trace)};
}

struct IterativeStepResult {
  FilterState state;
  IterationTrace trace;
};

inline IterativeStepResult EnksIterativeStep(
    const FilterState& state, const ProcessModel& proc,
    const MeasurementModel& meas, const Vector& y, const FilterConfig& cfg,
    const AnnealingSchedule& schedule, std::span<RngStream> streams) {
  detail::Require(y.size() == meas.q, "enks_iterative_step: Y length != q");
  FilterState next = AdvanceClock(state, cfg.dt);
  const Ensemble pred = PredictEnsemble(proc, state.ensemble, state.t_curr,
                                        cfg.dt, streams, cfg.noise_resolution);
  auto [updated, trace] = IterateUpdate(pred, next, y, schedule, meas, cfg);
  next.ensemble = std::move(updated);
  next.prev_state_mean = EnsembleMean(pred);
  next.prev_meas_mean =
      EnsembleMean(EvaluateMeasurements(meas, pred.particles(), next.t_curr));
  return {std::move(next), std::move(trace)};
}

}  // namespace enks

#endif  // ENKS_ENKS_ITERATIVE_HPP_
