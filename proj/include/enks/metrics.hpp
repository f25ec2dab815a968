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


#ifndef ENKS_METRICS_HPP_
#define ENKS_METRICS_HPP_

#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "enks/common.hpp"

namespace enks {

inline double Rmse(std::span<const double> estimates, std::span<const double> truth) {
  detail::Require(estimates.size() == truth.size(), "rmse: length mismatch");
  detail::Require(!estimates.empty(), "rmse: empty series");
  double acc = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const double e = estimates[k] - truth[k];
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(truth.size()));
}

// Per-row RMSE of channels x time matrices.
inline Vector Rmse(const Matrix& estimates, const Matrix& truth) {
  detail::Require(estimates.rows() == truth.rows() && estimates.cols() == truth.cols(),
                  "rmse: shape mismatch");
  detail::Require(truth.cols() >= 1, "rmse: empty series");
  return ((estimates - truth).rowwise().squaredNorm() /
          static_cast<double>(truth.cols()))
      .cwiseSqrt();
}

inline double MeanAbsDeviation(std::span<const double> a, std::span<const double> b) {
  detail::Require(a.size() == b.size() && !a.empty(), "mean_abs: length mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += std::abs(a[k] - b[k]);
  return acc / static_cast<double>(a.size());
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Least-squares fit of log(y) = intercept + slope * log(x).
inline LineFit LogLogFit(std::span<const double> x, std::span<const double> y) {
  detail::Require(x.size() == y.size() && x.size() >= 2, "loglog_fit: need >= 2 points");
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    detail::Require(x[i] > 0.0 && y[i] > 0.0, "loglog_fit: values must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const double count = static_cast<double>(x.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / count;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / count;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  detail::Require(sxx > 0.0, "loglog_fit: x values must not all coincide");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

enum class SweepVariable { kEnsembleSize, kTimeStep };

inline std::string ToString(SweepVariable v) {
  return v == SweepVariable::kEnsembleSize ? "N" : "dt";
}

struct ConvergenceReport {
  SweepVariable variable = SweepVariable::kEnsembleSize;
  std::vector<double> values;
  std::vector<double> mean_error;
  std::vector<double> std_error;  // sample std over repeats
  double slope = 0.0;
  double intercept = 0.0;
};

// error(value, repeat) -> nonnegative scalar.
using ErrorEvaluator = std::function<double(double value, int repeat)>;

inline ConvergenceReport ConvergenceSweep(SweepVariable variable,
                                          std::span<const double> values,
                                          int repeats,
                                          const ErrorEvaluator& error) {
  detail::Require(values.size() >= 3, "convergence_sweep: need >= 3 sweep points");
  detail::Require(repeats >= 5, "convergence_sweep: need >= 5 repeats");
  ConvergenceReport report;
  report.variable = variable;
  report.values.assign(values.begin(), values.end());
  for (double value : values) {
    std::vector<double> errs(static_cast<std::size_t>(repeats));
    for (int r = 0; r < repeats; ++r) errs[static_cast<std::size_t>(r)] = error(value, r);
    const double mean =
        std::accumulate(errs.begin(), errs.end(), 0.0) / static_cast<double>(repeats);
    double var = 0.0;
    for (double e : errs) var += (e - mean) * (e - mean);
    report.mean_error.push_back(mean);
    report.std_error.push_back(std::sqrt(var / static_cast<double>(repeats - 1)));
  }
  const LineFit fit = LogLogFit(report.values, report.mean_error);
  report.slope = fit.slope;
  report.intercept = fit.intercept;
  return report;
}

}  // namespace enks

#endif  // ENKS_METRICS_HPP_
