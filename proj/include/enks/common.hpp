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

#ifndef ENKS_COMMON_HPP_
#define ENKS_COMMON_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace enks {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Precondition or shape violation. Raised before any state is modified.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation produced a non-finite value or a factorization failed.
// Carries whatever location information was available at the throw site.
class NumericFailure : public std::runtime_error {
 public:
  explicit NumericFailure(const std::string& what,
                          std::optional<std::size_t> particle = std::nullopt,
                          std::optional<double> time = std::nullopt,
                          std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(Describe(what, particle, time, index)),
        particle_(particle),
        time_(time),
        index_(index) {}

  std::optional<std::size_t> particle() const { return particle_; }
  std::optional<double> time() const { return time_; }
  // Step index (outer loop) or iteration index (inner loop), when known.
  std::optional<std::size_t> index() const { return index_; }

 private:
  static std::string Describe(const std::string& what,
                              std::optional<std::size_t> particle,
                              std::optional<double> time,
                              std::optional<std::size_t> index) {
    std::string s = what;
    if (particle) s += " [particle " + std::to_string(*particle) + "]";
    if (time) s += " [t=" + std::to_string(*time) + "]";
    if (index) s += " [index " + std::to_string(*index) + "]";
    return s;
  }

  std::optional<std::size_t> particle_;
  std::optional<double> time_;
  std::optional<std::size_t> index_;
};

namespace detail {

inline void Require(bool ok, const std::string& message) {
  if (!ok) throw InvalidArgument(message);
}

template <typename Derived>
bool AllFinite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace detail

}  // namespace enks

#endif  // ENKS_COMMON_HPP_
