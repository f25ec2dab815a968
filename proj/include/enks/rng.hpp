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


#ifndef ENKS_RNG_HPP_
#define ENKS_RNG_HPP_

// Counter-based normal streams. A stream is a pure function of
// (seed, stream_id, index); the stateful cursor only remembers how far a
// consumer has read, so replaying a stream reproduces it exactly and any
// number of streams can be consumed concurrently without coordination.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "enks/common.hpp"

namespace enks {

// Philox4x32 with 10 rounds (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter Generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

// Stream identifiers are namespaced by purpose so that, e.g., particle 3's
// process noise never aliases particle 3's observation perturbations.
enum class StreamPurpose : std::uint64_t {
  kInitialEnsemble = 1,
  kProcessNoise = 2,
  kObservationPerturbation = 3,
  kTruthProcess = 4,
  kMeasurementNoise = 5,
  kForcing = 6,
  kTruthInitial = 7,
};

constexpr std::uint64_t MakeStreamId(StreamPurpose purpose,
                                     std::uint64_t index) {
  return (static_cast<std::uint64_t>(purpose) << 40) ^ index;
}

class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  // Number of normals consumed so far.
  std::uint64_t counter() const { return counter_; }

  // The index-th standard normal of this stream. Pure.
  double NormalAt(std::uint64_t index) const {
    const std::uint64_t block = index >> 1;
    const auto out = Philox4x32::Generate(
        {static_cast<std::uint32_t>(block),
         static_cast<std::uint32_t>(block >> 32),
         static_cast<std::uint32_t>(stream_id_),
         static_cast<std::uint32_t>(stream_id_ >> 32)},
        {static_cast<std::uint32_t>(seed_),
         static_cast<std::uint32_t>(seed_ >> 32)});
    // Two open-interval uniforms with 53 bits each, then Box-Muller.
    const double u1 = ToUnitOpen(out[0], out[1]);
    const double u2 = ToUnitOpen(out[2], out[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return (index & 1u) ? radius * std::sin(angle) : radius * std::cos(angle);
  }

  double NextNormal() { return NormalAt(counter_++); }

  Vector NextNormals(Eigen::Index count) {
    Vector z(count);
    for (Eigen::Index k = 0; k < count; ++k) z[k] = NextNormal();
    return z;
  }

 private:
  static double ToUnitOpen(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits =
        ((std::uint64_t{hi} << 32) | std::uint64_t{lo}) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
  std::uint64_t counter_ = 0;
};

// One stream per particle, keyed by (seed, purpose, particle index).
inline std::vector<RngStream> MakeParticleStreams(std::uint64_t seed,
                                                  std::size_t count,
                                                  StreamPurpose purpose) {
  std::vector<RngStream> streams;
  streams.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    streams.emplace_back(seed, MakeStreamId(purpose, j));
  }
  return streams;
}

// m independent N(0, dt) draws.
inline Vector BrownianIncrements(RngStream& stream, Eigen::Index m,
                                 double dt) {
  detail::Require(dt > 0.0, "brownian_increments: dt must be positive");
  detail::Require(m >= 0, "brownian_increments: negative dimension");
  return std::sqrt(dt) * stream.NextNormals(m);
}

// Increment over a step of length dt assembled from fine sub-increments of
// length fine_dt. Streams read at different dt but the same fine_dt then
// sample one Brownian path, which is what a time-step refinement study needs.
inline Vector BrownianIncrementsRefined(RngStream& stream, Eigen::Index m,
                                        double dt, double fine_dt) {
  detail::Require(dt > 0.0 && fine_dt > 0.0,
                  "brownian_increments: dt must be positive");
  const double ratio = dt / fine_dt;
  const auto substeps = static_cast<long>(std::llround(ratio));
  detail::Require(substeps >= 1 && std::abs(ratio - substeps) < 1e-6,
                  "brownian_increments: dt is not a multiple of fine_dt");
  Vector sum = Vector::Zero(m);
  for (long s = 0; s < substeps; ++s) sum += stream.NextNormals(m);
  return std::sqrt(fine_dt) * sum;
}

}  // namespace enks

#endif  // ENKS_RNG_HPP_
