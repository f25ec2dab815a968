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


#ifndef ENKS_CONFIG_HPP_
#define ENKS_CONFIG_HPP_

// Experiment configuration and its text form.
//
//   # comment            ; also a comment
//   [run]
//   problem = population
//   filters = enks, enkf
//   ensemble = 1000
//   [model]
//   proc_noise = 0.2
//   [sweep]
//   variable = N
//   values = 50, 100, 200
//
// Keys before the first section header belong to [run]. Unknown sections and
// keys are errors, as are repeated keys within one file.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "enks/common.hpp"
#include "enks/enks.hpp"
#include "enks/metrics.hpp"
#include "enks/record.hpp"

namespace enks {

class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

enum class Problem { kFrame50, kFrame20Damaged, kPendulum, kPopulation, kLinearGaussian };

enum class FilterKind { kEnks, kEnksIterative, kEnkf };

inline std::string ToString(Problem p) {
  switch (p) {
    case Problem::kFrame50: return "frame50";
    case Problem::kFrame20Damaged: return "frame20-damaged";
    case Problem::kPendulum: return "pendulum";
    case Problem::kPopulation: return "population";
    case Problem::kLinearGaussian: return "linear-gaussian";
  }
  return "?";
}

inline std::string ToString(FilterKind f) {
  switch (f) {
    case FilterKind::kEnks: return "enks";
    case FilterKind::kEnksIterative: return "enks-iter";
    case FilterKind::kEnkf: return "enkf";
  }
  return "?";
}

inline Problem ParseProblem(std::string_view s) {
  for (Problem p : {Problem::kFrame50, Problem::kFrame20Damaged, Problem::kPendulum,
                    Problem::kPopulation, Problem::kLinearGaussian}) {
    if (s == ToString(p)) return p;
  }
  throw ConfigError("unknown problem '" + std::string(s) +
                    "' (frame50, frame20-damaged, pendulum, population, linear-gaussian)");
}

inline FilterKind ParseFilter(std::string_view s) {
  for (FilterKind f : {FilterKind::kEnks, FilterKind::kEnksIterative, FilterKind::kEnkf}) {
    if (s == ToString(f)) return f;
  }
  throw ConfigError("unknown filter '" + std::string(s) + "' (enks, enks-iter, enkf)");
}

inline GainClock ParseGainClock(std::string_view s) {
  if (s == "interval") return GainClock::kInterval;
  if (s == "absolute") return GainClock::kAbsolute;
  throw ConfigError("unknown gain_clock '" + std::string(s) + "' (interval, absolute)");
}

inline std::string ToString(GainClock c) {
  return c == GainClock::kInterval ? "interval" : "absolute";
}

inline SweepVariable ParseSweepVariable(std::string_view s) {
  if (s == "N" || s == "n" || s == "ensemble") return SweepVariable::kEnsembleSize;
  if (s == "dt") return SweepVariable::kTimeStep;
  throw ConfigError("unknown sweep variable '" + std::string(s) + "' (N, dt)");
}

// Run length and resolution used when the config leaves them out.
struct ProblemDefaults {
  Eigen::Index ensemble_size;
  double dt;
  double horizon;
};

inline ProblemDefaults DefaultsFor(Problem p) {
  switch (p) {
    case Problem::kFrame50: return {800, 0.01, 10.0};
    case Problem::kFrame20Damaged: return {300, 0.01, 20.0};
    case Problem::kPendulum: return {600, 0.01, 20.0};
    case Problem::kPopulation: return {1000, 0.1, 5.0};
    case Problem::kLinearGaussian: return {2000, 0.01, 10.0};
  }
  return {100, 0.01, 1.0};
}

// Problem-specific knobs. Unset fields take the builder's defaults.
struct ModelOverrides {
  std::optional<double> proc_noise;
  std::optional<double> meas_noise;      // absolute per-sample std
  std::optional<double> meas_noise_rel;  // fraction of the clean signal's std
  std::optional<double> param_diffusion;
  std::optional<Eigen::Index> dof;
  std::optional<Eigen::Index> damaged_storey;
  std::optional<double> damaged_k;
  std::optional<double> forcing_amp;
  std::optional<double> x0;            // population truth start
  std::optional<double> guess;         // scalar problems: initial mean
  std::optional<double> spread;        // scalar problems: initial std
  std::optional<double> guess_scale;   // parameter guess relative to nominal
  std::optional<double> spread_rel;    // parameter spread relative to guess
  std::optional<double> state_spread;  // spread on dynamic state channels
  std::optional<double> lg_a, lg_f, lg_h, lg_r;
  // When > 0, per-sample measurement noise scales as sqrt(ref/dt) so that the
  // continuous-time noise intensity is independent of dt.
  std::optional<double> noise_reference_dt;
};

struct SweepSettings {
  SweepVariable variable = SweepVariable::kEnsembleSize;
  std::vector<double> values;
  int repeats = 5;
  double reference_factor = 16.0;
};

struct ExperimentConfig {
  Problem problem = Problem::kLinearGaussian;
  std::vector<FilterKind> filters;
  std::optional<Eigen::Index> ensemble_size;
  std::optional<double> dt;
  double alpha = 0.8;
  int kappa = 10;
  std::uint64_t seed = 1;
  std::optional<double> horizon;
  std::string out_dir;
  std::string data_dir;  // load truth + measurements from here instead
  GainClock clock = GainClock::kInterval;
  double noise_resolution = 0.0;
  ModelOverrides model;
  SweepSettings sweep;

  Eigen::Index N() const { return ensemble_size.value_or(DefaultsFor(problem).ensemble_size); }
  double Dt() const { return dt.value_or(DefaultsFor(problem).dt); }
  double Horizon() const { return horizon.value_or(DefaultsFor(problem).horizon); }
  std::size_t Steps() const { return StepCount(Horizon(), Dt()); }

  FilterConfig Filter() const {
    FilterConfig cfg;
    cfg.ensemble_size = N();
    cfg.dt = Dt();
    cfg.alpha = alpha;
    cfg.seed = seed;
    cfg.clock = clock;
    cfg.noise_resolution = noise_resolution;
    if (model.param_diffusion) cfg.param_diffusion = *model.param_diffusion;
    return cfg;
  }

  void Validate() const {
    auto check = [](bool ok, const std::string& msg) {
      if (!ok) throw ConfigError(msg);
    };
    check(N() >= 2, "ensemble must be >= 2");
    check(Dt() > 0.0, "dt must be positive");
    check(Horizon() > 0.0, "horizon must be positive");
    check(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    check(kappa >= 1, "kappa must be >= 1");
    check(noise_resolution >= 0.0, "noise_resolution must be nonnegative");
    try {
      (void)Steps();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    std::set<FilterKind> seen;
    for (auto f : filters) check(seen.insert(f).second, "filter listed twice: " + ToString(f));
    const auto& m = model;
    auto nonneg = [&](const std::optional<double>& v, const char* name) {
      check(!v || (*v >= 0.0 && std::isfinite(*v)), std::string(name) + " must be nonnegative");
    };
    nonneg(m.proc_noise, "proc_noise");
    nonneg(m.meas_noise, "meas_noise");
    nonneg(m.meas_noise_rel, "meas_noise_rel");
    nonneg(m.param_diffusion, "param_diffusion");
    nonneg(m.spread, "spread");
    nonneg(m.spread_rel, "spread_rel");
    nonneg(m.state_spread, "state_spread");
    nonneg(m.noise_reference_dt, "noise_reference_dt");
    check(!m.dof || *m.dof >= 1, "dof must be >= 1");
    check(!m.damaged_k || *m.damaged_k > 0.0, "damaged_k must be positive");
    check(!m.guess_scale || *m.guess_scale > 0.0, "guess_scale must be positive");
    if (m.damaged_storey) {
      const Eigen::Index dof =
          m.dof.value_or(problem == Problem::kFrame50 ? 50 : 20);
      check(*m.damaged_storey >= 1 && *m.damaged_storey <= dof,
            "damaged_storey out of range");
    }
    check(!m.lg_r || *m.lg_r > 0.0, "lg_r must be positive");
    check(sweep.repeats >= 1, "repeats must be >= 1");
    check(sweep.reference_factor > 1.0, "reference_factor must exceed 1");
  }
};

namespace detail {

inline std::string Trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline double ParseNumber(const std::string& key, const std::string& v) {
  try {
    return ParseDouble(v);
  } catch (const InvalidArgument&) {
    throw ConfigError(key + ": not a number: '" + v + "'");
  }
}

inline std::int64_t ParseInteger(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError(key + ": not an integer: '" + v + "'");
  }
  return out;
}

inline std::vector<std::string> SplitList(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace detail

// Applies one key to the config. `section` is "run", "model" or "sweep".
// Also used for command-line overrides.
inline void ApplyConfigKey(ExperimentConfig& cfg, const std::string& section,
                           const std::string& key, const std::string& value) {
  using detail::ParseInteger;
  using detail::ParseNumber;
  auto& m = cfg.model;
  if (section == "run") {
    if (key == "problem") cfg.problem = ParseProblem(value);
    else if (key == "filters" || key == "filter") {
      cfg.filters.clear();
      for (const auto& f : detail::SplitList(value)) cfg.filters.push_back(ParseFilter(f));
    } else if (key == "ensemble") cfg.ensemble_size = ParseInteger(key, value);
    else if (key == "dt") cfg.dt = ParseNumber(key, value);
    else if (key == "alpha") cfg.alpha = ParseNumber(key, value);
    else if (key == "kappa") cfg.kappa = static_cast<int>(ParseInteger(key, value));
    else if (key == "seed") {
      const auto s = ParseInteger(key, value);
      if (s < 0) throw ConfigError("seed must be nonnegative");
      cfg.seed = static_cast<std::uint64_t>(s);
    } else if (key == "horizon") cfg.horizon = ParseNumber(key, value);
    else if (key == "out") cfg.out_dir = value;
    else if (key == "data") cfg.data_dir = value;
    else if (key == "gain_clock") cfg.clock = ParseGainClock(value);
    else if (key == "noise_resolution") cfg.noise_resolution = ParseNumber(key, value);
    else throw ConfigError("unknown key [run] " + key);
  } else if (section == "model") {
    if (key == "proc_noise") m.proc_noise = ParseNumber(key, value);
    else if (key == "meas_noise") m.meas_noise = ParseNumber(key, value);
    else if (key == "meas_noise_rel") m.meas_noise_rel = ParseNumber(key, value);
    else if (key == "param_diffusion") m.param_diffusion = ParseNumber(key, value);
    else if (key == "dof") m.dof = ParseInteger(key, value);
    else if (key == "damaged_storey") m.damaged_storey = ParseInteger(key, value);
    else if (key == "damaged_k") m.damaged_k = ParseNumber(key, value);
    else if (key == "forcing_amp") m.forcing_amp = ParseNumber(key, value);
    else if (key == "x0") m.x0 = ParseNumber(key, value);
    else if (key == "guess") m.guess = ParseNumber(key, value);
    else if (key == "spread") m.spread = ParseNumber(key, value);
    else if (key == "guess_scale") m.guess_scale = ParseNumber(key, value);
    else if (key == "spread_rel") m.spread_rel = ParseNumber(key, value);
    else if (key == "state_spread") m.state_spread = ParseNumber(key, value);
    else if (key == "a") m.lg_a = ParseNumber(key, value);
    else if (key == "f") m.lg_f = ParseNumber(key, value);
    else if (key == "h") m.lg_h = ParseNumber(key, value);
    else if (key == "r") m.lg_r = ParseNumber(key, value);
    else if (key == "noise_reference_dt") m.noise_reference_dt = ParseNumber(key, value);
    else throw ConfigError("unknown key [model] " + key);
  } else if (section == "sweep") {
    if (key == "variable") cfg.sweep.variable = ParseSweepVariable(value);
    else if (key == "values") {
      cfg.sweep.values.clear();
      for (const auto& v : detail::SplitList(value)) {
        cfg.sweep.values.push_back(ParseNumber(key, v));
      }
    } else if (key == "repeats") cfg.sweep.repeats = static_cast<int>(ParseInteger(key, value));
    else if (key == "reference_factor") cfg.sweep.reference_factor = ParseNumber(key, value);
    else throw ConfigError("unknown key [sweep] " + key);
  } else {
    throw ConfigError("unknown section [" + section + "]");
  }
}

inline ExperimentConfig ParseConfigString(const std::string& text,
                                          ExperimentConfig cfg = {}) {
  std::istringstream in(text);
  std::string raw;
  std::string section = "run";
  std::set<std::string> seen;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto where = "line " + std::to_string(line_no) + ": ";
    const auto cut = raw.find_first_of("#;");
    std::string line = detail::Trim(cut == std::string::npos ? raw : raw.substr(0, cut));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = detail::Trim(std::string_view(line).substr(1, line.size() - 2));
      if (section != "run" && section != "model" && section != "sweep") {
        throw ConfigError(where + "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = detail::Trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::Trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "empty key");
    if (!seen.insert(section + "." + key).second) {
      throw ConfigError(where + "duplicate key " + key);
    }
    try {
      ApplyConfigKey(cfg, section, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return cfg;
}

inline ExperimentConfig LoadConfig(const std::string& path, ExperimentConfig cfg = {}) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw ConfigError("cannot read config " + path);
  std::ostringstream ss;
  ss << file.rdbuf();
  return ParseConfigString(ss.str(), std::move(cfg));
}

// Canonical text form; ParseConfigString(Emit(c)) reproduces c.
inline std::string EmitConfigString(const ExperimentConfig& cfg) {
  using detail::FormatDouble;
  std::ostringstream out;
  out << "[run]\n";
  out << "problem = " << ToString(cfg.problem) << "\n";
  if (!cfg.filters.empty()) {
    out << "filters = ";
    for (std::size_t i = 0; i < cfg.filters.size(); ++i) {
      out << (i ? ", " : "") << ToString(cfg.filters[i]);
    }
    out << "\n";
  }
  out << "ensemble = " << cfg.N() << "\n";
  out << "dt = " << FormatDouble(cfg.Dt()) << "\n";
  out << "alpha = " << FormatDouble(cfg.alpha) << "\n";
  out << "kappa = " << cfg.kappa << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "horizon = " << FormatDouble(cfg.Horizon()) << "\n";
  out << "gain_clock = " << ToString(cfg.clock) << "\n";
  out << "noise_resolution = " << FormatDouble(cfg.noise_resolution) << "\n";
  out << "\n[model]\n";
  const auto& m = cfg.model;
  auto num = [&](const char* key, const std::optional<double>& v) {
    if (v) out << key << " = " << FormatDouble(*v) << "\n";
  };
  auto integer = [&](const char* key, const std::optional<Eigen::Index>& v) {
    if (v) out << key << " = " << *v << "\n";
  };
  num("proc_noise", m.proc_noise);
  num("meas_noise", m.meas_noise);
  num("meas_noise_rel", m.meas_noise_rel);
  num("param_diffusion", m.param_diffusion);
  integer("dof", m.dof);
  integer("damaged_storey", m.damaged_storey);
  num("damaged_k", m.damaged_k);
  num("forcing_amp", m.forcing_amp);
  num("x0", m.x0);
  num("guess", m.guess);
  num("spread", m.spread);
  num("guess_scale", m.guess_scale);
  num("spread_rel", m.spread_rel);
  num("state_spread", m.state_spread);
  num("a", m.lg_a);
  num("f", m.lg_f);
  num("h", m.lg_h);
  num("r", m.lg_r);
  num("noise_reference_dt", m.noise_reference_dt);
  out << "\n[sweep]\n";
  out << "variable = " << (cfg.sweep.variable == SweepVariable::kTimeStep ? "dt" : "N") << "\n";
  if (!cfg.sweep.values.empty()) {
    out << "values = ";
    for (std::size_t i = 0; i < cfg.sweep.values.size(); ++i) {
      out << (i ? ", " : "") << FormatDouble(cfg.sweep.values[i]);
    }
    out << "\n";
  }
  out << "repeats = " << cfg.sweep.repeats << "\n";
  out << "reference_factor = " << FormatDouble(cfg.sweep.reference_factor) << "\n";
  return out.str();
}

}  // namespace enks

#endif  // ENKS_CONFIG_HPP_
