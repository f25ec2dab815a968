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


#ifndef ENKS_RECORD_HPP_
#define ENKS_RECORD_HPP_

// Run records and their CSV form:
//
//   step,time,channel,truth,<filter>_mean,<filter>_std,...
//
// One row per (step, channel). Numbers use shortest round-trip formatting,
// so Load(Emit(r)) reproduces r exactly.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "enks/common.hpp"
#include "enks/metrics.hpp"

namespace enks {

struct RunRow {
  std::size_t step = 0;
  double time = 0.0;
  std::string channel;
  double truth = 0.0;
  std::vector<double> mean;  // one per filter, record order
  std::vector<double> std;

  friend bool operator==(const RunRow&, const RunRow&) = default;
};

struct RunRecord {
  std::vector<std::string> filters;
  std::vector<RunRow> rows;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;

  friend bool operator==(const RunRecord& a, const RunRecord& b) {
    return a.filters == b.filters && a.rows == b.rows;
  }
};

// filter -> channel -> RMSE of the ensemble mean against truth.
using RmseTable = std::map<std::string, std::map<std::string, double>>;

inline RmseTable SummarizeRmse(const RunRecord& record) {
  std::map<std::string, std::vector<double>> truth;
  std::vector<std::map<std::string, std::vector<double>>> est(record.filters.size());
  for (const auto& row : record.rows) {
    truth[row.channel].push_back(row.truth);
    for (std::size_t f = 0; f < record.filters.size(); ++f) {
      est[f][row.channel].push_back(row.mean[f]);
    }
  }
  RmseTable table;
  for (std::size_t f = 0; f < record.filters.size(); ++f) {
    for (const auto& [channel, series] : truth) {
      table[record.filters[f]][channel] = Rmse(est[f][channel], series);
    }
  }
  return table;
}

namespace detail {

inline std::string FormatDouble(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double ParseDouble(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InvalidArgument("csv: bad number '" + std::string(s) + "'");
  }
  return v;
}

inline std::vector<std::string_view> SplitComma(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace detail

inline std::string CsvHeader(const std::vector<std::string>& filters) {
  std::string h = "step,time,channel,truth";
  for (const auto& f : filters) h += "," + f + "_mean," + f + "_std";
  return h;
}

inline std::string EmitCsvString(const RunRecord& record) {
  std::string out = CsvHeader(record.filters) + "\n";
  for (const auto& row : record.rows) {
    detail::Require(row.mean.size() == record.filters.size() &&
                        row.std.size() == record.filters.size(),
                    "emit_csv: row has the wrong number of filter columns");
    detail::Require(row.channel.find_first_of(",\n") == std::string::npos,
                    "emit_csv: channel names may not contain ',' or newlines");
    out += std::to_string(row.step);
    out += ',';
    out += detail::FormatDouble(row.time);
    out += ',';
    out += row.channel;
    out += ',';
    out += detail::FormatDouble(row.truth);
    for (std::size_t f = 0; f < record.filters.size(); ++f) {
      out += ',';
      out += detail::FormatDouble(row.mean[f]);
      out += ',';
      out += detail::FormatDouble(row.std[f]);
    }
    out += '\n';
  }
  return out;
}

inline void EmitCsv(const RunRecord& record, const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw InvalidArgument("emit_csv: cannot open " + path);
  file << EmitCsvString(record);
  if (!file) throw InvalidArgument("emit_csv: write failed for " + path);
}

inline RunRecord LoadCsvString(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("load_csv: missing header");
  const auto head = detail::SplitComma(line);
  if (head.size() < 4 || (head.size() - 4) % 2 != 0 || head[0] != "step" ||
      head[1] != "time" || head[2] != "channel" || head[3] != "truth") {
    throw InvalidArgument("load_csv: unexpected header");
  }
  RunRecord record;
  for (std::size_t c = 4; c < head.size(); c += 2) {
    const std::string_view mean_col = head[c];
    if (!mean_col.ends_with("_mean")) throw InvalidArgument("load_csv: bad filter column");
    const std::string name(mean_col.substr(0, mean_col.size() - 5));
    if (head[c + 1] != name + "_std") throw InvalidArgument("load_csv: bad filter column");
    record.filters.push_back(name);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::SplitComma(line);
    if (cells.size() != head.size()) throw InvalidArgument("load_csv: ragged row");
    RunRow row;
    std::size_t step = 0;
    const auto res = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), step);
    if (res.ec != std::errc()) throw InvalidArgument("load_csv: bad step");
    row.step = step;
    row.time = detail::ParseDouble(cells[1]);
    row.channel = std::string(cells[2]);
    row.truth = detail::ParseDouble(cells[3]);
    for (std::size_t c = 4; c < cells.size(); c += 2) {
      row.mean.push_back(detail::ParseDouble(cells[c]));
      row.std.push_back(detail::ParseDouble(cells[c + 1]));
    }
    record.rows.push_back(std::move(row));
  }
  return record;
}

inline RunRecord LoadCsv(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw InvalidArgument("load_csv: cannot open " + path);
  std::ostringstream ss;
  ss << file.rdbuf();
  return LoadCsvString(ss.str());
}

inline void EmitSummaryCsv(const RmseTable& table, const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw InvalidArgument("emit_summary: cannot open " + path);
  file << "filter,channel,rmse\n";
  for (const auto& [filter, channels] : table) {
    for (const auto& [channel, value] : channels) {
      file << filter << ',' << channel << ',' << detail::FormatDouble(value) << '\n';
    }
  }
}

}  // namespace enks

#endif  // ENKS_RECORD_HPP_
