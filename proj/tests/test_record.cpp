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


#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <regex>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "enks/record.hpp"
#include "enks/svg.hpp"

namespace enks {
namespace {

RunRecord Sample() {
  RunRecord r;
  r.filters = {"enks", "enkf"};
  const double awkward[] = {0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789, 5e-324, -0.0};
  std::size_t i = 0;
  for (std::size_t step = 1; step <= 3; ++step) {
    for (const char* ch : {"x", "k1"}) {
      RunRow row;
      row.step = step;
      row.time = 0.1 * static_cast<double>(step);
      row.channel = ch;
      row.truth = awkward[i % 6];
      row.mean = {awkward[(i + 1) % 6], std::sqrt(2.0) * static_cast<double>(step)};
      row.std = {awkward[(i + 2) % 6], 1e10 / 3.0};
      r.rows.push_back(row);
      ++i;
    }
  }
  return r;
}

TEST(Csv, EmptyRecordIsHeaderOnly) {
  RunRecord r;
  r.filters = {"enks"};
  EXPECT_EQ(EmitCsvString(r), "step,time,channel,truth,enks_mean,enks_std\n");
}

TEST(Csv, OneRowIsTwoLines) {
  RunRecord r;
  r.filters = {"enks", "enks-iter"};
  r.rows.push_back({4, 0.4, "x", 1.5, {1.25, 2.0}, {0.1, 0.2}});
  EXPECT_EQ(EmitCsvString(r),
            "step,time,channel,truth,enks_mean,enks_std,enks-iter_mean,enks-iter_std\n"
            "4,0.4,x,1.5,1.25,0.1,2,0.2\n");
}

TEST(Csv, RoundTripIsIdentity) {
  const RunRecord r = Sample();
  const RunRecord back = LoadCsvString(EmitCsvString(r));
  EXPECT_EQ(back, r);
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_EQ(std::signbit(back.rows[i].truth), std::signbit(r.rows[i].truth));
  }
  EXPECT_EQ(EmitCsvString(back), EmitCsvString(r));
}

TEST(Csv, RoundTripThroughFile) {
  const auto path = std::filesystem::temp_directory_path() / "enks_record_roundtrip.csv";
  const RunRecord r = Sample();
  EmitCsv(r, path.string());
  EXPECT_EQ(LoadCsv(path.string()), r);
  std::ifstream f(path, std::ios::binary);
  const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  EXPECT_EQ(text.find('\r'), std::string::npos);
  std::filesystem::remove(path);
}

TEST(Csv, RejectsMalformedInput) {
  EXPECT_THROW(LoadCsvString(""), InvalidArgument);
  EXPECT_THROW(LoadCsvString("step,time,chan,truth\n"), InvalidArgument);
  EXPECT_THROW(LoadCsvString("step,time,channel,truth,a_mean\n"), InvalidArgument);
  EXPECT_THROW(LoadCsvString("step,time,channel,truth\n1,0.1,x\n"), InvalidArgument);
  EXPECT_THROW(LoadCsvString("step,time,channel,truth\n1,zero,x,1\n"), InvalidArgument);
}

TEST(Csv, RejectsRaggedRows) {
  RunRecord r;
  r.filters = {"enks"};
  r.rows.push_back({1, 0.1, "x", 1.0, {}, {}});
  EXPECT_THROW(EmitCsvString(r), InvalidArgument);
}

TEST(Summary, MatchesRecomputedRmse) {
  const RunRecord r = Sample();
  const RmseTable table = SummarizeRmse(r);
  for (std::size_t f = 0; f < r.filters.size(); ++f) {
    for (const char* ch : {"x", "k1"}) {
      double acc = 0;
      int count = 0;
      for (const auto& row : r.rows) {
        if (row.channel != ch) continue;
        acc += (row.mean[f] - row.truth) * (row.mean[f] - row.truth);
        ++count;
      }
      const double expect = std::sqrt(acc / count);
      EXPECT_NEAR(table.at(r.filters[f]).at(ch), expect, 1e-12 * std::max(1.0, expect));
    }
  }
}

int CountPolylines(const std::string& svg) {
  int n = 0;
  for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos;
       pos = svg.find("<polyline", pos + 1)) {
    ++n;
  }
  return n;
}

std::vector<std::string> PointLists(const std::string& svg) {
  std::vector<std::string> out;
  const std::regex re("points=\"([^\"]*)\"");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it) {
    out.push_back((*it)[1]);
  }
  return out;
}

TEST(LineChart, ConstantSeriesIsHorizontal) {
  RunRecord r;
  r.filters = {"enks"};
  for (std::size_t k = 1; k <= 5; ++k) r.rows.push_back({k, 0.1 * k, "x", 2.0, {2.0}, {0.0}});
  const std::string svg = RenderLineChart(r, {"x"});
  ASSERT_EQ(CountPolylines(svg), 2);
  for (const auto& pts : PointLists(svg)) {
    std::set<std::string> ys;
    std::istringstream in(pts);
    std::string pair;
    int count = 0;
    while (in >> pair) {
      ys.insert(pair.substr(pair.find(',') + 1));
      ++count;
    }
    EXPECT_EQ(count, 5);
    EXPECT_EQ(ys.size(), 1u) << pts;
  }
}

TEST(LineChart, EmptyOrUnknownChannelsAreErrors) {
  const RunRecord r = Sample();
  EXPECT_THROW(RenderLineChart(r, {}), InvalidArgument);
  EXPECT_THROW(RenderLineChart(r, {"nope"}), InvalidArgument);
}

TEST(LineChart, OnePolylinePerFilterAndChannelPlusTruth) {
  const RunRecord r = Sample();
  EXPECT_EQ(CountPolylines(RenderLineChart(r, {"x"})), 3);
  EXPECT_EQ(CountPolylines(RenderLineChart(r, {"x", "k1"})), 6);
}

TEST(LineChart, WellFormedWithLabeledAxes) {
  RunRecord r = Sample();
  const std::string svg = RenderLineChart(r, {"x"}, "a <title> & more");
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(svg.find("<svg xmlns=\"http://www.w3.org/2000/svg\""), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("class=\"xlabel\""), std::string::npos);
  EXPECT_NE(svg.find("class=\"ylabel\""), std::string::npos);
  EXPECT_NE(svg.find("a &lt;title&gt; &amp; more"), std::string::npos);
  // Every opened element is closed or self-closing.
  const std::regex open_tag("<(svg|g|text)[ >]");
  const std::regex close_tag("</(svg|g|text)>");
  const auto opens = std::distance(std::sregex_iterator(svg.begin(), svg.end(), open_tag),
                                   std::sregex_iterator());
  const auto closes = std::distance(std::sregex_iterator(svg.begin(), svg.end(), close_tag),
                                    std::sregex_iterator());
  EXPECT_EQ(opens, closes);
}

TEST(LineChart, WritesFile) {
  const auto path = std::filesystem::temp_directory_path() / "enks_chart.svg";
  EmitLineChart(Sample(), {"k1"}, path.string());
  EXPECT_GT(std::filesystem::file_size(path), 100u);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace enks
