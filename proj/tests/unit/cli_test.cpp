// Copyright 2026 The HLA Authors
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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hla_tools/bench.hpp"
#include "hla_tools/cli.hpp"

namespace hla::tools {
namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "hla");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(CliCheck, PassesOnFreshBuild) {
  const auto r = run({"check"});
  EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
  EXPECT_NE(r.out.find("all suites passed"), std::string::npos);
}

TEST(CliCheck, SinglePrecisionRelaxed) {
  const auto r = run({"check", "--precision", "single"});
  EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
  EXPECT_NE(r.out.find("precision single"), std::string::npos);
}

TEST(CliCheck, InjectedFaultIsRejected) {
  EXPECT_EQ(run({"check", "--inject-fault", "eps=-1"}).code, kExitUsage);
  EXPECT_EQ(run({"check", "--inject-fault", "decay=1.5"}).code, kExitUsage);
  EXPECT_EQ(run({"check", "--inject-fault", "bogus=1"}).code, kExitUsage);
  EXPECT_EQ(run({"check", "--inject-fault", "eps"}).code, kExitUsage);
}

TEST(CliBench, GoldenSchema) {
  const auto r = run({"bench", "--variant", "hla2,linear", "--seq-lens", "8,16",
                      "--d", "4", "--d-phi", "2", "--trials", "3"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  // wall_ns varies run to run; blank it before comparing.
  std::ostringstream masked;
  for (auto row : parse_csv(r.out)) {
    if (row[0] != "variant") row[5] = "*";
    for (std::size_t i = 0; i < row.size(); ++i) masked << (i ? "," : "") << row[i];
    masked << '\n';
  }
  EXPECT_EQ(masked.str(), read_file(std::filesystem::path(HLA_GOLDEN_DIR) / "bench_small.csv"));
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), kBenchCsvHeader);
}

TEST(CliBench, FlopRatios) {
  const auto hla = parse_csv(run({"bench", "--variant", "hla3", "--seq-lens",
                                  "1024,2048,4096", "--d", "16", "--trials", "3"}).out);
  ASSERT_EQ(hla.size(), 4u);
  for (std::size_t i = 2; i < 4; ++i) {
    const double ratio = std::stod(hla[i][6]) / std::stod(hla[i - 1][6]);
    EXPECT_NEAR(ratio, 2.0, 0.05);
    EXPECT_GT(std::stod(hla[i][5]), 0);
  }
  const auto sm = parse_csv(run({"bench", "--variant", "softmax", "--seq-lens",
                                 "64,128,256", "--d", "16", "--trials", "3"}).out);
  ASSERT_EQ(sm.size(), 4u);
  for (std::size_t i = 2; i < 4; ++i) {
    EXPECT_NEAR(std::stod(sm[i][6]) / std::stod(sm[i - 1][6]), 4.0, 0.2);
  }
}

TEST(CliBench, ChecksumStable) {
  const std::vector<std::string> args{"bench", "--variant", "hla3,softmax", "--seq-lens",
                                      "32,64", "--d", "8", "--threads", "1"};
  const auto a = parse_csv(run(args).out), b = parse_csv(run(args).out);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_EQ(a[i][7], b[i][7]);
}

TEST(CliBench, UsageErrors) {
  EXPECT_EQ(run({"bench", "--seq-lens", ""}).code, kExitUsage);
  EXPECT_EQ(run({"bench"}).code, kExitUsage);
  EXPECT_EQ(run({"bench", "--seq-lens", "64,32"}).code, kExitUsage);
  EXPECT_EQ(run({"bench", "--seq-lens", "8", "--variant", "cubic"}).code, kExitUsage);
  EXPECT_EQ(run({"bench", "--seq-lens", "8", "--trials", "2"}).code, kExitUsage);
  EXPECT_EQ(run({"nonsense"}).code, kExitUsage);
}

TEST(CliBench, UnwritableOutput) {
  const auto r = run({"bench", "--seq-lens", "8", "--d", "4", "--out",
                      "/nonexistent-dir/x/bench.csv"});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_NE(r.err.find("cannot open"), std::string::npos);
}

TEST(CliFlops, Presets) {
  const auto r3 = run({"flops", "--preset", "wan-480p-3f"});
  ASSERT_EQ(r3.code, kExitOk) << r3.err;
  const double t3 = nlohmann::json::parse(r3.out).at("tflops").get<double>();
  EXPECT_NEAR(t3, 0.77, 0.25 * 0.77);
  const auto rq = run({"flops", "--preset", "wan-320p-quad"});
  const double tq = nlohmann::json::parse(rq.out).at("tflops").get<double>();
  EXPECT_NEAR(tq, 1.21, 0.25 * 1.21);
}

TEST(CliFlops, UnknownPresetListsNames) {
  const auto r = run({"flops", "--preset", "unknown"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("wan-320p-quad"), std::string::npos);
  EXPECT_NE(r.err.find("wan-480p-3f"), std::string::npos);
}

TEST(CliFlops, ManualSpecAndCsv) {
  const auto r = run({"flops", "--kind", "hla", "--tokens", "4096", "--heads", "2",
                      "--head-dim", "64", "--d-phi", "4", "--factors", "3", "--format", "csv"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.rfind("component,flops\n", 0), 0u);
  const auto c = run({"flops", "--preset", "wan-320p-3f", "--crossover"});
  EXPECT_TRUE(nlohmann::json::parse(c.out).at("crossover_tokens").is_number());
}

TEST(CliDistill, WritesLossCsv) {
  const auto r = run({"distill", "--steps", "2", "--tokens", "8", "--batch", "1",
                      "--head-dim", "4", "--d-phi", "2", "--factors", "2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"step", "loss", "grad_norm"}));
}

}  // namespace
}  // namespace hla::tools
