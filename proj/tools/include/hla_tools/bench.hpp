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

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace hla::tools {

inline constexpr const char* kBenchCsvHeader =
    "variant,N,d,d_phi,F,wall_ns,flops,checksum";

/// One timed configuration. wall_ns is the median over the timed trials.
struct BenchRow {
  std::string variant;
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t d_phi = 0;
  std::size_t factors = 0;
  double wall_ns = 0;
  double flops = 0;
  double checksum = 0;
};

struct BenchConfig {
  std::vector<std::string> variants{"hla3"};
  std::vector<std::size_t> seq_lens;
  std::size_t d = 64;
  std::size_t d_phi = 4;
  std::size_t factors = 3;  // used by the "hlaF" variant
  std::size_t trials = 3;
  std::uint64_t seed = 0;

  /// Throws ConfigError: unknown variant, empty or non-ascending lengths,
  /// fewer than 3 trials.
  void validate() const;
};

std::vector<std::string> bench_variants();

/// Single-sample, single-head kernel run with one untimed warm-up.
BenchRow bench_one(const std::string& variant, std::size_t n,
                   const BenchConfig& cfg);
std::vector<BenchRow> run_bench(const BenchConfig& cfg);

void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows);

}  // namespace hla::tools
