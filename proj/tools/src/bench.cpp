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

#include "hla_tools/bench.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>
#include <random>

#include "hla/complexity.hpp"
#include "hla/error.hpp"
#include "hla/hla_kernel.hpp"
#include "hla/reference_attention.hpp"

namespace hla::tools {

std::vector<std::string> bench_variants() {
  return {"softmax", "linear", "hla2", "hla3", "hlaF"};
}

void BenchConfig::validate() const {
  const auto known = bench_variants();
  for (const auto& v : variants) {
    if (std::find(known.begin(), known.end(), v) == known.end()) {
      throw ConfigError("bench: unknown variant '" + v + "'");
    }
  }
  if (variants.empty()) throw ConfigError("bench: no variant given");
  if (seq_lens.empty()) throw ConfigError("bench: --seq-lens is empty");
  for (std::size_t i = 0; i < seq_lens.size(); ++i) {
    if (seq_lens[i] == 0 || (i > 0 && seq_lens[i] <= seq_lens[i - 1])) {
      throw ConfigError("bench: sequence lengths must be positive and ascending");
    }
  }
  if (d == 0 || d_phi == 0) throw ConfigError("bench: d and d_phi must be > 0");
  if (factors < 2) throw ConfigError("bench: factors must be >= 2");
  if (trials < 3) throw ConfigError("bench: at least 3 trials are required");
}

namespace {

std::size_t factors_of(const std::string& variant, const BenchConfig& cfg) {
  if (variant == "hla2") return 2;
  if (variant == "hla3") return 3;
  if (variant == "hlaF") return cfg.factors;
  return 1;
}

Tensor<double> uniform(Shape shape, double lo, double hi, std::mt19937_64& rng) {
  Tensor<double> t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& e : t.values()) e = dist(rng);
  return t;
}

double kernel_flops(const std::string& variant, std::size_t n,
                    const BenchConfig& cfg) {
  ModelSpec s;
  s.tokens = n;
  s.heads = 1;
  s.head_dim = cfg.d;
  s.model_dim = cfg.d;
  s.d_phi = cfg.d_phi;
  s.factors = factors_of(variant, cfg);
  s.include_phi_mlps = false;
  s.include_projections = false;
  s.include_modulation = false;
  s.kind = variant == "softmax"  ? AttentionKind::kSoftmax
           : variant == "linear" ? AttentionKind::kLinear
                                 : AttentionKind::kHla;
  if (variant == "softmax") return flops_softmax(s).total;
  if (variant == "linear") return flops_linear(s).total;
  return flops_hla(s).total;
}

}  // namespace

BenchRow bench_one(const std::string& variant, std::size_t n,
                   const BenchConfig& cfg) {
  const std::size_t f = factors_of(variant, cfg);
  std::mt19937_64 rng(cfg.seed);
  const Tensor<double> v = uniform({1, 1, n, cfg.d}, -1, 1, rng);
  Tensor<double> q, k;
  std::vector<Tensor<double>> phi_k;
  Tensor<double> phi_q;
  HlaConfig hc;
  if (variant == "softmax") {
    q = uniform({1, 1, n, cfg.d}, -1, 1, rng);
    k = uniform({1, 1, n, cfg.d}, -1, 1, rng);
  } else {
    phi_q = uniform({1, 1, n, cfg.d_phi}, 0, 1, rng);
    const std::size_t maps = variant == "linear" ? 1 : f;
    for (std::size_t i = 0; i < maps; ++i) {
      phi_k.push_back(uniform({1, 1, n, cfg.d_phi}, 0, 1, rng));
    }
    hc.factors = std::max<std::size_t>(f, 2);
    hc.d_phi = cfg.d_phi;
    hc.head_dim = cfg.d;
    hc.validate();
  }
  auto run = [&]() -> Tensor<double> {
    if (variant == "softmax") return softmax_attention(q, k, v);
    if (variant == "linear") return linear_attention(phi_q, phi_k[0], v, 1e-6);
    return hla_forward<double>(hc, phi_q, phi_k, v).out;
  };
  Tensor<double> out = run();  // warm-up
  std::vector<double> times;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const auto start = std::chrono::steady_clock::now();
    out = run();
    const auto stop = std::chrono::steady_clock::now();
    times.push_back(std::max(
        1.0, static_cast<double>(
                 std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start)
                     .count())));
  }
  std::sort(times.begin(), times.end());
  const std::size_t m = times.size() / 2;
  const double median =
      times.size() % 2 ? times[m] : 0.5 * (times[m - 1] + times[m]);
  BenchRow row;
  row.variant = variant;
  row.n = n;
  row.d = cfg.d;
  row.d_phi = variant == "softmax" ? 0 : cfg.d_phi;
  row.factors = variant == "softmax" ? 0 : f;
  row.wall_ns = median;
  row.flops = kernel_flops(variant, n, cfg);
  row.checksum = reduce_all(out);
  return row;
}

std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
  cfg.validate();
  std::vector<BenchRow> rows;
  for (const auto& variant : cfg.variants) {
    for (std::size_t n : cfg.seq_lens) rows.push_back(bench_one(variant, n, cfg));
  }
  return rows;
}

void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << kBenchCsvHeader << '\n';
  const auto old = os.precision(17);
  for (const auto& r : rows) {
    os << r.variant << ',' << r.n << ',' << r.d << ',' << r.d_phi << ','
       << r.factors << ',' << static_cast<std::uint64_t>(r.wall_ns) << ','
       << r.flops << ',' << r.checksum << '\n';
  }
  os.precision(old);
}

}  // namespace hla::tools
