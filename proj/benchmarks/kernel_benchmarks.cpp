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

// Kernel timings over sequence length. Single sample, single head; the
// feature rows are random nonnegative values so no network runs here.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "hla/hla_kernel.hpp"
#include "hla/reference_attention.hpp"
#include "hla/streaming.hpp"

namespace {

constexpr std::size_t kHeadDim = 64;
constexpr std::size_t kDPhi = 4;

hla::Tensor<double> random(hla::Shape shape, double lo, double hi,
                           std::uint64_t seed) {
  hla::Tensor<double> t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& e : t.values()) e = dist(rng);
  return t;
}

void BM_Softmax(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto q = random({1, 1, n, kHeadDim}, -1, 1, 1);
  const auto k = random({1, 1, n, kHeadDim}, -1, 1, 2);
  const auto v = random({1, 1, n, kHeadDim}, -1, 1, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hla::softmax_attention(q, k, v));
  }
  state.SetComplexityN(state.range(0));
}

void run_hla(benchmark::State& state, std::size_t factors, bool causal) {
  const auto n = static_cast<std::size_t>(state.range(0));
  hla::HlaConfig cfg;
  cfg.factors = factors;
  cfg.d_phi = kDPhi;
  cfg.head_dim = kHeadDim;
  cfg.causal = causal;
  const auto pq = random({1, 1, n, kDPhi}, 0, 1, 1);
  std::vector<hla::Tensor<double>> pk;
  for (std::size_t f = 0; f < factors; ++f) {
    pk.push_back(random({1, 1, n, kDPhi}, 0, 1, 10 + f));
  }
  const auto v = random({1, 1, n, kHeadDim}, -1, 1, 3);
  for (auto _ : state) {
    if (causal) {
      benchmark::DoNotOptimize(hla::causal_forward<double>(cfg, pq, pk, v));
    } else {
      benchmark::DoNotOptimize(hla::hla_forward<double>(cfg, pq, pk, v));
    }
  }
  state.SetComplexityN(state.range(0));
}

void BM_Hla2(benchmark::State& state) { run_hla(state, 2, false); }
void BM_Hla3(benchmark::State& state) { run_hla(state, 3, false); }
void BM_Hla3Causal(benchmark::State& state) { run_hla(state, 3, true); }

}  // namespace

BENCHMARK(BM_Softmax)->RangeMultiplier(2)->Range(256, 2048)->Complexity();
BENCHMARK(BM_Hla2)->RangeMultiplier(2)->Range(256, 8192)->Complexity();
BENCHMARK(BM_Hla3)->RangeMultiplier(2)->Range(256, 8192)->Complexity();
BENCHMARK(BM_Hla3Causal)->RangeMultiplier(2)->Range(256, 8192)->Complexity();

BENCHMARK_MAIN();
