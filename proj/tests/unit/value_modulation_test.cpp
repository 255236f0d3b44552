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

#include "hla/error.hpp"
#include "hla/value_modulation.hpp"
#include "oracles.hpp"

namespace hla {
namespace {

using testing::random_tensor;
using testing::TensorD;

FeatureMapParams<double> gate(std::uint64_t seed, bool ln = true) {
  std::mt19937_64 rng(seed);
  auto p = init_feature_map<double>({4, 4, 4, false, ln}, rng);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (auto* t : p.parameters())
    for (auto& e : t->values()) e += u(rng);
  return p;
}

TEST(Modulate, ZeroGatesArePureResidual) {
  std::mt19937_64 rng(1);
  const auto t = random_tensor({1, 2, 3, 4}, -1, 1, rng);
  const auto v = random_tensor({1, 2, 3, 4}, -1, 1, rng);
  const auto z = FeatureMapParams<double>::zeros({4, 4, 4, false, false});
  EXPECT_EQ(modulate(t, v, z, z), t);
  // p1 zeroed alone is enough.
  EXPECT_EQ(modulate(t, v, z, gate(2)), t);
}

TEST(Modulate, ZeroInputZeroBias) {
  auto p1 = gate(3, false);
  p1.b1.fill(0);
  p1.b2.fill(0);
  std::mt19937_64 rng(2);
  const auto out = modulate(TensorD({1, 1, 3, 4}), random_tensor({1, 1, 3, 4}, -1, 1, rng),
                            p1, gate(4));
  for (double e : out.values()) EXPECT_EQ(e, 0.0);
}

TEST(Modulate, MatchesComposition) {
  std::mt19937_64 rng(5);
  const auto t = random_tensor({2, 2, 5, 4}, -1, 1, rng);
  const auto v = random_tensor({2, 2, 5, 4}, -1, 1, rng);
  const auto p1 = gate(6), p2 = gate(7);
  const auto out = modulate(t, v, p1, p2);
  const auto a = testing::oracle_mlp(p1, t), b = testing::oracle_mlp(p2, v);
  TensorD ref(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) ref[i] = t[i] + a[i] * b[i];
  EXPECT_LE(testing::rel_err(out, ref, 1e-12), 1e-12);
  // Residual guarantee uses the library's own maps bit for bit.
  const auto pa = phi_forward(p1, t), pb = phi_forward(p2, v);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(out[i] - t[i], (t[i] + pa[i] * pb[i]) - t[i]);
}

TEST(Modulate, NoSquashing) {
  auto p1 = FeatureMapParams<double>::zeros({2, 2, 2, false, false});
  auto p2 = p1;
  p1.b2.fill(10.0);
  p2.b2.fill(10.0);
  const TensorD t({1, 2}, 0.0), v({1, 2}, 0.0);
  const auto out = modulate(t, v, p1, p2);
  EXPECT_GT(std::abs(out[0] - t[0]), 1.0);
}

TEST(Modulate, Contracts) {
  const TensorD t({1, 1, 2, 4});
  auto relu = gate(8);
  relu.relu_output = true;
  EXPECT_THROW(modulate(t, t, relu, gate(9)), ContractError);
  EXPECT_THROW(modulate(t, TensorD({1, 1, 3, 4}), gate(1), gate(2)), DimensionError);
  std::mt19937_64 rng(0);
  const auto wide = init_feature_map<double>({4, 4, 3, false, false}, rng);
  EXPECT_THROW(modulate(t, t, wide, gate(2)), DimensionError);
}

TEST(ModulateBackward, ResidualPath) {
  std::mt19937_64 rng(10);
  const auto t = random_tensor({1, 1, 3, 4}, -1, 1, rng);
  const auto v = random_tensor({1, 1, 3, 4}, -1, 1, rng);
  const auto go = random_tensor({1, 1, 3, 4}, -1, 1, rng);
  const auto z = FeatureMapParams<double>::zeros({4, 4, 4, false, false});
  auto g1 = z, g2 = z;
  const auto g = modulate_backward(t, v, z, z, go, g1, g2);
  EXPECT_EQ(g.t, go);
  for (double e : g.v.values()) EXPECT_EQ(e, 0.0);
}

TEST(ModulateBackward, FiniteDifferencesEveryCoordinate) {
  std::mt19937_64 rng(11);
  auto t = random_tensor({1, 2, 3, 4}, -1, 1, rng);
  auto v = random_tensor({1, 2, 3, 4}, -1, 1, rng);
  const auto w = random_tensor({1, 2, 3, 4}, -1, 1, rng);
  auto p1 = gate(12), p2 = gate(13);
  auto loss = [&] { return testing::weighted_sum(modulate(t, v, p1, p2), w); };
  auto g1 = FeatureMapParams<double>::zeros_like(p1);
  auto g2 = FeatureMapParams<double>::zeros_like(p2);
  const auto g = modulate_backward(t, v, p1, p2, w, g1, g2);
  EXPECT_LE(testing::fd_check_all(t, g.t, loss), 1e-6);
  EXPECT_LE(testing::fd_check_all(v, g.v, loss), 1e-6);
  for (auto [p, gp] : {std::pair{&p1, &g1}, std::pair{&p2, &g2}}) {
    auto a = p->parameters();
    auto b = gp->parameters();
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_LE(testing::fd_check_all(*a[i], *b[i], loss), 1e-6);
    }
  }
}

}  // namespace
}  // namespace hla
