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
#include <numbers>

#include "hla/error.hpp"
#include "hla/feature_maps.hpp"
#include "hla/weight_bundle.hpp"
#include "oracles.hpp"

namespace hla {
namespace {

using testing::random_tensor;
using testing::TensorD;

FeatureMapParams<double> perturbed(const FeatureMapShape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto p = init_feature_map<double>(shape, rng);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (auto* t : p.parameters())
    for (auto& e : t->values()) e += u(rng);
  return p;
}

TEST(FeatureMap, ZeroWeightsWithReluGiveZeros) {
  auto p = FeatureMapParams<double>::zeros({4, 4, 3, true, false});
  std::mt19937_64 rng(1);
  const auto y = phi_forward(p, random_tensor({2, 5, 4}, -1, 1, rng));
  for (double e : y.values()) EXPECT_EQ(e, 0.0);
}

TEST(FeatureMap, IdentityWeightsAtZeroInput) {
  auto p = FeatureMapParams<double>::zeros({3, 3, 3, false, false});
  for (std::size_t i = 0; i < 3; ++i) {
    p.w1.at({i, i}) = 1;
    p.w2.at({i, i}) = 1;
  }
  const auto y = phi_forward(p, TensorD({1, 3}));
  for (double e : y.values()) EXPECT_EQ(e, 0.0);
}

TEST(FeatureMap, MatchesScalarOracle) {
  for (bool ln : {false, true}) {
    for (bool relu : {false, true}) {
      const auto p = perturbed({6, 5, 4, relu, ln}, 7);
      std::mt19937_64 rng(2);
      const auto x = random_tensor({2, 3, 7, 6}, -2, 2, rng);
      EXPECT_LE(testing::rel_err(phi_forward(p, x), testing::oracle_mlp(p, x), 1e-300), 1e-12)
          << "layernorm " << ln << " relu " << relu;
    }
  }
}

TEST(FeatureMap, ReluOutputIsNonnegative) {
  const auto p = perturbed({8, 8, 6, true, false}, 3);
  std::mt19937_64 rng(4);
  for (double e : phi_forward(p, random_tensor({64, 8}, -5, 5, rng)).values()) {
    EXPECT_GE(e, 0.0);
  }
}

TEST(FeatureMap, InitializationBounds) {
  std::mt19937_64 rng(0);
  const auto p = init_feature_map<double>({128, 128, 6, true, true}, rng);
  const double bound = 1.0 / std::sqrt(128.0);
  for (double e : p.w1.values()) EXPECT_LE(std::abs(e), bound);
  for (double e : p.b1.values()) EXPECT_EQ(e, 0.0);
  for (double e : p.ln_gamma.values()) EXPECT_EQ(e, 1.0);
  for (double e : p.ln_beta.values()) EXPECT_EQ(e, 0.0);
  std::mt19937_64 again(0);
  EXPECT_EQ(init_feature_map<double>({128, 128, 6, true, true}, again).w2, p.w2);
}

TEST(FeatureMap, DimensionMismatch) {
  const auto p = perturbed({4, 4, 2, true, false}, 1);
  EXPECT_THROW(phi_forward(p, TensorD({3, 5})), DimensionError);
}

TEST(FeatureMapBackward, ZeroUpstreamGivesZeroGradients) {
  const auto p = perturbed({4, 3, 2, false, true}, 5);
  std::mt19937_64 rng(6);
  const auto x = random_tensor({3, 4}, -1, 1, rng);
  auto g = FeatureMapParams<double>::zeros_like(p);
  const auto gx = phi_backward(p, x, TensorD({3, 2}), g);
  for (double e : gx.values()) EXPECT_EQ(e, 0.0);
  for (auto* t : g.parameters())
    for (double e : t->values()) EXPECT_EQ(e, 0.0);
}

TEST(FeatureMapBackward, AffineDegenerateCase) {
  // w2 = I and b2 = 0 leave only GELU(x w1 + b1); with a large positive
  // pre-activation GELU is the identity up to rounding, so grad_w1 = x^T g.
  auto p = FeatureMapParams<double>::zeros({2, 2, 2, false, false});
  p.w1 = TensorD({2, 2}, std::vector<double>{1, 0, 0, 1});
  p.b1 = TensorD({2}, 50.0);
  p.w2 = TensorD({2, 2}, std::vector<double>{1, 0, 0, 1});
  const TensorD x({1, 2}, std::vector<double>{0.5, -0.25});
  const TensorD go({1, 2}, std::vector<double>{2.0, 3.0});
  auto g = FeatureMapParams<double>::zeros_like(p);
  phi_backward(p, x, go, g);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      EXPECT_NEAR(g.w1.at({i, j}), x[i] * go[j], 1e-12);
}

TEST(FeatureMapBackward, FiniteDifferencesEveryCoordinate) {
  for (bool ln : {false, true}) {
    auto p = perturbed({4, 5, 3, false, ln}, 8);
    std::mt19937_64 rng(9);
    auto x = random_tensor({2, 3, 4}, -1, 1, rng);
    const auto w = random_tensor({2, 3, 3}, -1, 1, rng);
    auto loss = [&] { return testing::weighted_sum(phi_forward(p, x), w); };
    auto g = FeatureMapParams<double>::zeros_like(p);
    const auto gx = phi_backward(p, x, w, g);
    EXPECT_LE(testing::fd_check_all(x, gx, loss), 1e-6);
    auto ps = p.parameters();
    auto gs = g.parameters();
    for (std::size_t i = 0; i < ps.size(); ++i) {
      EXPECT_LE(testing::fd_check_all(*ps[i], *gs[i], loss), 1e-6) << "param " << i;
    }
  }
}

TEST(Gelu, ExactErfForm) {
  EXPECT_EQ(gelu(0.0), 0.0);
  EXPECT_NEAR(gelu(1.0), 0.8413447460685429, 1e-15);
  const double h = 1e-6;
  for (double x : {-2.0, -0.3, 0.0, 0.7, 3.0}) {
    EXPECT_NEAR(gelu_derivative(x), (gelu(x + h) - gelu(x - h)) / (2 * h), 1e-8);
  }
}

TEST(Rope, PositionZeroIsIdentity) {
  std::mt19937_64 rng(1);
  const auto x = random_tensor({1, 1, 1, 8}, -1, 1, rng);
  EXPECT_EQ(apply_rope(x, RopeConfig{8, kDefaultRopeBase, {}}), x);
}

TEST(Rope, UnitRotation) {
  // Pair 0 turns by p radians and pair 1 by p / sqrt(base) when d = 4.
  const RopeConfig cfg{4, 10000.0, {1, 2}};
  const TensorD x({2, 4}, std::vector<double>{1, 0, 1, 0, 1, 0, 0, 1});
  const TensorD y = apply_rope(x, cfg);
  EXPECT_NEAR(y[0], std::cos(1.0), 1e-12);
  EXPECT_NEAR(y[1], std::sin(1.0), 1e-12);
  EXPECT_NEAR(y[2], std::cos(0.01), 1e-12);
  EXPECT_NEAR(y[3], std::sin(0.01), 1e-12);
  // (0, 1) at angle 0.02 -> (-sin, cos)
  EXPECT_NEAR(y[6], -std::sin(0.02), 1e-12);
  EXPECT_NEAR(y[7], std::cos(0.02), 1e-12);
}

TEST(Rope, PreservesPairNorms) {
  std::mt19937_64 rng(2);
  const auto x = random_tensor({2, 3, 17, 16}, -1, 1, rng);
  const auto y = apply_rope(x, RopeConfig{16, kDefaultRopeBase, {}});
  for (std::size_t i = 0; i < x.size(); i += 2) {
    const double a = std::hypot(x[i], x[i + 1]);
    const double b = std::hypot(y[i], y[i + 1]);
    EXPECT_LE(std::abs(a - b) / a, 1e-12);
  }
}

TEST(Rope, BackwardIsAdjoint) {
  std::mt19937_64 rng(3);
  const RopeConfig cfg{8, kDefaultRopeBase, {}};
  const auto x = random_tensor({1, 2, 5, 8}, -1, 1, rng);
  const auto g = random_tensor({1, 2, 5, 8}, -1, 1, rng);
  // <R x, g> == <x, R^T g>
  EXPECT_NEAR(testing::weighted_sum(apply_rope(x, cfg), g),
              testing::weighted_sum(x, rope_backward(g, cfg)), 1e-12);
}

TEST(Rope, OddHeadDimRejected) {
  EXPECT_THROW(apply_rope(TensorD({1, 3}), RopeConfig{3, kDefaultRopeBase, {}}), DimensionError);
  EXPECT_THROW(apply_rope(TensorD({1, 4}), RopeConfig{4, 1.0, {}}), ConfigError);
}

TEST(ScaleQueries, Examples) {
  std::mt19937_64 rng(4);
  const auto q = random_tensor({2, 4}, -1, 1, rng);
  EXPECT_EQ(scale_queries(q, 1.0), q);
  const auto h = scale_queries(q, 0.5);
  for (std::size_t i = 0; i < q.size(); ++i) EXPECT_EQ(h[i], 0.5 * q[i]);
  EXPECT_NEAR(default_query_scale(128), 0.08838834764831845, 1e-16);
  EXPECT_THROW(scale_queries(q, 0.0), ConfigError);
  EXPECT_THROW(scale_queries(q, std::nan("")), ConfigError);
}

TEST(WeightBundle, RoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "hla_bundle_test";
  std::filesystem::remove_all(dir);
  WeightBundle<double> bundle;
  bundle["phi_q"] = perturbed({4, 4, 2, true, false}, 1);
  bundle["phi_v1"] = perturbed({4, 4, 4, false, true}, 2);
  save_weight_bundle(dir, bundle);
  const auto back = load_weight_bundle<double>(dir);
  ASSERT_EQ(back.size(), 2u);
  for (const auto& [role, p] : bundle) {
    const auto& q = back.at(role);
    EXPECT_EQ(q.relu_output, p.relu_output);
    EXPECT_EQ(q.layernorm, p.layernorm);
    auto a = p.parameters();
    auto b = q.parameters();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(*a[i], *b[i]);
  }
  EXPECT_THROW(load_weight_bundle<float>(dir), FormatError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace hla
