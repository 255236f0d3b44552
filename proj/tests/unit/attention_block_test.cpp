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

#include "hla/attention_block.hpp"
#include "hla/error.hpp"
#include "hla/value_modulation.hpp"
#include "oracles.hpp"

namespace hla {
namespace {

using testing::random_tensor;
using testing::TensorD;

BlockShape small_shape(std::size_t heads = 2) {
  BlockShape s;
  s.model_dim = 4 * heads;
  s.heads = heads;
  s.factors = 2;
  s.d_phi = 3;
  return s;
}

TEST(Block, DefaultShapeContract) {
  std::mt19937_64 rng(0);
  const auto p = init_block_params<double>(BlockShape{}, rng);
  const auto x = random_tensor({2, 64, 1536}, -1, 1, rng);
  EXPECT_EQ(hla_attention_block(p, x).shape(), (Shape{2, 64, 1536}));
}

TEST(Block, ZeroProjectionsGiveOutputBias) {
  std::mt19937_64 rng(1);
  auto p = init_block_params<double>(small_shape(), rng);
  for (auto* l : {&p.to_q, &p.to_k, &p.to_v}) {
    l->weight.fill(0);
    l->bias.fill(0);
  }
  for (std::size_t j = 0; j < 8; ++j) p.to_out.bias[j] = 0.1 * static_cast<double>(j);
  const auto out = hla_attention_block(p, random_tensor({2, 3, 8}, -1, 1, rng));
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t j = 0; j < 8; ++j) EXPECT_DOUBLE_EQ(out[r * 8 + j], 0.1 * static_cast<double>(j));
}

TEST(Block, SingleHeadEqualsComposition) {
  std::mt19937_64 rng(2);
  auto shape = small_shape(1);
  shape.factors = 3;
  const auto p = init_block_params<double>(shape, rng);
  const auto x = random_tensor({2, 5, 4}, -1, 1, rng);
  auto heads = [](TensorD t) { return t.reshaped({t.dim(0), 1, t.dim(1), t.dim(2)}); };
  const RopeConfig rope{4, p.rope_base, {}};
  const auto q = scale_queries(apply_rope(heads(linear_forward(p.to_q, x)), rope), p.scale);
  const auto k = apply_rope(heads(linear_forward(p.to_k, x)), rope);
  const auto v = heads(linear_forward(p.to_v, x));
  std::vector<TensorD> pk;
  for (const auto& m : p.phi_k) pk.push_back(phi_forward(m, k));
  const auto t = hla_forward<double>(p.hla, phi_forward(p.phi_q, q), pk, v).out;
  const auto m = modulate(t, v, p.phi_v1, p.phi_v2);
  const auto ref = linear_forward(p.to_out, m.reshaped({2, 5, 4}));
  EXPECT_EQ(hla_attention_block(p, x), ref);
}

TEST(Block, CausalPathMatchesForwardOnly) {
  std::mt19937_64 rng(3);
  auto shape = small_shape();
  shape.causal = true;
  shape.decay = 0.9;
  const auto p = init_block_params<double>(shape, rng);
  BlockCache<double> cache;
  const auto x = random_tensor({1, 6, 8}, -1, 1, rng);
  const auto out = hla_attention_block(p, x, &cache);
  EXPECT_EQ(out.shape(), x.shape());
  // Changing the last token must not affect earlier outputs.
  auto x2 = x;
  for (std::size_t j = 0; j < 8; ++j) x2[5 * 8 + j] += 1.0;
  const auto out2 = hla_attention_block(p, x2);
  for (std::size_t i = 0; i < 5 * 8; ++i) EXPECT_DOUBLE_EQ(out[i], out2[i]);
  EXPECT_THROW(block_backward(p, cache, out), ConfigError);
}

TEST(Block, ShapeErrors) {
  std::mt19937_64 rng(4);
  const auto p = init_block_params<double>(small_shape(), rng);
  EXPECT_THROW(hla_attention_block(p, TensorD({1, 3, 6})), DimensionError);
  BlockShape bad = small_shape();
  bad.model_dim = 7;
  EXPECT_THROW(init_block_params<double>(bad, rng), ConfigError);
}

TEST(Block, SplitMergeRoundTrip) {
  std::mt19937_64 rng(5);
  const auto x = random_tensor({2, 3, 12}, -1, 1, rng);
  const auto s = split_heads(x, 3);
  EXPECT_EQ(s.shape(), (Shape{2, 3, 3, 4}));
  EXPECT_EQ(s.at({1, 2, 0, 1}), x.at({1, 0, 9}));
  EXPECT_EQ(merge_heads(s), x);
}

TEST(Block, GradientSpotCheck) {
  std::mt19937_64 rng(6);
  auto params = init_block_params<double>(small_shape(), rng);
  auto x = random_tensor({1, 4, 8}, -1, 1, rng);
  const auto w = random_tensor({1, 4, 8}, -1, 1, rng);
  BlockCache<double> cache;
  hla_attention_block(params, x, &cache);
  auto grads = block_backward(params, cache, w);
  auto loss = [&] { return testing::weighted_sum(hla_attention_block(params, x), w); };

  std::vector<TensorD*> ps = params.parameters();
  std::vector<TensorD*> gs = grads.params.parameters();
  ps.push_back(&x);
  gs.push_back(&grads.x);
  double scale = 0;
  std::size_t total = 0;
  for (auto* g : gs) {
    total += g->size();
    for (double e : g->values()) scale = std::max(scale, std::abs(e));
  }
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  double worst = 0;
  for (int c = 0; c < 50; ++c) {
    std::size_t k = pick(rng), t = 0;
    while (k >= ps[t]->size()) k -= ps[t++]->size();
    const double num = testing::central_difference(*ps[t], k, loss);
    worst = std::max(worst, testing::grad_rel_err((*gs[t])[k], num, scale));
  }
  EXPECT_LE(worst, 1e-5);
}

}  // namespace
}  // namespace hla
