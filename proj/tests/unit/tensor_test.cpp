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

#include "hla/error.hpp"
#include "hla/tensor.hpp"
#include "hla/tensor_io.hpp"
#include "oracles.hpp"

namespace hla {
namespace {

TEST(Tensor, ShapeAndIndexing) {
  Tensor<double> t({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.rank(), 3u);
  EXPECT_EQ(t.dim(-1), 4u);
  t.at({1, 2, 3}) = 5.0;
  EXPECT_EQ(t[23], 5.0);
  EXPECT_EQ(t.offset({1, 0, 2}), 14u);
  EXPECT_THROW(t.at({2, 0, 0}), DimensionError);
  EXPECT_THROW(t.at({0, 0}), DimensionError);
  EXPECT_THROW(t.dim(3), DimensionError);
}

TEST(Tensor, ZeroExtentIsRejected) {
  EXPECT_THROW(Tensor<float>({2, 0, 3}), DimensionError);
  EXPECT_THROW(Tensor<double>({2}, std::vector<double>{1, 2, 3}), DimensionError);
}

TEST(Tensor, ScalarDefault) {
  Tensor<double> s;
  EXPECT_EQ(s.rank(), 0u);
  EXPECT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0], 0.0);
}

TEST(Tensor, ReshapeKeepsBuffer) {
  Tensor<double> t({2, 6}, std::vector<double>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  const double* before = t.data();
  t.reshape({3, 4});
  EXPECT_EQ(t.data(), before);
  EXPECT_EQ(t.at({2, 1}), 9.0);
  EXPECT_THROW(t.reshape({5}), DimensionError);
}

TEST(Tensor, OuterProductMatchesLoops) {
  const std::vector<std::vector<double>> vs{{1, 2, -3}, {3, 4, 5}, {-1, 2, 0.5}};
  const auto t = outer_product(vs);
  ASSERT_EQ(t.shape(), (Shape{3, 3, 3}));
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t c = 0; c < 3; ++c)
        EXPECT_EQ(t.at({a, b, c}), vs[0][a] * vs[1][b] * vs[2][c]);
  EXPECT_THROW(outer_product(std::vector<std::vector<double>>{{1, 2}, {3, 4, 5}}), DimensionError);
}

TEST(Tensor, ContractFirstAxis) {
  // out[s, j] = sum_n t[n, s] m[n, j]
  std::mt19937_64 rng(3);
  const auto t = testing::random_tensor({4, 3}, -1, 1, rng);
  const auto m = testing::random_tensor({4, 2}, -1, 1, rng);
  const auto out = contract_first_axis(t, m);
  ASSERT_EQ(out.shape(), (Shape{3, 2}));
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t j = 0; j < 2; ++j) {
      double acc = 0;
      for (std::size_t n = 0; n < 4; ++n) acc += t.at({n, s}) * m.at({n, j});
      EXPECT_NEAR(out.at({s, j}), acc, 1e-15);
    }
  EXPECT_THROW(contract_first_axis(t, Tensor<double>({3, 2})), DimensionError);
}

TEST(Tensor, HadamardAndReductions) {
  Tensor<double> a({2, 2}, std::vector<double>{1, 2, 3, 4});
  Tensor<double> b({2, 2}, std::vector<double>{2, 2, 2, 2});
  EXPECT_EQ(hadamard(a, b), (Tensor<double>({2, 2}, std::vector<double>{2, 4, 6, 8})));
  EXPECT_THROW(hadamard(a, Tensor<double>({4})), DimensionError);
  EXPECT_EQ(reduce_all(a), 10.0);
  const auto rows = reduce_trailing(a, 1);
  EXPECT_EQ(rows, (Tensor<double>({2}, std::vector<double>{3, 7})));
  EXPECT_THROW(reduce_trailing(a, 2), DimensionError);
}

TEST(Tensor, MaxRelativeError) {
  Tensor<double> a({2}, std::vector<double>{1.0, 2.0});
  Tensor<double> b({2}, std::vector<double>{1.0, 2.2});
  EXPECT_NEAR(max_relative_error(a, b), 0.2 / 2.2, 1e-15);
  EXPECT_THROW(max_relative_error(a, Tensor<double>({3})), DimensionError);
}

TEST(Tensor, OuterProductSmallCases) {
  const auto basis = outer_product(std::vector<std::vector<double>>{{1, 0}, {1, 0}});
  EXPECT_EQ(basis, (Tensor<double>({2, 2}, std::vector<double>{1, 0, 0, 0})));
  const auto scalar = outer_product(std::vector<std::vector<double>>{{2}, {3}, {4}});
  ASSERT_EQ(scalar.size(), 1u);
  EXPECT_EQ(scalar[0], 24.0);
}

TEST(Tensor, ContractSmallCases) {
  Tensor<double> t({1, 2}, std::vector<double>{3, -1});
  Tensor<double> m({1, 1}, std::vector<double>{2});
  EXPECT_EQ(contract_first_axis(t, m), (Tensor<double>({2, 1}, std::vector<double>{6, -2})));
  Tensor<double> eye({2, 2}, std::vector<double>{1, 0, 0, 1});
  Tensor<double> ones({2, 1}, 1.0);
  EXPECT_EQ(contract_first_axis(eye, ones), (Tensor<double>({2, 1}, std::vector<double>{1, 1})));
}

TEST(Tensor, ContractRandomThreeAxes) {
  std::mt19937_64 rng(11);
  const auto t = testing::random_tensor({4, 3, 3}, -1, 1, rng);
  const auto m = testing::random_tensor({4, 2}, -1, 1, rng);
  const auto out = contract_first_axis(t, m);
  ASSERT_EQ(out.shape(), (Shape{3, 3, 2}));
  Tensor<double> ref({3, 3, 2});
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t j = 0; j < 2; ++j)
        for (std::size_t n = 0; n < 4; ++n) ref.at({a, b, j}) += t.at({n, a, b}) * m.at({n, j});
  EXPECT_LE(testing::rel_err(out, ref), 1e-12);
}

TEST(Tensor, HadamardIdentities) {
  std::mt19937_64 rng(5);
  const auto a = testing::random_tensor({3, 4}, -1, 1, rng);
  EXPECT_EQ(hadamard(a, Tensor<double>::ones({3, 4})), a);
  EXPECT_EQ(hadamard(a, Tensor<double>::zeros({3, 4})), Tensor<double>::zeros({3, 4}));
  const auto b = testing::random_tensor({3, 4}, -1, 1, rng);
  const auto c = hadamard(a, b);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(c[i], a[i] * b[i]);
}

TEST(Tensor, ReductionExamples) {
  EXPECT_EQ(reduce_all(Tensor<double>::ones({2, 3})), 6.0);
  std::mt19937_64 rng(9);
  const auto t = testing::random_tensor({5, 3, 3}, -1, 1, rng);
  const auto r = reduce_trailing(t, 2);
  ASSERT_EQ(r.shape(), (Shape{5}));
  double total = 0;
  for (std::size_t n = 0; n < 5; ++n) {
    double s = 0;
    for (std::size_t i = 0; i < 9; ++i) s += t[n * 9 + i];
    EXPECT_EQ(r[n], s);
    total += s;
  }
  double seq = 0;
  for (double e : t.values()) seq += e;
  EXPECT_EQ(reduce_all(t), seq);
  EXPECT_DOUBLE_EQ(total, seq);
}

TEST(Tensor, OuterProductDotIdentity) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t f = 2; f <= 4; ++f) {
    for (std::size_t d = 2; d <= 6; ++d) {
      std::vector<double> q(d);
      for (auto& e : q) e = u(rng);
      std::vector<std::vector<double>> qs(f, q), rs(f, std::vector<double>(d));
      double lhs = 1;
      for (auto& r : rs) {
        double dot = 0;
        for (std::size_t i = 0; i < d; ++i) dot += q[i] * (r[i] = u(rng));
        lhs *= dot;
      }
      const double rhs = reduce_all(hadamard(outer_product(qs), outer_product(rs)));
      EXPECT_LE(std::abs(lhs - rhs) / std::abs(lhs), 1e-12);
    }
  }
}

TEST(TensorIo, RoundTripBothPrecisions) {
  std::mt19937_64 rng(1);
  const auto d = testing::random_tensor({2, 3, 5}, -1, 1, rng);
  std::stringstream ss;
  write_tensor(ss, d);
  EXPECT_EQ(read_tensor<double>(ss), d);

  Tensor<float> f({4}, std::vector<float>{1.5f, -2.f, 0.f, 3.25f});
  std::stringstream fs;
  write_tensor(fs, f);
  const auto any = read_any_tensor(fs);
  ASSERT_TRUE(std::holds_alternative<Tensor<float>>(any));
  EXPECT_EQ(std::get<Tensor<float>>(any), f);
}

TEST(TensorIo, PrecisionMismatchAndTruncation) {
  Tensor<float> f({3}, 1.0f);
  std::stringstream ss;
  write_tensor(ss, f);
  EXPECT_THROW(read_tensor<double>(ss), FormatError);

  std::stringstream full;
  write_tensor(full, Tensor<double>({8}, 2.0));
  std::string bytes = full.str();
  std::stringstream cut(bytes.substr(0, bytes.size() - 5));
  EXPECT_THROW(read_tensor<double>(cut), FormatError);
}

TEST(TensorIo, Files) {
  const auto dir = std::filesystem::temp_directory_path() / "hla_tensor_io_test";
  std::filesystem::create_directories(dir);
  const Tensor<double> t({2, 2}, std::vector<double>{1, 2, 3, 4});
  save_tensor(dir / "t.bin", t);
  EXPECT_EQ(load_tensor<double>(dir / "t.bin"), t);
  EXPECT_THROW(load_tensor<double>(dir / "missing.bin"), Error);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace hla
