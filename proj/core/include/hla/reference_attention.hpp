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

// Quadratic-cost attention used as ground truth by the tests. Nothing here
// is meant for long sequences: score matrices are capped at
// kMaxOracleSequence rows/columns.

#include <cstddef>
#include <span>
#include <vector>

#include "hla/tensor.hpp"

namespace hla {

inline constexpr std::size_t kMaxOracleSequence = 512;

/// softmax(q k^T / sqrt(d)) v for q[B,H,Nq,d], k[B,H,Nk,d], v[B,H,Nk,dv].
/// Rows are processed one at a time, so memory stays O(Nk) per row.
template <Real T>
Tensor<T> softmax_attention(const Tensor<T>& q, const Tensor<T>& k,
                            const Tensor<T>& v);

/// The normalized softmax weights [B,H,Nq,Nk].
template <Real T>
Tensor<T> softmax_scores(const Tensor<T>& q, const Tensor<T>& k);

/// phi(Q) (phi(K)^T V), each row divided by phi(q_i) . sum_j phi(k_j) + eps.
/// With eps == 0 a zero normalizer is a ContractError.
template <Real T>
Tensor<T> linear_attention(const Tensor<T>& phi_q, const Tensor<T>& phi_k,
                           const Tensor<T>& v, T eps = T{0});

template <Real T>
struct NaiveHlaResult {
  Tensor<T> out;       // [B,H,Nq,dv]
  Tensor<T> scores;    // [B,H,Nq,Nk], masked but not normalized
  Tensor<T> row_sums;  // [B,H,Nq]
};

/// Materializes A = prod_f (phi_q phi_kf^T), scales it elementwise by `mask`
/// ([Nq,Nk], optional) and returns (A V) / (rowsum(A) + eps).
template <Real T>
NaiveHlaResult<T> naive_hla(const Tensor<T>& phi_q,
                            std::span<const Tensor<T>> phi_ks,
                            const Tensor<T>& v, T eps = T{0});
template <Real T>
NaiveHlaResult<T> naive_hla(const Tensor<T>& phi_q,
                            std::span<const Tensor<T>> phi_ks,
                            const Tensor<T>& v, const Tensor<T>& mask,
                            T eps = T{0});

/// M[i][j] = decay^(i-j) for j <= i, else 0. decay == 1 gives the 0/1 causal
/// mask.
template <Real T>
Tensor<T> decay_mask(std::size_t n, T decay);

/// Number of singular values above rel_tol * sigma_max.
std::size_t numerical_rank(const Tensor<double>& matrix, double rel_tol = 1e-8);

enum class ProductKind {
  kHadamard,  // rank(A1 o A2 o ...) <= prod rank(Af)
  kMatrix,    // rank(A1 A2 ...) <= min rank(Af)
};

struct RankReport {
  std::size_t product_rank = 0;
  std::vector<std::size_t> factor_ranks;
  std::size_t bound = 0;
  bool holds = false;
};

RankReport rank_bound_check(const Tensor<double>& product,
                            std::span<const Tensor<double>> factors,
                            ProductKind kind, double rel_tol = 1e-8);

}  // namespace hla
