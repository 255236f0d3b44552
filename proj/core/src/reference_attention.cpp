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

#include "hla/reference_attention.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

#include "hla/detail/layout.hpp"

namespace hla {
namespace {

using detail::SeqDims;
using detail::seq_dims;

void require_same_slices(const SeqDims& a, const SeqDims& b, const char* what) {
  if (a.batch != b.batch || a.heads != b.heads) {
    throw DimensionError(std::string(what) + ": batch/head extents differ");
  }
}

void require_oracle_size(std::size_t nq, std::size_t nk) {
  if (nq > kMaxOracleSequence || nk > kMaxOracleSequence) {
    throw DimensionError("reference attention: score matrices are limited to " +
                         std::to_string(kMaxOracleSequence) + " tokens");
  }
}

template <Real T>
T dot(const T* a, const T* b, std::size_t n) {
  T acc{0};
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

// Fills `w` with the softmax weights for query row `qi`.
template <Real T>
void softmax_row(const T* qi, const T* k, std::size_t nk, std::size_t d,
                 std::vector<T>& w) {
  const T scale = T{1} / std::sqrt(static_cast<T>(d));
  T mx = -std::numeric_limits<T>::infinity();
  for (std::size_t j = 0; j < nk; ++j) {
    w[j] = dot(qi, k + j * d, d) * scale;
    mx = std::max(mx, w[j]);
  }
  T total{0};
  for (std::size_t j = 0; j < nk; ++j) {
    w[j] = std::exp(w[j] - mx);
    total += w[j];
  }
  for (std::size_t j = 0; j < nk; ++j) w[j] /= total;
}

template <Real T>
void check_softmax_inputs(const Tensor<T>& q, const Tensor<T>& k,
                          SeqDims& dq, SeqDims& dk) {
  dq = seq_dims(q, "softmax_attention q");
  dk = seq_dims(k, "softmax_attention k");
  require_same_slices(dq, dk, "softmax_attention");
  if (dq.dim != dk.dim) {
    throw DimensionError("softmax_attention: query/key dims differ");
  }
  detail::require_finite(q, "softmax_attention q");
  detail::require_finite(k, "softmax_attention k");
}

}  // namespace

template <Real T>
Tensor<T> softmax_attention(const Tensor<T>& q, const Tensor<T>& k,
                            const Tensor<T>& v) {
  SeqDims dq, dk;
  check_softmax_inputs(q, k, dq, dk);
  const SeqDims dv = seq_dims(v, "softmax_attention v");
  require_same_slices(dq, dv, "softmax_attention");
  if (dv.seq != dk.seq) {
    throw DimensionError("softmax_attention: key/value lengths differ");
  }
  detail::require_finite(v, "softmax_attention v");
  Tensor<T> out({dq.batch, dq.heads, dq.seq, dv.dim});
  std::vector<T> w(dk.seq);
  for (std::size_t s = 0; s < dq.slices(); ++s) {
    const T* qs = q.data() + s * dq.slice_size();
    const T* ks = k.data() + s * dk.slice_size();
    const T* vs = v.data() + s * dv.slice_size();
    T* os = out.data() + s * dq.seq * dv.dim;
    for (std::size_t i = 0; i < dq.seq; ++i) {
      softmax_row(qs + i * dq.dim, ks, dk.seq, dq.dim, w);
      T* o = os + i * dv.dim;
      for (std::size_t j = 0; j < dk.seq; ++j) {
        const T wj = w[j];
        const T* vj = vs + j * dv.dim;
        for (std::size_t c = 0; c < dv.dim; ++c) o[c] += wj * vj[c];
      }
    }
  }
  return out;
}

template <Real T>
Tensor<T> softmax_scores(const Tensor<T>& q, const Tensor<T>& k) {
  SeqDims dq, dk;
  check_softmax_inputs(q, k, dq, dk);
  require_oracle_size(dq.seq, dk.seq);
  Tensor<T> scores({dq.batch, dq.heads, dq.seq, dk.seq});
  std::vector<T> w(dk.seq);
  for (std::size_t s = 0; s < dq.slices(); ++s) {
    for (std::size_t i = 0; i < dq.seq; ++i) {
      softmax_row(q.data() + s * dq.slice_size() + i * dq.dim,
                  k.data() + s * dk.slice_size(), dk.seq, dq.dim, w);
      std::copy(w.begin(), w.end(),
                scores.data() + (s * dq.seq + i) * dk.seq);
    }
  }
  return scores;
}

template <Real T>
Tensor<T> linear_attention(const Tensor<T>& phi_q, const Tensor<T>& phi_k,
                           const Tensor<T>& v, T eps) {
  const SeqDims dq = seq_dims(phi_q, "linear_attention phi_q");
  const SeqDims dk = seq_dims(phi_k, "linear_attention phi_k");
  const SeqDims dv = seq_dims(v, "linear_attention v");
  require_same_slices(dq, dk, "linear_attention");
  require_same_slices(dq, dv, "linear_attention");
  if (dq.dim != dk.dim || dk.seq != dv.seq) {
    throw DimensionError("linear_attention: inconsistent extents");
  }
  detail::require_nonnegative(phi_q, "linear_attention phi_q");
  detail::require_nonnegative(phi_k, "linear_attention phi_k");
  const std::size_t p = dq.dim, d = dv.dim;
  Tensor<T> out({dq.batch, dq.heads, dq.seq, d});
  std::vector<T> context(p * d), ksum(p);
  for (std::size_t s = 0; s < dq.slices(); ++s) {
    std::fill(context.begin(), context.end(), T{0});
    std::fill(ksum.begin(), ksum.end(), T{0});
    const T* ks = phi_k.data() + s * dk.slice_size();
    const T* vs = v.data() + s * dv.slice_size();
    for (std::size_t j = 0; j < dk.seq; ++j) {
      for (std::size_t a = 0; a < p; ++a) {
        const T ka = ks[j * p + a];
        ksum[a] += ka;
        for (std::size_t c = 0; c < d; ++c) context[a * d + c] += ka * vs[j * d + c];
      }
    }
    for (std::size_t i = 0; i < dq.seq; ++i) {
      const T* qi = phi_q.data() + s * dq.slice_size() + i * p;
      const T norm = dot(qi, ksum.data(), p);
      if (norm == T{0} && eps == T{0}) {
        throw ContractError("linear_attention: zero normalizer for row " +
                            std::to_string(i));
      }
      T* o = out.data() + (s * dq.seq + i) * d;
      for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t c = 0; c < d; ++c) o[c] += qi[a] * context[a * d + c];
      }
      for (std::size_t c = 0; c < d; ++c) o[c] /= (norm + eps);
    }
  }
  return out;
}

namespace {

template <Real T>
NaiveHlaResult<T> naive_hla_impl(const Tensor<T>& phi_q,
                                 std::span<const Tensor<T>> phi_ks,
                                 const Tensor<T>& v, const Tensor<T>* mask,
                                 T eps) {
  if (phi_ks.size() < 2) {
    throw ConfigError("naive_hla: need at least two factors, got " +
                      std::to_string(phi_ks.size()));
  }
  const SeqDims dq = seq_dims(phi_q, "naive_hla phi_q");
  const SeqDims dv = seq_dims(v, "naive_hla v");
  require_same_slices(dq, dv, "naive_hla");
  for (const auto& k : phi_ks) {
    const SeqDims dk = seq_dims(k, "naive_hla phi_k");
    require_same_slices(dq, dk, "naive_hla");
    if (dk.dim != dq.dim || dk.seq != dv.seq) {
      throw DimensionError("naive_hla: phi_k shape " +
                           shape_to_string(k.shape()) + " inconsistent");
    }
    detail::require_nonnegative(k, "naive_hla phi_k");
  }
  detail::require_nonnegative(phi_q, "naive_hla phi_q");
  const std::size_t nq = dq.seq, nk = dv.seq, p = dq.dim, d = dv.dim;
  require_oracle_size(nq, nk);
  if (mask) {
    if (mask->shape() != Shape{nq, nk}) {
      throw DimensionError("naive_hla: mask must be [" + std::to_string(nq) +
                           "," + std::to_string(nk) + "]");
    }
    detail::require_nonnegative(*mask, "naive_hla mask");
  }
  NaiveHlaResult<T> r{Tensor<T>({dq.batch, dq.heads, nq, d}),
                      Tensor<T>({dq.batch, dq.heads, nq, nk}),
                      Tensor<T>({dq.batch, dq.heads, nq})};
  for (std::size_t s = 0; s < dq.slices(); ++s) {
    T* a = r.scores.data() + s * nq * nk;
    for (std::size_t i = 0; i < nq; ++i) {
      const T* qi = phi_q.data() + s * dq.slice_size() + i * p;
      for (std::size_t j = 0; j < nk; ++j) {
        T prod{1};
        for (const auto& k : phi_ks) {
          prod *= dot(qi, k.data() + s * nk * p + j * p, p);
        }
        if (mask) prod *= (*mask)[i * nk + j];
        a[i * nk + j] = prod;
      }
    }
    const T* vs = v.data() + s * dv.slice_size();
    for (std::size_t i = 0; i < nq; ++i) {
      T eta{0};
      T* o = r.out.data() + (s * nq + i) * d;
      for (std::size_t j = 0; j < nk; ++j) {
        const T aij = a[i * nk + j];
        eta += aij;
        for (std::size_t c = 0; c < d; ++c) o[c] += aij * vs[j * d + c];
      }
      r.row_sums[s * nq + i] = eta;
      for (std::size_t c = 0; c < d; ++c) o[c] /= (eta + eps);
    }
  }
  return r;
}

}  // namespace

template <Real T>
NaiveHlaResult<T> naive_hla(const Tensor<T>& phi_q,
                            std::span<const Tensor<T>> phi_ks,
                            const Tensor<T>& v, T eps) {
  return naive_hla_impl<T>(phi_q, phi_ks, v, nullptr, eps);
}

template <Real T>
NaiveHlaResult<T> naive_hla(const Tensor<T>& phi_q,
                            std::span<const Tensor<T>> phi_ks,
                            const Tensor<T>& v, const Tensor<T>& mask, T eps) {
  return naive_hla_impl<T>(phi_q, phi_ks, v, &mask, eps);
}

template <Real T>
Tensor<T> decay_mask(std::size_t n, T decay) {
  if (!(decay > T{0}) || decay > T{1}) {
    throw ConfigError("decay_mask: decay must lie in (0, 1]");
  }
  Tensor<T> m({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    T w{1};
    for (std::size_t j = i + 1; j-- > 0;) {
      m[i * n + j] = w;
      w *= decay;
    }
  }
  return m;
}

std::size_t numerical_rank(const Tensor<double>& matrix, double rel_tol) {
  if (matrix.rank() != 2) {
    throw DimensionError("numerical_rank: expected a matrix");
  }
  const auto rows = static_cast<Eigen::Index>(matrix.dim(0));
  const auto cols = static_cast<Eigen::Index>(matrix.dim(1));
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>
      m(matrix.data(), rows, cols);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cut = rel_tol * sv(0);
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) ++r;
  }
  return r;
}

RankReport rank_bound_check(const Tensor<double>& product,
                            std::span<const Tensor<double>> factors,
                            ProductKind kind, double rel_tol) {
  RankReport report;
  report.product_rank = numerical_rank(product, rel_tol);
  for (const auto& f : factors) {
    report.factor_ranks.push_back(numerical_rank(f, rel_tol));
  }
  if (report.factor_ranks.empty()) {
    report.bound = 0;
  } else if (kind == ProductKind::kHadamard) {
    report.bound = 1;
    for (auto r : report.factor_ranks) report.bound *= r;
  } else {
    report.bound = *std::min_element(report.factor_ranks.begin(),
                                     report.factor_ranks.end());
  }
  report.holds = report.product_rank <= report.bound;
  return report;
}

#define HLA_INSTANTIATE(T)                                                    \
  template Tensor<T> softmax_attention<T>(const Tensor<T>&, const Tensor<T>&, \
                                          const Tensor<T>&);                  \
  template Tensor<T> softmax_scores<T>(const Tensor<T>&, const Tensor<T>&);   \
  template Tensor<T> linear_attention<T>(const Tensor<T>&, const Tensor<T>&,  \
                                         const Tensor<T>&, T);                \
  template NaiveHlaResult<T> naive_hla<T>(                                    \
      const Tensor<T>&, std::span<const Tensor<T>>, const Tensor<T>&, T);     \
  template NaiveHlaResult<T> naive_hla<T>(const Tensor<T>&,                   \
                                          std::span<const Tensor<T>>,         \
                                          const Tensor<T>&, const Tensor<T>&, \
                                          T);                                 \
  template Tensor<T> decay_mask<T>(std::size_t, T);
HLA_INSTANTIATE(float)
HLA_INSTANTIATE(double)
#undef HLA_INSTANTIATE

}  // namespace hla
