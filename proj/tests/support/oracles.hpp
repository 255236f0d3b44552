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

// Straight-loop reference implementations. They share nothing with the
// library beyond the Tensor container, so agreement is evidence that the
// optimized paths are right rather than consistently wrong.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "hla/feature_maps.hpp"
#include "hla/tensor.hpp"

namespace hla::testing {

using TensorD = Tensor<double>;

inline TensorD random_tensor(Shape shape, double lo, double hi,
                             std::mt19937_64& rng) {
  TensorD t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& e : t.values()) e = dist(rng);
  return t;
}

inline TensorD random_normal(Shape shape, std::mt19937_64& rng) {
  TensorD t(std::move(shape));
  std::normal_distribution<double> dist(0.0, 1.0);
  for (auto& e : t.values()) e = dist(rng);
  return t;
}

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor).
inline double rel_err(const TensorD& a, const TensorD& b, double floor = 1e-300) {
  if (a.shape() != b.shape()) return INFINITY;
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a[i] - b[i]);
    const double s = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    if (std::isnan(d)) return INFINITY;
    worst = std::max(worst, d / s);
  }
  return worst;
}

struct OracleHla {
  TensorD out;     // [B,H,N,d]
  TensorD scores;  // [B,H,N,N] masked, unnormalized
  TensorD rows;    // [B,H,N]
};

/// Five nested loops: slice, i, j, factor, feature channel. `mask` is [N,N]
/// or empty.
inline OracleHla oracle_hla(const TensorD& pq, const std::vector<TensorD>& pks,
                            const TensorD& v, double eps,
                            const TensorD* mask = nullptr) {
  const std::size_t b = pq.dim(0), h = pq.dim(1), n = pq.dim(2), dp = pq.dim(3);
  const std::size_t nk = v.dim(2), d = v.dim(3);
  OracleHla r{TensorD({b, h, n, d}), TensorD({b, h, n, nk}), TensorD({b, h, n})};
  for (std::size_t s = 0; s < b * h; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0;
      std::vector<double> acc(d, 0.0);
      for (std::size_t j = 0; j < nk; ++j) {
        double a = 1;
        for (const auto& pk : pks) {
          double dot = 0;
          for (std::size_t c = 0; c < dp; ++c) {
            dot += pq[(s * n + i) * dp + c] * pk[(s * nk + j) * dp + c];
          }
          a *= dot;
        }
        if (mask) a *= (*mask)[i * nk + j];
        r.scores[(s * n + i) * nk + j] = a;
        row += a;
        for (std::size_t c = 0; c < d; ++c) acc[c] += a * v[(s * nk + j) * d + c];
      }
      r.rows[s * n + i] = row;
      for (std::size_t c = 0; c < d; ++c) r.out[(s * n + i) * d + c] = acc[c] / (row + eps);
    }
  }
  return r;
}

/// softmax(q k^T / sqrt(d)) v, element by element.
inline TensorD oracle_softmax(const TensorD& q, const TensorD& k, const TensorD& v) {
  const std::size_t b = q.dim(0), h = q.dim(1), n = q.dim(2), d = q.dim(3);
  const std::size_t nk = k.dim(2), dv = v.dim(3);
  TensorD out({b, h, n, dv});
  for (std::size_t s = 0; s < b * h; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> logits(nk);
      for (std::size_t j = 0; j < nk; ++j) {
        double dot = 0;
        for (std::size_t c = 0; c < d; ++c) dot += q[(s * n + i) * d + c] * k[(s * nk + j) * d + c];
        logits[j] = dot / std::sqrt(static_cast<double>(d));
      }
      const double m = *std::max_element(logits.begin(), logits.end());
      double z = 0;
      for (auto& l : logits) z += (l = std::exp(l - m));
      for (std::size_t j = 0; j < nk; ++j)
        for (std::size_t c = 0; c < dv; ++c)
          out[(s * n + i) * dv + c] += logits[j] / z * v[(s * nk + j) * dv + c];
    }
  }
  return out;
}

/// Scalar evaluation of the feature network on one row.
inline std::vector<double> oracle_mlp_row(const FeatureMapParams<double>& p,
                                          const double* x) {
  const std::size_t din = p.w1.dim(0), hid = p.w1.dim(1), dout = p.w2.dim(1);
  std::vector<double> hdn(hid), y(dout);
  for (std::size_t j = 0; j < hid; ++j) {
    double a = p.b1[j];
    for (std::size_t i = 0; i < din; ++i) a += x[i] * p.w1[i * hid + j];
    hdn[j] = 0.5 * a * (1.0 + std::erf(a / std::sqrt(2.0)));
  }
  for (std::size_t j = 0; j < dout; ++j) {
    double a = p.b2[j];
    for (std::size_t i = 0; i < hid; ++i) a += hdn[i] * p.w2[i * dout + j];
    y[j] = a;
  }
  if (p.layernorm) {
    double mean = 0, var = 0;
    for (double e : y) mean += e;
    mean /= static_cast<double>(dout);
    for (double e : y) var += (e - mean) * (e - mean);
    var /= static_cast<double>(dout);
    for (std::size_t j = 0; j < dout; ++j) {
      y[j] = (y[j] - mean) / std::sqrt(var + 1e-5) * p.ln_gamma[j] + p.ln_beta[j];
    }
  }
  if (p.relu_output) {
    for (auto& e : y) e = std::max(e, 0.0);
  }
  return y;
}

inline TensorD oracle_mlp(const FeatureMapParams<double>& p, const TensorD& x) {
  const std::size_t din = p.w1.dim(0), dout = p.w2.dim(1);
  Shape shape = x.shape();
  shape.back() = dout;
  TensorD y(shape);
  for (std::size_t r = 0; r < x.size() / din; ++r) {
    const auto row = oracle_mlp_row(p, x.data() + r * din);
    std::copy(row.begin(), row.end(), y.data() + r * dout);
  }
  return y;
}

/// Central difference of loss() with respect to x[i].
inline double central_difference(TensorD& x, std::size_t i,
                                 const std::function<double()>& loss,
                                 double h = 1e-5) {
  const double saved = x[i];
  x[i] = saved + h;
  const double up = loss();
  x[i] = saved - h;
  const double down = loss();
  x[i] = saved;
  return (up - down) / (2 * h);
}

/// Gradient relative error with the denominator floored at `floor_frac` of
/// the largest analytic entry, so entries that vanish analytically are
/// compared on an absolute scale.
inline double grad_rel_err(double analytic, double numeric, double scale,
                           double floor_frac = 1e-3) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), floor_frac * scale, 1e-300});
  return std::abs(analytic - numeric) / denom;
}

/// Worst grad_rel_err over every coordinate of x.
inline double fd_check_all(TensorD& x, const TensorD& analytic,
                           const std::function<double()>& loss) {
  double scale = 0;
  for (double g : analytic.values()) scale = std::max(scale, std::abs(g));
  double worst = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    worst = std::max(worst, grad_rel_err(analytic[i], central_difference(x, i, loss), scale));
  }
  return worst;
}

inline double weighted_sum(const TensorD& y, const TensorD& w) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
  return s;
}

}  // namespace hla::testing
