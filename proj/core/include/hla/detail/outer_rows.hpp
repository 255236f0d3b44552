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
#include <span>
#include <vector>

#include "hla/hla_kernel.hpp"

namespace hla::detail {

// out[(i1 * dp + i2) * dp + ...] = x1[i1] * x2[i2] * ... evaluated left to
// right, so the fused and generic paths produce identical bits.
template <Real T>
void expand_generic(std::span<const T* const> xs, std::size_t dp, T* out) {
  out[0] = T{1};
  std::size_t filled = 1;
  for (const T* x : xs) {
    for (std::size_t i = filled; i-- > 0;) {
      const T head = out[i];
      for (std::size_t a = dp; a-- > 0;) out[i * dp + a] = head * x[a];
    }
    filled *= dp;
  }
}

template <Real T>
void expand_row(std::span<const T* const> xs, std::size_t dp, T* out,
                Expansion expansion) {
  if (expansion == Expansion::kFused && xs.size() == 2) {
    const T* x1 = xs[0];
    const T* x2 = xs[1];
    for (std::size_t a = 0; a < dp; ++a) {
      const T xa = x1[a];
      T* o = out + a * dp;
      for (std::size_t b = 0; b < dp; ++b) o[b] = xa * x2[b];
    }
    return;
  }
  if (expansion == Expansion::kFused && xs.size() == 3) {
    const T* x1 = xs[0];
    const T* x2 = xs[1];
    const T* x3 = xs[2];
    for (std::size_t a = 0; a < dp; ++a) {
      for (std::size_t b = 0; b < dp; ++b) {
        const T ab = x1[a] * x2[b];
        T* o = out + (a * dp + b) * dp;
        for (std::size_t c = 0; c < dp; ++c) o[c] = ab * x3[c];
      }
    }
    return;
  }
  expand_generic(xs, dp, out);
}

// Chain rule through expand_row: grads[f][a] += sum over multi-indices with
// digit f equal to a of d_out[idx] * prod_{g != f} x_g[idx_g].
template <Real T>
void expand_row_backward(std::span<const T* const> xs, std::size_t dp,
                         const T* d_out, std::span<T* const> grads) {
  const std::size_t factors = xs.size();
  const std::size_t volume = feature_volume(dp, factors);
  std::vector<std::size_t> digits(factors);
  std::vector<T> prefix(factors + 1), suffix(factors + 1);
  for (std::size_t p = 0; p < volume; ++p) {
    const T g = d_out[p];
    if (g == T{0}) continue;
    std::size_t rest = p;
    for (std::size_t f = factors; f-- > 0;) {
      digits[f] = rest % dp;
      rest /= dp;
    }
    prefix[0] = T{1};
    for (std::size_t f = 0; f < factors; ++f) {
      prefix[f + 1] = prefix[f] * xs[f][digits[f]];
    }
    suffix[factors] = T{1};
    for (std::size_t f = factors; f-- > 0;) {
      suffix[f] = suffix[f + 1] * xs[f][digits[f]];
    }
    for (std::size_t f = 0; f < factors; ++f) {
      grads[f][digits[f]] += g * prefix[f] * suffix[f + 1];
    }
  }
}

}  // namespace hla::detail
