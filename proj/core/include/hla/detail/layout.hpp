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

#include <cmath>
#include <string>

#include "hla/tensor.hpp"

namespace hla::detail {

/// Extents of a [batch, heads, seq, dim] tensor.
struct SeqDims {
  std::size_t batch = 0;
  std::size_t heads = 0;
  std::size_t seq = 0;
  std::size_t dim = 0;

  std::size_t slices() const { return batch * heads; }
  std::size_t slice_size() const { return seq * dim; }
};

template <Real T>
SeqDims seq_dims(const Tensor<T>& t, const char* name) {
  if (t.rank() != 4) {
    throw DimensionError(std::string(name) + ": expected [B,H,N,d], got " +
                         shape_to_string(t.shape()));
  }
  return {t.dim(0), t.dim(1), t.dim(2), t.dim(3)};
}

template <Real T>
void require_nonnegative(const Tensor<T>& t, const char* name) {
  for (T x : t.values()) {
    if (x < T{0} || std::isnan(x)) {
      throw ContractError(std::string(name) +
                          ": feature-map outputs must be >= 0 for the "
                          "normalization to be valid");
    }
  }
}

template <Real T>
void require_finite(const Tensor<T>& t, const char* name) {
  for (T x : t.values()) {
    if (!std::isfinite(x)) {
      throw ContractError(std::string(name) + ": non-finite input");
    }
  }
}

}  // namespace hla::detail
