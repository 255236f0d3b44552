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

#include "hla/tensor.hpp"

#include <cmath>
#include <limits>

namespace hla {

std::string_view to_string(Precision p) {
  return p == Precision::kSingle ? "single" : "double";
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t extent : shape) {
    if (extent == 0) {
      throw DimensionError("tensor: zero extent in shape " +
                           shape_to_string(shape));
    }
    if (n > std::numeric_limits<std::size_t>::max() / extent) {
      throw DimensionError("tensor: element count overflows in shape " +
                           shape_to_string(shape));
    }
    n *= extent;
  }
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <Real T>
Tensor<T> outer_product(std::span<const std::span<const T>> vectors) {
  if (vectors.empty()) {
    throw DimensionError("outer_product: need at least one vector");
  }
  const std::size_t len = vectors[0].size();
  if (len == 0) throw DimensionError("outer_product: empty vector");
  for (const auto& v : vectors) {
    if (v.size() != len) {
      throw DimensionError("outer_product: mismatched vector lengths");
    }
  }
  Tensor<T> out(Shape(vectors.size(), len));
  // Iterated Kronecker expansion: after step f the prefix holds the
  // (f+1)-fold product in row-major order.
  std::span<T> buf = out.values();
  buf[0] = T{1};
  std::size_t filled = 1;
  for (const auto& v : vectors) {
    for (std::size_t i = filled; i-- > 0;) {
      const T head = buf[i];
      for (std::size_t a = len; a-- > 0;) buf[i * len + a] = head * v[a];
    }
    filled *= len;
  }
  return out;
}

template <Real T>
Tensor<T> outer_product(const std::vector<std::vector<T>>& vectors) {
  std::vector<std::span<const T>> views(vectors.begin(), vectors.end());
  return outer_product<T>(std::span<const std::span<const T>>(views));
}

template <Real T>
Tensor<T> contract_first_axis(const Tensor<T>& t, const Tensor<T>& m) {
  if (t.rank() < 1 || m.rank() != 2) {
    throw DimensionError("contract_first_axis: expected t[N,...] and m[N,d]");
  }
  const std::size_t n = t.dim(0);
  if (m.dim(0) != n) {
    throw DimensionError("contract_first_axis: first axes differ (" +
                         std::to_string(n) + " vs " +
                         std::to_string(m.dim(0)) + ")");
  }
  const std::size_t slice = t.size() / n;
  const std::size_t d = m.dim(1);
  Shape out_shape(t.shape().begin() + 1, t.shape().end());
  out_shape.push_back(d);
  Tensor<T> out(out_shape);
  for (std::size_t s = 0; s < slice; ++s) {
    for (std::size_t j = 0; j < d; ++j) {
      T acc{0};
      for (std::size_t r = 0; r < n; ++r) acc += t[r * slice + s] * m[r * d + j];
      out[s * d + j] = acc;
    }
  }
  return out;
}

template <Real T>
Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("hadamard: shape " + shape_to_string(a.shape()) +
                         " vs " + shape_to_string(b.shape()));
  }
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

template <Real T>
T reduce_all(const Tensor<T>& t) {
  T acc{0};
  for (T x : t.values()) acc += x;
  return acc;
}

template <Real T>
Tensor<T> reduce_trailing(const Tensor<T>& t, std::size_t axes) {
  if (axes >= t.rank()) {
    throw DimensionError("reduce_trailing: cannot reduce " +
                         std::to_string(axes) + " axes of a rank-" +
                         std::to_string(t.rank()) + " tensor");
  }
  Shape lead(t.shape().begin(),
             t.shape().begin() + static_cast<std::ptrdiff_t>(t.rank() - axes));
  Tensor<T> out(lead);
  const std::size_t inner = t.size() / out.size();
  for (std::size_t o = 0; o < out.size(); ++o) {
    T acc{0};
    for (std::size_t i = 0; i < inner; ++i) acc += t[o * inner + i];
    out[o] = acc;
  }
  return out;
}

template <Real T>
double max_relative_error(const Tensor<T>& a, const Tensor<T>& b,
                          double floor) {
  if (a.shape() != b.shape()) {
    throw DimensionError("max_relative_error: shape mismatch " +
                         shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i];
    const double y = b[i];
    const double denom = std::max({std::abs(x), std::abs(y), floor});
    const double err = std::abs(x - y) / denom;
    if (std::isnan(err)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, err);
  }
  return worst;
}

#define HLA_INSTANTIATE(T)                                                   \
  template Tensor<T> outer_product<T>(std::span<const std::span<const T>>); \
  template Tensor<T> outer_product<T>(const std::vector<std::vector<T>>&);   \
  template Tensor<T> contract_first_axis<T>(const Tensor<T>&,                \
                                            const Tensor<T>&);               \
  template Tensor<T> hadamard<T>(const Tensor<T>&, const Tensor<T>&);        \
  template T reduce_all<T>(const Tensor<T>&);                                \
  template Tensor<T> reduce_trailing<T>(const Tensor<T>&, std::size_t);      \
  template double max_relative_error<T>(const Tensor<T>&, const Tensor<T>&,  \
                                        double);
HLA_INSTANTIATE(float)
HLA_INSTANTIATE(double)
#undef HLA_INSTANTIATE

}  // namespace hla
