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

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hla/error.hpp"

namespace hla {

template <typename T>
concept Real = std::same_as<T, float> || std::same_as<T, double>;

enum class Precision : std::uint8_t { kSingle = 0, kDouble = 1 };

template <Real T>
inline constexpr Precision precision_of =
    std::same_as<T, float> ? Precision::kSingle : Precision::kDouble;

std::string_view to_string(Precision p);

using Shape = std::vector<std::size_t>;

/// Number of elements described by `shape`; throws DimensionError on a zero
/// extent. The empty shape is a scalar.
std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense row-major real array.
///
/// Precision is a template parameter, so mixing float and double operands is
/// rejected at compile time. Reshaping only touches the shape metadata.
template <Real T>
class Tensor {
 public:
  using value_type = T;
  static constexpr Precision kPrecision = precision_of<T>;

  Tensor() : data_(1, T{0}) {}
  explicit Tensor(Shape shape, T fill = T{0})
      : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}
  Tensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_numel(shape_) != data_.size()) {
      throw DimensionError("tensor: shape " + shape_to_string(shape_) +
                           " does not match buffer of " +
                           std::to_string(data_.size()) + " elements");
    }
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor ones(Shape shape) { return Tensor(std::move(shape), T{1}); }
  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }

  /// Extent of `axis`; negative axes count from the end.
  std::size_t dim(std::ptrdiff_t axis) const {
    const auto r = static_cast<std::ptrdiff_t>(shape_.size());
    const std::ptrdiff_t a = axis < 0 ? axis + r : axis;
    if (a < 0 || a >= r) {
      throw DimensionError("tensor: axis " + std::to_string(axis) +
                           " out of range for rank " + std::to_string(r));
    }
    return shape_[static_cast<std::size_t>(a)];
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  T& at(std::initializer_list<std::size_t> index) {
    return data_[offset(index)];
  }
  const T& at(std::initializer_list<std::size_t> index) const {
    return data_[offset(index)];
  }

  std::size_t offset(std::span<const std::size_t> index) const {
    if (index.size() != shape_.size()) {
      throw DimensionError("tensor: index rank " + std::to_string(index.size()) +
                           " != tensor rank " + std::to_string(shape_.size()));
    }
    std::size_t off = 0;
    for (std::size_t a = 0; a < shape_.size(); ++a) {
      if (index[a] >= shape_[a]) {
        throw DimensionError("tensor: index out of range on axis " +
                             std::to_string(a));
      }
      off = off * shape_[a] + index[a];
    }
    return off;
  }
  std::size_t offset(std::initializer_list<std::size_t> index) const {
    return offset(std::span<const std::size_t>(index.begin(), index.size()));
  }

  void reshape(Shape shape) {
    if (shape_numel(shape) != data_.size()) {
      throw DimensionError("tensor: cannot reshape " + shape_to_string(shape_) +
                           " to " + shape_to_string(shape));
    }
    shape_ = std::move(shape);
  }
  Tensor reshaped(Shape shape) const& {
    Tensor copy = *this;
    copy.reshape(std::move(shape));
    return copy;
  }
  Tensor reshaped(Shape shape) && {
    reshape(std::move(shape));
    return std::move(*this);
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

/// result[i1,...,iF] = vs[0][i1] * ... * vs[F-1][iF].
template <Real T>
Tensor<T> outer_product(std::span<const std::span<const T>> vectors);
template <Real T>
Tensor<T> outer_product(const std::vector<std::vector<T>>& vectors);

/// out[s..., j] = sum_n t[n, s...] * m[n, j].
template <Real T>
Tensor<T> contract_first_axis(const Tensor<T>& t, const Tensor<T>& m);

template <Real T>
Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b);

/// Left-to-right sequential sum of every element.
template <Real T>
T reduce_all(const Tensor<T>& t);

/// Sums the trailing `axes` axes; the result keeps the leading shape.
template <Real T>
Tensor<T> reduce_trailing(const Tensor<T>& t, std::size_t axes);

/// Maximum of |a - b| / max(|a|, |b|, floor) over all elements.
template <Real T>
double max_relative_error(const Tensor<T>& a, const Tensor<T>& b,
                          double floor = 1e-300);

}  // namespace hla
