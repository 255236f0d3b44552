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

// Binary tensor files. Layout, all little-endian:
//   u32 rank | rank x u64 shape | u8 precision (0 = single, 1 = double) |
//   flat row-major buffer

#include <filesystem>
#include <iosfwd>
#include <variant>

#include "hla/tensor.hpp"

namespace hla {

struct TensorHeader {
  Shape shape;
  Precision precision = Precision::kDouble;
};

using AnyTensor = std::variant<Tensor<float>, Tensor<double>>;

template <Real T>
void write_tensor(std::ostream& os, const Tensor<T>& t);

TensorHeader read_tensor_header(std::istream& is);

/// Reads a tensor stored with precision T; a file of the other precision is
/// a FormatError rather than a silent conversion.
template <Real T>
Tensor<T> read_tensor(std::istream& is);

AnyTensor read_any_tensor(std::istream& is);

template <Real T>
void save_tensor(const std::filesystem::path& path, const Tensor<T>& t);

template <Real T>
Tensor<T> load_tensor(const std::filesystem::path& path);

AnyTensor load_any_tensor(const std::filesystem::path& path);

}  // namespace hla
