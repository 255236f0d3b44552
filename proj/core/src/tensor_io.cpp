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

#include "hla/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace hla {
namespace {

constexpr std::uint32_t kMaxRank = 64;

template <typename U>
U to_little(U value) {
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    unsigned char bytes[sizeof(U)];
    std::memcpy(bytes, &value, sizeof(U));
    for (std::size_t i = 0; i < sizeof(U) / 2; ++i) {
      std::swap(bytes[i], bytes[sizeof(U) - 1 - i]);
    }
    std::memcpy(&value, bytes, sizeof(U));
    return value;
  }
}

template <typename U>
void put(std::ostream& os, U value) {
  value = to_little(value);
  os.write(reinterpret_cast<const char*>(&value), sizeof(U));
}

template <typename U>
U get(std::istream& is) {
  U value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(U));
  if (!is) throw FormatError("tensor file: truncated header");
  return to_little(value);
}

template <Real T>
Tensor<T> read_payload(std::istream& is, TensorHeader header) {
  Tensor<T> t(std::move(header.shape));
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(T)));
    if (!is) throw FormatError("tensor file: truncated payload");
  } else {
    for (auto& x : t.values()) x = get<T>(is);
  }
  return t;
}

}  // namespace

template <Real T>
void write_tensor(std::ostream& os, const Tensor<T>& t) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t extent : t.shape()) {
    put<std::uint64_t>(os, static_cast<std::uint64_t>(extent));
  }
  put<std::uint8_t>(os, static_cast<std::uint8_t>(Tensor<T>::kPrecision));
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.size() * sizeof(T)));
  } else {
    for (T x : t.values()) put<T>(os, x);
  }
  if (!os) throw FormatError("tensor file: write failed");
}

TensorHeader read_tensor_header(std::istream& is) {
  TensorHeader header;
  const auto rank = get<std::uint32_t>(is);
  if (rank > kMaxRank) {
    throw FormatError("tensor file: implausible rank " + std::to_string(rank));
  }
  header.shape.resize(rank);
  for (auto& extent : header.shape) {
    extent = static_cast<std::size_t>(get<std::uint64_t>(is));
  }
  const auto tag = get<std::uint8_t>(is);
  if (tag > 1) {
    throw FormatError("tensor file: unknown precision tag " +
                      std::to_string(tag));
  }
  header.precision = static_cast<Precision>(tag);
  try {
    (void)shape_numel(header.shape);
  } catch (const DimensionError& e) {
    throw FormatError(std::string("tensor file: ") + e.what());
  }
  return header;
}

template <Real T>
Tensor<T> read_tensor(std::istream& is) {
  TensorHeader header = read_tensor_header(is);
  if (header.precision != precision_of<T>) {
    throw FormatError("tensor file: stored precision is " +
                      std::string(to_string(header.precision)) +
                      ", requested " + std::string(to_string(precision_of<T>)));
  }
  return read_payload<T>(is, std::move(header));
}

AnyTensor read_any_tensor(std::istream& is) {
  TensorHeader header = read_tensor_header(is);
  if (header.precision == Precision::kSingle) {
    return read_payload<float>(is, std::move(header));
  }
  return read_payload<double>(is, std::move(header));
}

template <Real T>
void save_tensor(const std::filesystem::path& path, const Tensor<T>& t) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  write_tensor(os, t);
}

template <Real T>
Tensor<T> load_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_tensor<T>(is);
}

AnyTensor load_any_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_any_tensor(is);
}

#define HLA_INSTANTIATE(T)                                                 \
  template void write_tensor<T>(std::ostream&, const Tensor<T>&);          \
  template Tensor<T> read_tensor<T>(std::istream&);                        \
  template void save_tensor<T>(const std::filesystem::path&,               \
                               const Tensor<T>&);                          \
  template Tensor<T> load_tensor<T>(const std::filesystem::path&);
HLA_INSTANTIATE(float)
HLA_INSTANTIATE(double)
#undef HLA_INSTANTIATE

}  // namespace hla
