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
#include <stdexcept>
#include <string>

namespace hla {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes or extents that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition on the input values was violated.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// An invalid configuration (eps <= 0, decay outside (0, 1], ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A d_phi^F allocation would exceed the configured memory cap.
class MemoryCapError : public Error {
 public:
  using Error::Error;
};

/// Malformed or mismatching file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t step, const std::string& what)
      : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace hla
