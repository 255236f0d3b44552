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

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hla/hla_kernel.hpp"
#include "hla/tensor.hpp"

namespace hla::tools {

struct CheckOptions {
  Precision precision = Precision::kDouble;
  std::uint64_t seed = 0;
  // key=value overrides of the base kernel config, e.g. eps=-1.
  std::map<std::string, std::string> faults;
};

struct SuiteResult {
  std::string name;
  double max_error = 0;
  double tolerance = 0;
  bool passed = false;
  std::string detail;
};

/// Base kernel config after applying faults. Throws ConfigError for an
/// unknown key, an unparsable value or a config that fails validation.
HlaConfig check_base_config(const CheckOptions& opts);

/// Runs every suite. Throws ConfigError before running anything if the
/// base config is rejected.
std::vector<SuiteResult> run_checks(const CheckOptions& opts);

}  // namespace hla::tools
