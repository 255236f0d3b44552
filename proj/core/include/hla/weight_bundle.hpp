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

// A weight bundle is a directory holding one tensor file per parameter and a
// manifest.json that maps role names ("phi_q", "phi_k1", ...) to those files
// and to the activation flags of each network.

#include <filesystem>
#include <map>
#include <string>

#include "hla/feature_maps.hpp"

namespace hla {

inline constexpr const char* kWeightManifestName = "manifest.json";

template <Real T>
using WeightBundle = std::map<std::string, FeatureMapParams<T>>;

template <Real T>
void save_weight_bundle(const std::filesystem::path& dir,
                        const WeightBundle<T>& bundle);

template <Real T>
WeightBundle<T> load_weight_bundle(const std::filesystem::path& dir);

}  // namespace hla
