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

#include "hla/weight_bundle.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "hla/tensor_io.hpp"

namespace hla {
namespace {

constexpr int kManifestVersion = 1;
constexpr const char* kTensorNames[] = {"w1", "b1", "w2", "b2", "ln_gamma",
                                        "ln_beta"};

bool valid_role(const std::string& role) {
  if (role.empty()) return false;
  for (char c : role) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

template <Real T>
void save_weight_bundle(const std::filesystem::path& dir,
                        const WeightBundle<T>& bundle) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["version"] = kManifestVersion;
  manifest["precision"] = std::string(to_string(precision_of<T>));
  nlohmann::json maps = nlohmann::json::object();
  for (const auto& [role, params] : bundle) {
    if (!valid_role(role)) {
      throw ConfigError("weight bundle: invalid role name '" + role + "'");
    }
    params.validate();
    nlohmann::json entry;
    entry["relu_output"] = params.relu_output;
    entry["layernorm"] = params.layernorm;
    nlohmann::json files = nlohmann::json::object();
    const auto tensors = params.parameters();
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const std::string file = role + "." + kTensorNames[i] + ".bin";
      save_tensor(dir / file, *tensors[i]);
      files[kTensorNames[i]] = file;
    }
    entry["files"] = std::move(files);
    maps[role] = std::move(entry);
  }
  manifest["maps"] = std::move(maps);
  std::ofstream os(dir / kWeightManifestName, std::ios::trunc);
  if (!os) throw FormatError("weight bundle: cannot write manifest");
  os << manifest.dump(2) << '\n';
}

template <Real T>
WeightBundle<T> load_weight_bundle(const std::filesystem::path& dir) {
  std::ifstream is(dir / kWeightManifestName);
  if (!is) {
    throw FormatError("weight bundle: missing " +
                      (dir / kWeightManifestName).string());
  }
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(is);
    if (manifest.at("version").get<int>() != kManifestVersion) {
      throw FormatError("weight bundle: unsupported manifest version");
    }
    if (manifest.at("precision").get<std::string>() !=
        to_string(precision_of<T>)) {
      throw FormatError("weight bundle: stored precision is " +
                        manifest.at("precision").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("weight bundle: bad manifest: ") + e.what());
  }
  WeightBundle<T> bundle;
  for (const auto& [role, entry] : manifest.at("maps").items()) {
    if (!valid_role(role)) {
      throw FormatError("weight bundle: invalid role name '" + role + "'");
    }
    FeatureMapParams<T> p;
    try {
      p.relu_output = entry.at("relu_output").template get<bool>();
      p.layernorm = entry.at("layernorm").template get<bool>();
      const auto& files = entry.at("files");
      auto load = [&](const char* name) {
        const auto file = files.at(name).template get<std::string>();
        if (file.find('/') != std::string::npos || file.find("..") == 0) {
          throw FormatError("weight bundle: file outside bundle: " + file);
        }
        return load_tensor<T>(dir / file);
      };
      p.w1 = load("w1");
      p.b1 = load("b1");
      p.w2 = load("w2");
      p.b2 = load("b2");
      if (p.layernorm) {
        p.ln_gamma = load("ln_gamma");
        p.ln_beta = load("ln_beta");
      } else {
        p.ln_gamma = Tensor<T>({p.b2.size()});
        p.ln_beta = Tensor<T>({p.b2.size()});
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("weight bundle: bad entry '" + role + "': " + e.what());
    }
    p.validate();
    bundle.emplace(role, std::move(p));
  }
  return bundle;
}

template void save_weight_bundle<float>(const std::filesystem::path&,
                                        const WeightBundle<float>&);
template void save_weight_bundle<double>(const std::filesystem::path&,
                                         const WeightBundle<double>&);
template WeightBundle<float> load_weight_bundle<float>(
    const std::filesystem::path&);
template WeightBundle<double> load_weight_bundle<double>(
    const std::filesystem::path&);

}  // namespace hla
