// Copyright 2026 The UNCM Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef UNCM_CHECKPOINT_H_
#define UNCM_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "uncm/param_set.h"
#include "uncm/password_model.h"
#include "uncm/uncm_model.h"

// Binary container:
//   bytes 0..7   magic "UNCMCKPT"
//   bytes 8..15  manifest length m, uint64 little-endian
//   next m bytes manifest, UTF-8 JSON
//   remainder    payload, little-endian float32 arrays back to back
// The manifest holds "format" ("uncm-v1"), "kind", "architecture", "arrays"
// ([{name, shape, offset, length}], offsets and lengths in bytes relative to
// the payload start), "vocabs" and an optional "seed" block.
namespace uncm::ckpt {

inline constexpr std::string_view kMagic = "UNCMCKPT";
inline constexpr std::string_view kFormat = "uncm-v1";

inline constexpr std::string_view kKindUncm = "uncm";
inline constexpr std::string_view kKindPasswordModel = "password-model";
inline constexpr std::string_view kKindSeed = "seed";
inline constexpr std::string_view kKindSeededBundle = "seeded-bundle";

struct NamedArray {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> values;  // row-major

  friend bool operator==(const NamedArray&, const NamedArray&) = default;
};

struct Container {
  std::string kind;
  nlohmann::json architecture = nlohmann::json::object();
  nlohmann::json vocabs;  // null when absent
  nlohmann::json seed;    // null when absent
  std::vector<NamedArray> arrays;

  const NamedArray& array(std::string_view name) const;
  bool has_array(std::string_view name) const;

  friend bool operator==(const Container&, const Container&) = default;
};

// Canonical encoding; Parse(Serialize(c)) == c and
// Serialize(Parse(bytes)) == bytes for any container this library wrote.
std::string Serialize(const Container& container);
// Throws FormatError on bad magic, truncation, unknown format version or
// offsets that do not tile the payload.
Container Parse(std::string_view bytes);

void WriteFile(const Container& container, const std::filesystem::path& path);
// Throws NotFound when the file is missing.
Container ReadFile(const std::filesystem::path& path);

nlohmann::json ConfigToJson(const UncmConfig& config);
UncmConfig ConfigFromJson(const nlohmann::json& j);
nlohmann::json PasswordConfigToJson(const pwmodel::PasswordModelConfig& config);
pwmodel::PasswordModelConfig PasswordConfigFromJson(const nlohmann::json& j);
nlohmann::json VocabsToJson(const encoder::Vocabs& vocabs);
encoder::Vocabs VocabsFromJson(const nlohmann::json& j);

// Seed metadata without psi; psi travels as the array "seed/psi".
nlohmann::json SeedToJson(const ConfigSeed& seed);

Container FromUncm(const UncmModel& model);
UncmModel ToUncm(const Container& container);

// Unconditional password model (baseline).
Container FromPasswordModel(const nn::ParamSet& params,
                            const pwmodel::PasswordModelConfig& config);
std::pair<nn::ParamSet, pwmodel::PasswordModelConfig> ToPasswordModel(
    const Container& container);

Container FromSeed(const ConfigSeed& seed);
ConfigSeed ToSeed(const Container& container);

// Password-model core weights plus the 2L initial-state vectors of `seed`;
// neither the seed projections nor the encoders are included.
Container SeededBundle(const UncmModel& model, const ConfigSeed& seed);
pwmodel::SeededModel LoadSeededBundle(const Container& container);

}  // namespace uncm::ckpt

#endif  // UNCM_CHECKPOINT_H_
