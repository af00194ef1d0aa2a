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

#ifndef UNCM_UNCM_MODEL_H_
#define UNCM_UNCM_MODEL_H_

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "uncm/dp_accountant.h"
#include "uncm/email_encoder.h"
#include "uncm/leak.h"
#include "uncm/mixing_encoder.h"
#include "uncm/param_set.h"
#include "uncm/password_model.h"

namespace uncm {

struct UncmConfig {
  encoder::EncoderConfig encoder;
  mixing::MixConfig mix;
  pwmodel::PasswordModelConfig password;
  std::size_t vocab_cutoff = 300;

  // Checks that the three sub-models fit together.
  void Validate() const;
  // Small dimensions suited to CPU experiments on synthetic data.
  static UncmConfig Tiny();
};

// Sub-encoder, mixing encoder and conditional password model sharing one
// parameter set (`enc/`, `mix/`, `pm/`).
struct UncmModel {
  UncmConfig config;
  encoder::Vocabs vocabs;
  nn::ParamSet params;

  bool private_variant() const {
    return config.mix.kind == mixing::AttentionKind::kDpSigmoid;
  }
};

UncmModel InitUncm(const UncmConfig& config, encoder::Vocabs vocabs,
                   std::mt19937_64& rng);

inline constexpr std::size_t kDefaultSubsample = 8192;
inline constexpr std::size_t kDefaultPrivateSubsample = 2048;

struct DpParams {
  double z = 3.0;
  // Zero selects 1e-2 / |A_inf|.
  double delta = 0.0;
};

struct ConfigSeed {
  std::string id;
  nn::Tensor psi;  // 1 x seed_dim
  std::size_t k_used = 0;
  std::size_t skipped = 0;  // malformed accounts inside the subsample
  std::optional<dp::PrivacyAccount> dp;
  std::uint64_t rng_seed = 0;
};

// Uniform subsample without replacement of min(k, n) indices, in draw order.
std::vector<std::size_t> SubsampleIndices(std::size_t n, std::size_t k,
                                          std::mt19937_64& rng);

// Seed from the accounts of one leak. Malformed accounts are skipped; throws
// MalformedEmail when none parse, InvalidArgument on empty input or k == 0,
// and Conflict when `dp` is given for a model without the private path.
ConfigSeed ComputeSeed(const UncmModel& model, std::span<const Account> accounts,
                       std::size_t k, std::uint64_t rng_seed,
                       std::optional<DpParams> dp = std::nullopt);

// Encodes accounts into value vectors (n x value_dim), in chunks.
nn::Tensor EncodeValues(const UncmModel& model,
                        std::span<const encoder::EncodedInput> inputs);

// Seed on the tape, for training: aggregates with the model's attention kind
// (without noise) and applies the output projection.
nn::Var SeedOnGraph(nn::Graph& g, const UncmConfig& config,
                    std::span<const encoder::EncodedInput> inputs);

pwmodel::SeededModel MakeSeeded(const UncmModel& model, const ConfigSeed& seed);
pwmodel::SeededModel MakeBaseline(const UncmModel& model);

}  // namespace uncm

#endif  // UNCM_UNCM_MODEL_H_
