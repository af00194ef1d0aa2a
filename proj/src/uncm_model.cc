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

#include "uncm/uncm_model.h"

#include <cstdio>
#include <cstring>
#include <numeric>

#include "uncm/errors.h"

namespace uncm {

namespace {

constexpr std::size_t kEncodeChunk = 512;

std::string SeedId(const nn::Tensor& psi, std::uint64_t rng_seed) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  mix(psi.data().data(), psi.size() * sizeof(double));
  mix(&rng_seed, sizeof(rng_seed));
  char buf[24];
  std::snprintf(buf, sizeof(buf), "s-%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

void UncmConfig::Validate() const {
  mix.Validate();
  if (mix.value_dim != encoder.value_dim()) {
    throw InvalidArgument("mixing encoder value_dim " +
                          std::to_string(mix.value_dim) +
                          " differs from sub-encoder output " +
                          std::to_string(encoder.value_dim()));
  }
  if (password.seed_dim != mix.seed_dim) {
    throw InvalidArgument("password model seed_dim differs from mixing seed_dim");
  }
  if (!password.conditional) {
    throw InvalidArgument("a UNCM needs a conditional password model");
  }
  if (vocab_cutoff == 0) throw InvalidArgument("vocab_cutoff must be >= 1");
}

UncmConfig UncmConfig::Tiny() {
  UncmConfig c;
  c.encoder.char_embedding = 8;
  c.encoder.gru_output = 16;
  c.encoder.provider_embedding = 16;
  c.encoder.domain_embedding = 16;
  c.mix.value_dim = c.encoder.value_dim();
  c.mix.attention_dim = 32;
  c.mix.seed_dim = 32;
  c.password.max_len = 16;
  c.password.embedding = 16;
  c.password.hidden = 64;
  c.password.layers = 2;
  c.password.seed_dim = 32;
  c.vocab_cutoff = 5;
  return c;
}

UncmModel InitUncm(const UncmConfig& config, encoder::Vocabs vocabs,
                   std::mt19937_64& rng) {
  config.Validate();
  UncmModel m{config, std::move(vocabs), {}};
  encoder::InitSubEncoder(m.params, config.encoder, m.vocabs, rng);
  mixing::InitMixEncoder(m.params, config.mix, rng);
  pwmodel::InitPasswordModel(m.params, config.password, rng);
  return m;
}

std::vector<std::size_t> SubsampleIndices(std::size_t n, std::size_t k,
                                          std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t take = std::min(n, k);
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(take);
  return idx;
}

nn::Tensor EncodeValues(const UncmModel& model,
                        std::span<const encoder::EncodedInput> inputs) {
  if (inputs.empty()) throw InvalidArgument("encode: no inputs");
  nn::Tensor out = nn::Tensor::Zeros(inputs.size(), model.config.mix.value_dim);
  for (std::size_t begin = 0; begin < inputs.size(); begin += kEncodeChunk) {
    const std::size_t end = std::min(inputs.size(), begin + kEncodeChunk);
    nn::Graph g(&model.params);
    const nn::Tensor& chunk = g.value(encoder::EncodeBatch(
        g, model.config.encoder, inputs.subspan(begin, end - begin)));
    std::copy(chunk.data().begin(), chunk.data().end(),
              out.data().begin() +
                  static_cast<std::ptrdiff_t>(begin * out.cols()));
  }
  return out;
}

nn::Var SeedOnGraph(nn::Graph& g, const UncmConfig& config,
                    std::span<const encoder::EncodedInput> inputs) {
  const nn::Var values = encoder::EncodeBatch(g, config.encoder, inputs);
  if (config.mix.kind == mixing::AttentionKind::kSoftmax) {
    return mixing::AttendSoftmax(g, config.mix, values);
  }
  const nn::Var pooled =
      mixing::AttendDpPreNoise(g, config.mix, values, config.mix.clip_norm);
  return mixing::ProjectSeed(g, config.mix, pooled);
}

ConfigSeed ComputeSeed(const UncmModel& model, std::span<const Account> accounts,
                       std::size_t k, std::uint64_t rng_seed,
                       std::optional<DpParams> dp) {
  if (accounts.empty()) throw InvalidArgument("compute_seed: no accounts");
  if (k == 0) throw InvalidArgument("compute_seed: k must be >= 1");
  if (dp && !model.private_variant()) {
    throw Conflict(
        "private seed requested but the model was trained without the "
        "private attention path");
  }
  std::mt19937_64 rng(rng_seed);
  const std::vector<std::size_t> picked =
      SubsampleIndices(accounts.size(), k, rng);
  ConfigSeed seed;
  seed.rng_seed = rng_seed;
  std::vector<encoder::EncodedInput> inputs;
  inputs.reserve(picked.size());
  for (std::size_t i : picked) {
    try {
      encoder::EncodedInput in =
          encoder::Tokenize(accounts[i], model.config.encoder, model.vocabs);
      inputs.push_back(std::move(in));
      ++seed.k_used;
    } catch (const MalformedEmail&) {
      ++seed.skipped;
    }
  }
  if (inputs.empty()) {
    throw MalformedEmail("compute_seed: none of the sampled emails parse");
  }
  const nn::Tensor values = EncodeValues(model, inputs);
  if (dp) {
    const double s = model.config.mix.clip_norm;
    const double delta =
        dp->delta > 0 ? dp->delta : dp::DeltaForLeak(accounts.size());
    const double q =
        static_cast<double>(picked.size()) / static_cast<double>(accounts.size());
    seed.dp = dp::AccountSeed(dp->z, s, q, delta);
    seed.psi =
        mixing::AttendDp(model.params, model.config.mix, values, s, dp->z, rng)
            .psi;
  } else if (model.private_variant()) {
    std::mt19937_64 unused(0);
    seed.psi = mixing::AttendDp(model.params, model.config.mix, values,
                                model.config.mix.clip_norm, 0.0, unused)
                   .psi;
  } else {
    seed.psi = mixing::AttendSoftmax(model.params, model.config.mix, values);
  }
  seed.id = SeedId(seed.psi, rng_seed);
  return seed;
}

pwmodel::SeededModel MakeSeeded(const UncmModel& model, const ConfigSeed& seed) {
  return pwmodel::MakeSeededModel(model.params, model.config.password, seed.psi,
                                  seed.id);
}

pwmodel::SeededModel MakeBaseline(const UncmModel& model) {
  return pwmodel::MakeBaselineModel(model.params, model.config.password);
}

}  // namespace uncm
