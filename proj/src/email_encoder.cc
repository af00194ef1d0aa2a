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

#include "uncm/email_encoder.h"

#include <algorithm>
#include <cctype>
#include <set>
#include <utility>

#include "uncm/cells.h"
#include "uncm/errors.h"

namespace uncm::encoder {

using nn::Graph;
using nn::Tensor;
using nn::Var;

std::string NormalizeEmail(std::string_view address) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!address.empty() && is_space(address.front())) address.remove_prefix(1);
  while (!address.empty() && is_space(address.back())) address.remove_suffix(1);
  std::string out(address);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

EmailParts ParseEmail(std::string_view address) {
  const std::string email = NormalizeEmail(address);
  if (email.empty()) throw MalformedEmail("empty email address");
  const std::size_t at = email.rfind('@');
  if (at == std::string::npos) {
    throw MalformedEmail("email address has no '@': " + email);
  }
  if (at == 0) throw MalformedEmail("email address has empty username");
  EmailParts parts;
  parts.username = email.substr(0, at);
  const std::size_t dot = email.rfind('.');
  if (dot == std::string::npos || dot < at) {
    parts.provider = email.substr(at);
  } else {
    parts.provider = email.substr(at, dot - at);
    parts.domain = email.substr(dot);
  }
  return parts;
}

std::string EmailTld(std::string_view address) {
  try {
    const EmailParts parts = ParseEmail(address);
    return parts.domain.empty() ? std::string() : parts.domain.substr(1);
  } catch (const MalformedEmail&) {
    return {};
  }
}

Vocab Vocab::FromCounts(const std::map<std::string, std::size_t>& counts,
                        std::size_t cutoff) {
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [token, n] : counts) {
    if (n >= cutoff) kept.emplace_back(token, n);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;
  });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [token, _] : kept) tokens.push_back(token);
  return FromTokens(std::move(tokens));
}

Vocab Vocab::FromTokens(std::vector<std::string> tokens) {
  Vocab v;
  v.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.index_.emplace(v.tokens_[i], static_cast<int>(i) + 1).second) {
      throw InvalidArgument("duplicate vocabulary token: " + v.tokens_[i]);
    }
  }
  return v;
}

int Vocab::Lookup(std::string_view token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kOov : it->second;
}

CharTable::CharTable(std::string chars) : chars_(std::move(chars)) {
  for (std::size_t i = 0; i < chars_.size(); ++i) {
    if (!index_.emplace(chars_[i], static_cast<int>(i) + 1).second) {
      throw InvalidArgument("duplicate character in table");
    }
  }
}

int CharTable::Lookup(char c) const {
  auto it = index_.find(c);
  return it == index_.end() ? kUnknown : it->second;
}

Vocabs BuildVocabularies(const LeakCollection& collection, std::size_t cutoff) {
  if (collection.NumAccounts() == 0) {
    throw InvalidArgument("cannot build vocabularies from an empty collection");
  }
  if (cutoff == 0) throw InvalidArgument("vocabulary cutoff must be >= 1");
  std::map<std::string, std::size_t> providers;
  std::map<std::string, std::size_t> domains;
  std::set<char> chars;
  for (const auto& leak : collection.leaks) {
    for (const auto& account : leak.accounts) {
      EmailParts parts;
      try {
        parts = ParseEmail(account.email);
      } catch (const MalformedEmail&) {
        continue;
      }
      ++providers[parts.provider];
      if (!parts.domain.empty()) ++domains[parts.domain];
      chars.insert(parts.username.begin(), parts.username.end());
      for (const auto& [_, text] : account.extra) {
        chars.insert(text.begin(), text.end());
      }
    }
  }
  Vocabs v;
  v.providers = Vocab::FromCounts(providers, cutoff);
  v.domains = Vocab::FromCounts(domains, cutoff);
  v.chars = CharTable(std::string(chars.begin(), chars.end()));
  return v;
}

namespace {

std::string GruPrefix(const std::string& modality) {
  return "enc/" + modality + "_gru";
}

// Runs a character GRU over variable-length sequences and returns the state
// after each sequence's last character (zeros for empty sequences).
Var RunCharGru(Graph& g, const std::string& prefix,
               const std::vector<const std::vector<int>*>& seqs,
               std::size_t hidden) {
  const std::size_t n = seqs.size();
  std::size_t max_len = 0;
  for (const auto* s : seqs) max_len = std::max(max_len, s->size());
  Var h = g.Input(Tensor::Zeros(n, hidden));
  const Var table = g.Param("enc/char_emb");
  for (std::size_t t = 0; t < max_len; ++t) {
    std::vector<int> ids(n, CharTable::kUnknown);
    Tensor mask = Tensor::Zeros(n, 1);
    bool all_active = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (t < seqs[i]->size()) {
        ids[i] = (*seqs[i])[t];
        mask[i] = 1.0;
      } else {
        all_active = false;
      }
    }
    const Var x = g.GatherRows(table, std::move(ids));
    const Var next = nn::GruStep(g, prefix, x, h);
    h = all_active ? next
                   : g.Add(h, g.Mul(g.Sub(next, h), g.Input(std::move(mask))));
  }
  return h;
}

}  // namespace

void InitSubEncoder(nn::ParamSet& params, const EncoderConfig& config,
                    const Vocabs& vocabs, std::mt19937_64& rng) {
  params.Add("enc/char_emb",
             nn::GlorotUniform(vocabs.chars.size(), config.char_embedding, rng));
  nn::InitGru(params, GruPrefix("username"), config.char_embedding,
              config.gru_output, rng);
  params.Add("enc/provider_emb", nn::GlorotUniform(vocabs.providers.size(),
                                                   config.provider_embedding,
                                                   rng));
  params.Add("enc/domain_emb", nn::GlorotUniform(vocabs.domains.size(),
                                                 config.domain_embedding, rng));
  for (const std::string& m : config.extra_modalities) {
    nn::InitGru(params, GruPrefix(m), config.char_embedding, config.gru_output,
                rng);
    nn::InitDense(params, "enc/" + m + "_proj", config.gru_output,
                  config.value_dim(), rng);
  }
}

EncodedInput Tokenize(const Account& account, const EncoderConfig& config,
                      const Vocabs& vocabs) {
  const EmailParts parts = ParseEmail(account.email);
  EncodedInput in;
  const std::size_t len = std::min(parts.username.size(), config.max_username);
  in.username.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    in.username.push_back(vocabs.chars.Lookup(parts.username[i]));
  }
  in.provider = vocabs.providers.Lookup(parts.provider);
  in.domain =
      parts.domain.empty() ? Vocab::kOov : vocabs.domains.Lookup(parts.domain);
  for (const std::string& m : config.extra_modalities) {
    std::vector<int> ids;
    auto it = account.extra.find(m);
    if (it != account.extra.end()) {
      const std::size_t n = std::min(it->second.size(), config.max_username);
      for (std::size_t i = 0; i < n; ++i) {
        ids.push_back(vocabs.chars.Lookup(it->second[i]));
      }
    }
    in.extras.push_back(std::move(ids));
  }
  return in;
}

Var EncodeBatch(Graph& g, const EncoderConfig& config,
                std::span<const EncodedInput> inputs) {
  if (inputs.empty()) throw InvalidArgument("encode: empty batch");
  const std::size_t n = inputs.size();
  std::vector<const std::vector<int>*> usernames;
  std::vector<int> providers;
  std::vector<int> domains;
  for (const auto& in : inputs) {
    if (in.username.empty()) throw MalformedEmail("empty username");
    usernames.push_back(&in.username);
    providers.push_back(in.provider);
    domains.push_back(in.domain);
  }
  const Var user =
      RunCharGru(g, GruPrefix("username"), usernames, config.gru_output);
  const Var prov = g.GatherRows(g.Param("enc/provider_emb"), providers);
  const Var dom = g.GatherRows(g.Param("enc/domain_emb"), domains);
  Var value = g.Concat({user, prov, dom});
  for (std::size_t m = 0; m < config.extra_modalities.size(); ++m) {
    std::vector<const std::vector<int>*> seqs;
    Tensor present = Tensor::Zeros(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
      seqs.push_back(&inputs[i].extras.at(m));
      present[i] = inputs[i].extras[m].empty() ? 0.0 : 1.0;
    }
    const std::string& name = config.extra_modalities[m];
    const Var h = RunCharGru(g, GruPrefix(name), seqs, config.gru_output);
    const Var proj = nn::Dense(g, "enc/" + name + "_proj", h);
    value = g.Add(value, g.Mul(proj, g.Input(std::move(present))));
  }
  return value;
}

Tensor EncodeAccount(const Account& account, const nn::ParamSet& params,
                     const EncoderConfig& config, const Vocabs& vocabs) {
  const EncodedInput in = Tokenize(account, config, vocabs);
  Graph g(&params);
  return g.value(EncodeBatch(g, config, std::span<const EncodedInput>(&in, 1)));
}

}  // namespace uncm::encoder
