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

#ifndef UNCM_EMAIL_ENCODER_H_
#define UNCM_EMAIL_ENCODER_H_

#include <cstddef>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uncm/graph.h"
#include "uncm/leak.h"
#include "uncm/param_set.h"

namespace uncm::encoder {

// Segments of an email address. provider keeps its leading '@' and domain
// its leading '.', so username + provider + domain is the normalised address.
struct EmailParts {
  std::string username;
  std::string provider;
  std::string domain;

  std::string Joined() const { return username + provider + domain; }
  friend bool operator==(const EmailParts&, const EmailParts&) = default;
};

// Lowercases and trims ASCII whitespace.
std::string NormalizeEmail(std::string_view address);

// Splits at the last '@' and the last '.' after it. Throws MalformedEmail when
// there is no '@' or the username is empty.
EmailParts ParseEmail(std::string_view address);

// Top-level domain of an address without the dot ("fr" for "a@b.fr"); empty
// when the address has no domain segment or does not parse.
std::string EmailTld(std::string_view address);

// Dense string -> index map. Index 0 is the out-of-vocabulary slot.
class Vocab {
 public:
  static constexpr int kOov = 0;

  Vocab() = default;
  // Keeps tokens whose count is >= cutoff, ordered by descending count then
  // lexicographically.
  static Vocab FromCounts(const std::map<std::string, std::size_t>& counts,
                          std::size_t cutoff);
  // Tokens in index order, OOV excluded.
  static Vocab FromTokens(std::vector<std::string> tokens);

  int Lookup(std::string_view token) const;
  std::size_t size() const { return tokens_.size() + 1; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int, std::less<>> index_;
};

// Character table for usernames and text modalities. Index 0 is the
// unknown-character slot.
class CharTable {
 public:
  static constexpr int kUnknown = 0;

  CharTable() = default;
  explicit CharTable(std::string chars);

  int Lookup(char c) const;
  std::size_t size() const { return chars_.size() + 1; }
  const std::string& chars() const { return chars_; }

  friend bool operator==(const CharTable& a, const CharTable& b) {
    return a.chars_ == b.chars_;
  }

 private:
  std::string chars_;
  std::map<char, int> index_;
};

struct Vocabs {
  Vocab providers;
  Vocab domains;
  CharTable chars;

  friend bool operator==(const Vocabs&, const Vocabs&) = default;
};

// Provider and domain vocabularies keep strings seen in at least `cutoff`
// accounts; the character table holds every character observed in usernames
// and extra modalities. Throws InvalidArgument on an empty collection.
Vocabs BuildVocabularies(const LeakCollection& collection, std::size_t cutoff);

struct EncoderConfig {
  std::size_t char_embedding = 16;
  std::size_t gru_output = 32;
  std::size_t provider_embedding = 32;
  std::size_t domain_embedding = 32;
  std::size_t max_username = 40;
  // Text modalities read from Account::extra, each encoded by its own GRU and
  // added elementwise to the email vector.
  std::vector<std::string> extra_modalities;

  std::size_t value_dim() const {
    return gru_output + provider_embedding + domain_embedding;
  }
};

void InitSubEncoder(nn::ParamSet& params, const EncoderConfig& config,
                    const Vocabs& vocabs, std::mt19937_64& rng);

// Tokenised form of one account, ready for batching.
struct EncodedInput {
  std::vector<int> username;  // character ids, truncated
  int provider = Vocab::kOov;
  int domain = Vocab::kOov;
  std::vector<std::vector<int>> extras;  // per configured modality; may be empty
};

// Throws MalformedEmail.
EncodedInput Tokenize(const Account& account, const EncoderConfig& config,
                      const Vocabs& vocabs);

// Value vectors for a batch, one row per input: n x value_dim.
nn::Var EncodeBatch(nn::Graph& g, const EncoderConfig& config,
                    std::span<const EncodedInput> inputs);

// Convenience wrapper for a single account; returns 1 x value_dim.
nn::Tensor EncodeAccount(const Account& account, const nn::ParamSet& params,
                         const EncoderConfig& config, const Vocabs& vocabs);

}  // namespace uncm::encoder

#endif  // UNCM_EMAIL_ENCODER_H_
