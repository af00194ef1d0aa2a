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

#include <algorithm>
#include <cmath>
#include <set>

#include "uncm/errors.h"
#include "uncm/leak_pipeline.h"

namespace uncm::pipeline {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxWordLength = 10;

std::uint64_t NameHash(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Distinct words of two or three syllables, deterministic per name.
std::vector<std::string> WordsFromSyllables(const std::vector<std::string>& syl,
                                            std::size_t count,
                                            const std::string& name) {
  if (syl.size() < 2) throw InvalidArgument("synth: need at least 2 syllables");
  std::mt19937_64 rng(NameHash(name));
  std::uniform_int_distribution<std::size_t> pick(0, syl.size() - 1);
  std::bernoulli_distribution three(0.3);
  std::set<std::string> seen;
  std::vector<std::string> words;
  std::size_t attempts = 0;
  while (words.size() < count && attempts++ < 100 * count) {
    std::string w = syl[pick(rng)] + syl[pick(rng)];
    if (three(rng)) w += syl[pick(rng)];
    if (w.size() > kMaxWordLength || !seen.insert(w).second) continue;
    words.push_back(w);
  }
  return words;
}

std::size_t AsCount(const json& v, const char* key) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw InvalidArgument(std::string("synth: ") + key + " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::size_t Count(const json& j, const char* key) { return AsCount(j.at(key), key); }

std::pair<std::size_t, std::size_t> SizeRange(const json& j, const char* key) {
  const json& r = j.at(key);
  if (!r.is_array() || r.size() != 2) {
    throw InvalidArgument(std::string("synth: bad range for ") + key);
  }
  const std::vector<std::size_t> v = {AsCount(r[0], key), AsCount(r[1], key)};
  if (v.size() != 2 || v[0] == 0 || v[0] > v[1]) {
    throw InvalidArgument(std::string("synth: bad range for ") + key);
  }
  return {v[0], v[1]};
}

template <typename T>
const T& Pick(const std::vector<T>& v, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

std::string RandomLetters(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  std::uniform_int_distribution<std::size_t> len(lo, hi);
  std::uniform_int_distribution<int> letter('a', 'z');
  std::string s(len(rng), 'a');
  for (char& c : s) c = static_cast<char>(letter(rng));
  return s;
}

std::string CommunityEmail(const SynthCommunity& c, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> number(0, 9999);
  return Pick(c.username_tokens, rng) + std::to_string(number(rng)) +
         Pick(c.providers, rng) + Pick(c.domains, rng);
}

std::string NeutralEmail(const SynthSpec& spec, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> number(0, 99);
  return RandomLetters(rng, 5, 9) + std::to_string(number(rng)) +
         Pick(spec.neutral_providers, rng) + Pick(spec.neutral_domains, rng);
}

void Validate(const SynthSpec& spec) {
  if (spec.communities.empty()) throw InvalidArgument("synth: no communities");
  for (const SynthCommunity& c : spec.communities) {
    if (c.providers.empty() || c.domains.empty() || c.username_tokens.empty() ||
        c.tokens.empty() || (c.suffix_rate > 0 && c.suffixes.empty())) {
      throw InvalidArgument("synth: community '" + c.name + "' has an empty pool");
    }
    if (c.min_size == 0 || c.min_size > c.max_size) {
      throw InvalidArgument("synth: community '" + c.name + "' has a bad size range");
    }
    if (c.min_signal < 0 || c.max_signal > 1 || c.min_signal > c.max_signal) {
      throw InvalidArgument("synth: community '" + c.name + "' has a bad signal range");
    }
    if (c.suffix_rate < 0 || c.suffix_rate > 1 || c.zipf < 0 ||
        c.min_tokens == 0 || c.min_tokens > c.max_tokens) {
      throw InvalidArgument("synth: community '" + c.name + "' has bad weights");
    }
  }
  const bool needs_neutral =
      spec.signal_free_leaks > 0 ||
      std::any_of(spec.communities.begin(), spec.communities.end(),
                  [](const SynthCommunity& c) { return c.min_signal < 1; });
  if (needs_neutral &&
      (spec.neutral_providers.empty() || spec.neutral_domains.empty())) {
    throw InvalidArgument("synth: neutral email pools required");
  }
  if (spec.signal_free_leaks > 0 &&
      (spec.signal_free_min_size == 0 ||
       spec.signal_free_min_size > spec.signal_free_max_size)) {
    throw InvalidArgument("synth: bad signal-free size range");
  }
}

}  // namespace

SynthSpec SynthSpec::FromJson(const json& j) {
  SynthSpec spec;
  try {
    for (const json& cj : j.at("communities")) {
      SynthCommunity c;
      c.name = cj.at("name").get<std::string>();
      c.site_tld = cj.value("site_tld", "");
      c.providers = cj.at("providers").get<std::vector<std::string>>();
      c.domains = cj.at("domains").get<std::vector<std::string>>();
      c.tokens = cj.at("tokens").get<std::vector<std::string>>();
      if (cj.contains("username_tokens")) {
        c.username_tokens = cj["username_tokens"].get<std::vector<std::string>>();
      } else {
        c.username_tokens = WordsFromSyllables(c.tokens, 50, c.name + "/users");
      }
      if (cj.contains("length")) {
        std::tie(c.min_tokens, c.max_tokens) = SizeRange(cj, "length");
      }
      c.suffixes = cj.value("suffixes", std::vector<std::string>{});
      c.suffix_rate = c.suffixes.empty() ? 0.0 : cj.value("suffix_rate", 0.0);
      c.zipf = cj.value("zipf", 0.3);
      c.leaks = Count(cj, "leaks");
      std::tie(c.min_size, c.max_size) = SizeRange(cj, "size");
      if (cj.contains("signal")) {
        const auto s = cj["signal"].get<std::vector<double>>();
        if (s.size() != 2) throw InvalidArgument("synth: signal needs [min, max]");
        c.min_signal = s[0];
        c.max_signal = s[1];
      }
      spec.communities.push_back(std::move(c));
    }
    if (j.contains("neutral")) {
      spec.neutral_providers =
          j["neutral"].at("providers").get<std::vector<std::string>>();
      spec.neutral_domains =
          j["neutral"].at("domains").get<std::vector<std::string>>();
    }
    if (j.contains("signal_free")) {
      spec.signal_free_leaks = Count(j["signal_free"], "leaks");
      if (j["signal_free"].contains("size")) {
        std::tie(spec.signal_free_min_size, spec.signal_free_max_size) =
            SizeRange(j["signal_free"], "size");
      }
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("synth spec: ") + e.what());
  }
  Validate(spec);
  return spec;
}

json SynthSpec::ToJson() const {
  json j;
  j["communities"] = json::array();
  for (const SynthCommunity& c : communities) {
    j["communities"].push_back({{"name", c.name},
                                {"site_tld", c.site_tld},
                                {"providers", c.providers},
                                {"domains", c.domains},
                                {"username_tokens", c.username_tokens},
                                {"tokens", c.tokens},
                                {"length", {c.min_tokens, c.max_tokens}},
                                {"suffixes", c.suffixes},
                                {"suffix_rate", c.suffix_rate},
                                {"zipf", c.zipf},
                                {"leaks", c.leaks},
                                {"size", {c.min_size, c.max_size}},
                                {"signal", {c.min_signal, c.max_signal}}});
  }
  j["neutral"] = {{"providers", neutral_providers}, {"domains", neutral_domains}};
  j["signal_free"] = {{"leaks", signal_free_leaks},
                      {"size", {signal_free_min_size, signal_free_max_size}}};
  return j;
}

SynthSpec DefaultSynthSpec() {
  const json j = {
      {"communities",
       {{{"name", "kiri"},
         {"site_tld", "jp"},
         {"providers", {"@kmail", "@hoshi", "@sakuranet"}},
         {"domains", {".jp"}},
         {"tokens",
          {"ka", "ki", "ko", "ri", "ra", "mo", "na", "to", "yu", "shi", "ha",
           "mi", "su", "ne"}},
         {"zipf", 0.3},
         {"length", {3, 3}},
         {"leaks", 50},
         {"size", {500, 500}},
         {"signal", {0.8, 1.0}}},
        {{"name", "wald"},
         {"site_tld", "de"},
         {"providers", {"@postde", "@webfrei", "@tmail"}},
         {"domains", {".de"}},
         {"tokens",
          {"ber", "wal", "stein", "hof", "lin", "burg", "man", "schu", "gel",
           "dorf", "ler", "ent", "pf", "zug"}},
         {"zipf", 0.3},
         {"length", {3, 3}},
         {"leaks", 50},
         {"size", {500, 500}},
         {"signal", {0.8, 1.0}}}}},
      {"neutral",
       {{"providers", {"@gmail", "@yahoo", "@outlook"}},
        {"domains", {".com", ".net"}}}},
      {"signal_free", {{"leaks", 0}, {"size", {500, 500}}}}};
  return SynthSpec::FromJson(j);
}

std::string SynthPassword(const SynthCommunity& c, std::mt19937_64& rng) {
  std::vector<double> weights(c.tokens.size());
  for (std::size_t r = 0; r < weights.size(); ++r) {
    weights[r] = std::pow(static_cast<double>(r + 1), -c.zipf);
  }
  std::discrete_distribution<std::size_t> token(weights.begin(), weights.end());
  const std::size_t n =
      std::uniform_int_distribution<std::size_t>(c.min_tokens, c.max_tokens)(rng);
  std::string pw;
  for (std::size_t i = 0; i < n; ++i) pw += c.tokens[token(rng)];
  if (c.suffix_rate > 0 && std::bernoulli_distribution(c.suffix_rate)(rng)) {
    pw += Pick(c.suffixes, rng);
  }
  return pw;
}

LeakCollection SynthGenerate(const SynthSpec& spec, std::mt19937_64& rng) {
  Validate(spec);
  LeakCollection out;
  out.notes.push_back("synthetic collection");
  auto size_of = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  for (const SynthCommunity& c : spec.communities) {
    for (std::size_t l = 0; l < c.leaks; ++l) {
      CredentialLeak leak;
      leak.id = c.name + "-" + std::to_string(l);
      leak.metadata = {c.site_tld, "", "synth", c.name};
      const double signal =
          std::uniform_real_distribution<double>(c.min_signal, c.max_signal)(rng);
      std::bernoulli_distribution community_email(signal);
      const std::size_t n = size_of(c.min_size, c.max_size);
      for (std::size_t i = 0; i < n; ++i) {
        Account a;
        a.email = community_email(rng) ? CommunityEmail(c, rng)
                                       : NeutralEmail(spec, rng);
        a.password = SynthPassword(c, rng);
        leak.accounts.push_back(std::move(a));
      }
      out.leaks.push_back(std::move(leak));
    }
  }
  for (std::size_t l = 0; l < spec.signal_free_leaks; ++l) {
    CredentialLeak leak;
    leak.id = "mixed-" + std::to_string(l);
    leak.metadata = {"com", "", "synth", std::string(kSignalFreeCommunity)};
    const std::size_t n =
        size_of(spec.signal_free_min_size, spec.signal_free_max_size);
    for (std::size_t i = 0; i < n; ++i) {
      Account a;
      a.email = NeutralEmail(spec, rng);
      a.password = SynthPassword(Pick(spec.communities, rng), rng);
      leak.accounts.push_back(std::move(a));
    }
    out.leaks.push_back(std::move(leak));
  }
  return out;
}

}  // namespace uncm::pipeline
