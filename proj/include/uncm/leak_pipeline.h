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

#ifndef UNCM_LEAK_PIPELINE_H_
#define UNCM_LEAK_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "uncm/leak.h"

namespace uncm::pipeline {

enum class LeakFormat { kAuto, kColonLines, kTsv, kJsonLines };

LeakFormat ParseLeakFormat(std::string_view name);

struct LoadStats {
  std::size_t files = 0;
  std::size_t skipped_files = 0;
  std::size_t malformed_lines = 0;
};

// Parses one line; returns false for lines that do not hold an account.
bool ParseColonLine(std::string_view line, Account& out);
bool ParseTsvLine(std::string_view line, Account& out);
bool ParseJsonLine(std::string_view line, Account& out);

// "<leakid>.<tld>.<ext>" -> {leakid, tld}. tld is empty when absent.
std::pair<std::string, std::string> SplitLeakFilename(std::string_view filename);

// Loads a single leak file or every leak file of a directory (sorted by name).
// A manifest.json written by SaveCollection restores metadata. Files with no
// parseable account are skipped. Throws NotFound for a missing path.
LeakCollection LoadCollection(const std::filesystem::path& path,
                              LeakFormat format = LeakFormat::kAuto,
                              LoadStats* stats = nullptr);

// Writes one json-lines file per leak plus manifest.json.
void SaveCollection(const LeakCollection& collection,
                    const std::filesystem::path& dir);

// MD5, SHA-1 and SHA-256 lowercase hex digests, and bcrypt strings.
bool LooksLikeHash(std::string_view password);

struct CleanRules {
  bool drop_hashes = true;
  std::size_t max_email_leaks = 150;
  std::size_t min_leak_size = 100;
  double overlap_threshold = 0.9;
  // Optional anomaly hook; leaks for which it returns true are dropped last.
  std::function<bool(const CredentialLeak&)> anomaly;
};

struct CleanReport {
  std::size_t hash_accounts_dropped = 0;
  std::size_t frequent_email_accounts_dropped = 0;
  std::vector<std::string> small_leaks_dropped;
  std::vector<std::string> duplicate_leaks_dropped;
  std::vector<std::string> anomalous_leaks_dropped;
  std::size_t leaks_in = 0;
  std::size_t leaks_out = 0;
  std::size_t accounts_in = 0;
  std::size_t accounts_out = 0;

  nlohmann::json ToJson() const;
};

// |A n B| / min(|A|, |B|) over password multisets.
double PasswordOverlap(const CredentialLeak& a, const CredentialLeak& b);

LeakCollection Clean(const LeakCollection& collection, const CleanRules& rules,
                     CleanReport* report = nullptr);

// Leak-level random split; test accounts whose email also occurs in train are
// removed and emptied test leaks dropped. Needs at least two leaks.
std::pair<LeakCollection, LeakCollection> SplitTrainTest(
    const LeakCollection& collection, double test_fraction,
    std::mt19937_64& rng);

LeakCollection FilterByTld(const LeakCollection& collection, std::string_view tld);

inline constexpr double kForeignEmailLimit = 0.02;
// Site tld in {us, uk, au, net, org, com} and at most 2% of account emails
// with a tld outside that set.
bool IsEnglishLeak(const CredentialLeak& leak);
LeakCollection FilterEnglish(const LeakCollection& collection);

// Synthetic collections in which email features predict the password
// distribution. See DefaultSynthSpec for the JSON schema.
// Community label of generated leaks whose emails carry no community signal.
inline constexpr std::string_view kSignalFreeCommunity = "mixed";

struct SynthCommunity {
  std::string name;
  std::string site_tld;
  std::vector<std::string> providers;  // with leading '@'
  std::vector<std::string> domains;    // with leading '.'
  std::vector<std::string> username_tokens;
  // Passwords concatenate `min_tokens`..`max_tokens` Zipf-weighted tokens and
  // optionally one suffix.
  std::vector<std::string> tokens;
  double zipf = 0.3;
  std::size_t min_tokens = 3;
  std::size_t max_tokens = 3;
  std::vector<std::string> suffixes;
  double suffix_rate = 0.0;
  std::size_t leaks = 0;
  std::size_t min_size = 0;
  std::size_t max_size = 0;
  double min_signal = 1.0;  // fraction of accounts with community emails
  double max_signal = 1.0;
};

struct SynthSpec {
  std::vector<SynthCommunity> communities;
  std::vector<std::string> neutral_providers;
  std::vector<std::string> neutral_domains;
  // Leaks with neutral emails and passwords from the community mixture.
  std::size_t signal_free_leaks = 0;
  std::size_t signal_free_min_size = 0;
  std::size_t signal_free_max_size = 0;

  static SynthSpec FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

// Two communities of 50 leaks with 500 accounts each.
SynthSpec DefaultSynthSpec();

// Draws one password of a community.
std::string SynthPassword(const SynthCommunity& community, std::mt19937_64& rng);

LeakCollection SynthGenerate(const SynthSpec& spec, std::mt19937_64& rng);

}  // namespace uncm::pipeline

#endif  // UNCM_LEAK_PIPELINE_H_
