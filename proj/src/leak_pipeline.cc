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

#include "uncm/leak_pipeline.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <numeric>
#include <regex>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "uncm/email_encoder.h"
#include "uncm/errors.h"

namespace uncm::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kManifestName[] = "manifest.json";

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view StripCr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

LeakFormat FormatFromExtension(const fs::path& p) {
  const std::string ext = Lower(p.extension().string());
  if (ext == ".tsv") return LeakFormat::kTsv;
  if (ext == ".jsonl" || ext == ".json") return LeakFormat::kJsonLines;
  return LeakFormat::kColonLines;
}

bool ParseLine(LeakFormat format, std::string_view line, Account& out) {
  switch (format) {
    case LeakFormat::kTsv:
      return ParseTsvLine(line, out);
    case LeakFormat::kJsonLines:
      return ParseJsonLine(line, out);
    default:
      return ParseColonLine(line, out);
  }
}

std::string NormalizedEmail(const std::string& email) {
  return encoder::NormalizeEmail(email);
}

}  // namespace

LeakFormat ParseLeakFormat(std::string_view name) {
  if (name == "auto") return LeakFormat::kAuto;
  if (name == "colon-lines" || name == "colon") return LeakFormat::kColonLines;
  if (name == "tsv") return LeakFormat::kTsv;
  if (name == "json-lines" || name == "jsonl") return LeakFormat::kJsonLines;
  throw InvalidArgument("unknown leak format: " + std::string(name));
}

bool ParseColonLine(std::string_view line, Account& out) {
  line = StripCr(line);
  const std::size_t sep = line.find(':');
  if (sep == std::string_view::npos || sep == 0) return false;
  out = Account{std::string(line.substr(0, sep)),
                std::string(line.substr(sep + 1)), {}};
  return true;
}

bool ParseTsvLine(std::string_view line, Account& out) {
  line = StripCr(line);
  const std::size_t t1 = line.find('\t');
  if (t1 == std::string_view::npos || t1 == 0) return false;
  const std::size_t t2 = line.find('\t', t1 + 1);
  Account a;
  a.email = std::string(line.substr(0, t1));
  if (t2 == std::string_view::npos) {
    a.password = std::string(line.substr(t1 + 1));
  } else {
    a.password = std::string(line.substr(t1 + 1, t2 - t1 - 1));
    const json extra = json::parse(line.substr(t2 + 1), nullptr, false);
    if (!extra.is_object()) return false;
    for (const auto& [key, value] : extra.items()) {
      if (value.is_string()) a.extra[key] = value.get<std::string>();
    }
  }
  out = std::move(a);
  return true;
}

bool ParseJsonLine(std::string_view line, Account& out) {
  const json j = json::parse(line, nullptr, false);
  if (!j.is_object()) return false;
  const auto email = j.find("email");
  const auto password = j.find("password");
  if (email == j.end() || password == j.end() || !email->is_string() ||
      !password->is_string()) {
    return false;
  }
  Account a;
  a.email = email->get<std::string>();
  a.password = password->get<std::string>();
  if (a.email.empty()) return false;
  for (const auto& [key, value] : j.items()) {
    if (key != "email" && key != "password" && value.is_string()) {
      a.extra[key] = value.get<std::string>();
    }
  }
  out = std::move(a);
  return true;
}

std::pair<std::string, std::string> SplitLeakFilename(std::string_view filename) {
  std::string_view stem = filename;
  const std::size_t ext = stem.rfind('.');
  if (ext != std::string_view::npos) stem = stem.substr(0, ext);
  const std::size_t tld = stem.rfind('.');
  if (tld == std::string_view::npos || tld == 0) return {std::string(stem), ""};
  return {std::string(stem.substr(0, tld)), Lower(stem.substr(tld + 1))};
}

LeakCollection LoadCollection(const fs::path& path, LeakFormat format,
                              LoadStats* stats) {
  if (!fs::exists(path)) throw NotFound("no such leak path: " + path.string());
  std::vector<fs::path> files;
  json manifest;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (!entry.is_regular_file()) continue;
      if (entry.path().filename() == kManifestName) {
        std::ifstream in(entry.path());
        manifest = json::parse(in, nullptr, false);
        continue;
      }
      files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  LoadStats local;
  LeakCollection out;
  std::map<std::string, json> meta;
  if (manifest.is_object() && manifest.contains("leaks")) {
    for (const auto& m : manifest["leaks"]) meta[m.value("id", "")] = m;
  }
  if (manifest.is_object() && manifest.contains("notes")) {
    out.notes = manifest["notes"].get<std::vector<std::string>>();
  }
  for (const fs::path& file : files) {
    std::ifstream in(file);
    if (!in) throw NotFound("cannot read leak file: " + file.string());
    ++local.files;
    const LeakFormat f =
        format == LeakFormat::kAuto ? FormatFromExtension(file) : format;
    CredentialLeak leak;
    auto [id, tld] = SplitLeakFilename(file.filename().string());
    leak.id = id;
    leak.metadata.tld = tld;
    leak.metadata.source = file.filename().string();
    std::string line;
    while (std::getline(in, line)) {
      if (StripCr(line).empty()) continue;
      Account a;
      if (ParseLine(f, line, a)) {
        leak.accounts.push_back(std::move(a));
      } else {
        ++local.malformed_lines;
      }
    }
    if (leak.accounts.empty()) {
      ++local.skipped_files;
      continue;
    }
    if (auto it = meta.find(leak.id); it != meta.end()) {
      leak.metadata.category = it->second.value("category", "");
      leak.metadata.community = it->second.value("community", "");
      leak.metadata.source = it->second.value("source", leak.metadata.source);
      if (it->second.contains("tld")) leak.metadata.tld = it->second["tld"];
    }
    out.leaks.push_back(std::move(leak));
  }
  out.CheckUniqueIds();
  if (stats) *stats = local;
  return out;
}

void SaveCollection(const LeakCollection& collection, const fs::path& dir) {
  collection.CheckUniqueIds();
  fs::create_directories(dir);
  json manifest = {{"notes", collection.notes}, {"leaks", json::array()}};
  for (const CredentialLeak& leak : collection.leaks) {
    const std::string name =
        leak.id + "." + (leak.metadata.tld.empty() ? "none" : leak.metadata.tld) +
        ".jsonl";
    std::ofstream out(dir / name);
    if (!out) throw InvalidArgument("cannot write " + (dir / name).string());
    for (const Account& a : leak.accounts) {
      json j = {{"email", a.email}, {"password", a.password}};
      for (const auto& [k, v] : a.extra) j[k] = v;
      out << j.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
    }
    manifest["leaks"].push_back({{"id", leak.id},
                                 {"tld", leak.metadata.tld},
                                 {"category", leak.metadata.category},
                                 {"source", leak.metadata.source},
                                 {"community", leak.metadata.community}});
  }
  std::ofstream m(dir / kManifestName);
  m << manifest.dump(2) << '\n';
}

bool LooksLikeHash(std::string_view password) {
  static const std::regex hex("^(?:[0-9a-f]{32}|[0-9a-f]{40}|[0-9a-f]{64})$");
  if (password.substr(0, 2) == "$2") return true;
  return std::regex_match(password.begin(), password.end(), hex);
}

json CleanReport::ToJson() const {
  return {{"hash_accounts_dropped", hash_accounts_dropped},
          {"frequent_email_accounts_dropped", frequent_email_accounts_dropped},
          {"small_leaks_dropped", small_leaks_dropped},
          {"duplicate_leaks_dropped", duplicate_leaks_dropped},
          {"anomalous_leaks_dropped", anomalous_leaks_dropped},
          {"leaks_in", leaks_in},
          {"leaks_out", leaks_out},
          {"accounts_in", accounts_in},
          {"accounts_out", accounts_out}};
}

double PasswordOverlap(const CredentialLeak& a, const CredentialLeak& b) {
  if (a.accounts.empty() || b.accounts.empty()) return 0.0;
  std::unordered_map<std::string_view, std::size_t> counts;
  for (const Account& x : a.accounts) ++counts[x.password];
  std::size_t common = 0;
  for (const Account& y : b.accounts) {
    auto it = counts.find(y.password);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  return static_cast<double>(common) /
         static_cast<double>(std::min(a.size(), b.size()));
}

LeakCollection Clean(const LeakCollection& collection, const CleanRules& rules,
                     CleanReport* report) {
  CleanReport r;
  r.leaks_in = collection.leaks.size();
  r.accounts_in = collection.NumAccounts();
  LeakCollection out;
  out.notes = collection.notes;
  out.leaks = collection.leaks;

  if (rules.drop_hashes) {
    for (CredentialLeak& leak : out.leaks) {
      const std::size_t before = leak.accounts.size();
      std::erase_if(leak.accounts,
                    [](const Account& a) { return LooksLikeHash(a.password); });
      r.hash_accounts_dropped += before - leak.accounts.size();
    }
  }

  std::unordered_map<std::string, std::size_t> email_leaks;
  for (const CredentialLeak& leak : out.leaks) {
    std::unordered_set<std::string> seen;
    for (const Account& a : leak.accounts) seen.insert(NormalizedEmail(a.email));
    for (const auto& e : seen) ++email_leaks[e];
  }
  for (CredentialLeak& leak : out.leaks) {
    const std::size_t before = leak.accounts.size();
    std::erase_if(leak.accounts, [&](const Account& a) {
      return email_leaks[NormalizedEmail(a.email)] > rules.max_email_leaks;
    });
    r.frequent_email_accounts_dropped += before - leak.accounts.size();
  }

  std::erase_if(out.leaks, [&](const CredentialLeak& leak) {
    if (leak.size() >= rules.min_leak_size) return false;
    r.small_leaks_dropped.push_back(leak.id);
    return true;
  });

  std::vector<std::size_t> order(out.leaks.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (out.leaks[a].size() != out.leaks[b].size()) {
      return out.leaks[a].size() > out.leaks[b].size();
    }
    return out.leaks[a].id < out.leaks[b].id;
  });
  std::vector<std::size_t> kept;
  std::vector<bool> keep(out.leaks.size(), false);
  for (std::size_t i : order) {
    const bool duplicate = std::any_of(kept.begin(), kept.end(), [&](std::size_t j) {
      return PasswordOverlap(out.leaks[i], out.leaks[j]) > rules.overlap_threshold;
    });
    if (duplicate) {
      r.duplicate_leaks_dropped.push_back(out.leaks[i].id);
    } else {
      kept.push_back(i);
      keep[i] = true;
    }
  }
  std::vector<CredentialLeak> survivors;
  for (std::size_t i = 0; i < out.leaks.size(); ++i) {
    if (!keep[i]) continue;
    if (rules.anomaly && rules.anomaly(out.leaks[i])) {
      r.anomalous_leaks_dropped.push_back(out.leaks[i].id);
      continue;
    }
    survivors.push_back(std::move(out.leaks[i]));
  }
  out.leaks = std::move(survivors);
  r.leaks_out = out.leaks.size();
  r.accounts_out = out.NumAccounts();
  if (report) *report = std::move(r);
  return out;
}

std::pair<LeakCollection, LeakCollection> SplitTrainTest(
    const LeakCollection& collection, double test_fraction,
    std::mt19937_64& rng) {
  const std::size_t n = collection.leaks.size();
  if (n < 2) throw InvalidArgument("split needs at least two leaks");
  if (!(test_fraction > 0 && test_fraction < 1)) {
    throw InvalidArgument("test fraction must lie within (0, 1)");
  }
  const auto n_test = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(n))));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> is_test(n, false);
  for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;

  LeakCollection train;
  LeakCollection test;
  train.notes = test.notes = collection.notes;
  std::unordered_set<std::string> train_emails;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_test[i]) continue;
    train.leaks.push_back(collection.leaks[i]);
    for (const Account& a : collection.leaks[i].accounts) {
      train_emails.insert(NormalizedEmail(a.email));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_test[i]) continue;
    CredentialLeak leak = collection.leaks[i];
    std::erase_if(leak.accounts, [&](const Account& a) {
      return train_emails.count(NormalizedEmail(a.email)) > 0;
    });
    if (!leak.accounts.empty()) test.leaks.push_back(std::move(leak));
  }
  return {std::move(train), std::move(test)};
}

LeakCollection FilterByTld(const LeakCollection& collection, std::string_view tld) {
  std::string want = Lower(tld);
  if (!want.empty() && want.front() == '.') want.erase(0, 1);
  LeakCollection out;
  out.notes = collection.notes;
  for (const CredentialLeak& leak : collection.leaks) {
    if (Lower(leak.metadata.tld) == want) out.leaks.push_back(leak);
  }
  return out;
}

bool IsEnglishLeak(const CredentialLeak& leak) {
  static const std::set<std::string> kEnglish = {"us", "uk", "au",
                                                 "net", "org", "com"};
  if (!kEnglish.count(Lower(leak.metadata.tld))) return false;
  if (leak.accounts.empty()) return false;
  std::size_t foreign = 0;
  for (const Account& a : leak.accounts) {
    if (!kEnglish.count(encoder::EmailTld(a.email))) ++foreign;
  }
  return static_cast<double>(foreign) <=
         kForeignEmailLimit * static_cast<double>(leak.accounts.size());
}

LeakCollection FilterEnglish(const LeakCollection& collection) {
  LeakCollection out;
  out.notes = collection.notes;
  for (const CredentialLeak& leak : collection.leaks) {
    if (IsEnglishLeak(leak)) out.leaks.push_back(leak);
  }
  return out;
}

}  // namespace uncm::pipeline
