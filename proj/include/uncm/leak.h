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

#ifndef UNCM_LEAK_H_
#define UNCM_LEAK_H_

#include <map>
#include <string>
#include <vector>

namespace uncm {

// One user of a credential database: auxiliary data plus the plaintext
// password. `extra` holds optional modalities such as "name".
struct Account {
  std::string email;
  std::string password;
  std::map<std::string, std::string> extra;

  friend bool operator==(const Account&, const Account&) = default;
};

struct LeakMetadata {
  std::string tld;        // site top-level domain without the dot, lowercase
  std::string category;   // optional label
  std::string source;     // file or generator tag
  std::string community;  // ground truth for synthetic leaks

  friend bool operator==(const LeakMetadata&, const LeakMetadata&) = default;
};

struct CredentialLeak {
  std::string id;
  std::vector<Account> accounts;
  LeakMetadata metadata;

  std::size_t size() const { return accounts.size(); }
  friend bool operator==(const CredentialLeak&, const CredentialLeak&) = default;
};

struct LeakCollection {
  std::vector<CredentialLeak> leaks;
  std::vector<std::string> notes;

  std::size_t NumAccounts() const;
  // Throws InvalidArgument on duplicate leak ids.
  void CheckUniqueIds() const;
  // All passwords of all leaks, in collection order.
  std::vector<std::string> AllPasswords() const;

  friend bool operator==(const LeakCollection& a, const LeakCollection& b) {
    return a.leaks == b.leaks;
  }
};

}  // namespace uncm

#endif  // UNCM_LEAK_H_
