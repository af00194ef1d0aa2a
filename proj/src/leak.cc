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

#include "uncm/leak.h"

#include <set>

#include "uncm/errors.h"

namespace uncm {

std::size_t LeakCollection::NumAccounts() const {
  std::size_t n = 0;
  for (const auto& leak : leaks) n += leak.size();
  return n;
}

void LeakCollection::CheckUniqueIds() const {
  std::set<std::string> seen;
  for (const auto& leak : leaks) {
    if (!seen.insert(leak.id).second) {
      throw InvalidArgument("duplicate leak id: " + leak.id);
    }
  }
}

std::vector<std::string> LeakCollection::AllPasswords() const {
  std::vector<std::string> out;
  out.reserve(NumAccounts());
  for (const auto& leak : leaks) {
    for (const auto& a : leak.accounts) out.push_back(a.password);
  }
  return out;
}

}  // namespace uncm
