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

#include "uncm/password_distribution.h"

#include <limits>

namespace uncm {

std::vector<double> PasswordDistribution::LogProbs(
    std::span<const std::string> passwords) const {
  std::vector<double> out;
  out.reserve(passwords.size());
  for (const auto& p : passwords) {
    out.push_back(InKeySpace(p) ? LogProb(p)
                                : -std::numeric_limits<double>::infinity());
  }
  return out;
}

}  // namespace uncm
