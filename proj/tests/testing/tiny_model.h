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

#ifndef UNCM_TESTING_TINY_MODEL_H_
#define UNCM_TESTING_TINY_MODEL_H_

#include <string>
#include <vector>

#include "uncm/param_set.h"
#include "uncm/password_model.h"

namespace uncm::testing {

struct TinyModel {
  pwmodel::PasswordModelConfig config;
  nn::ParamSet params;
  nn::Tensor psi;  // the seed the model was fitted under
};

// Small conditional LSTM fitted for `steps` full-batch Adam steps to a skewed
// multiset over `alphabet`.
TinyModel TrainTinyModel(const std::string& alphabet, std::size_t max_len,
                         const std::vector<std::string>& corpus, int steps,
                         std::uint64_t seed);

// A skewed corpus over "abcde" with lengths up to 4.
std::vector<std::string> SkewedCorpus();

// 2000 strings over "abcde" of length 1..4 with independent, unevenly
// weighted characters; yields a model whose top few hundred strings all carry
// appreciable mass.
std::vector<std::string> BroadCorpus(std::uint64_t seed);

}  // namespace uncm::testing

#endif  // UNCM_TESTING_TINY_MODEL_H_
