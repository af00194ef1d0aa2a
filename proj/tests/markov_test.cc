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

#include "uncm/markov.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "uncm/errors.h"
#include "uncm/guess_estimator.h"

namespace uncm::markov {
namespace {

std::vector<std::string> AllStrings(const std::string& alphabet,
                                    std::size_t max_len) {
  std::vector<std::string> out = {""};
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].size() == max_len) continue;
    for (char c : alphabet) out.push_back(out[i] + c);
  }
  return out;
}

TEST(Markov, OrderTwoHandExample) {
  MarkovConfig c;
  c.order = 2;
  c.smoothing = 0.0;
  const std::vector<std::string> train = {"ab", "ac"};
  const MarkovModel m = MarkovModel::Train(train, c);
  EXPECT_NEAR(std::exp(m.LogProb("ab")), 0.5, 1e-12);
  EXPECT_NEAR(m.ConditionalProb("", 'a'), 1.0, 1e-12);
  EXPECT_NEAR(m.ConditionalProb("a", 'c'), 0.5, 1e-12);
  EXPECT_NEAR(m.ConditionalProb("ab", '\0'), 1.0, 1e-12);
}

TEST(Markov, UnsmoothedUnseenIsNegativeInfinity) {
  MarkovConfig c;
  c.order = 2;
  c.smoothing = 0.0;
  const std::vector<std::string> train = {"ab", "ac"};
  const MarkovModel m = MarkovModel::Train(train, c);
  EXPECT_TRUE(std::isinf(m.LogProb("ba")));
  EXPECT_TRUE(std::isinf(m.LogProb("az")));
  EXPECT_FALSE(m.InKeySpace("az"));
}

TEST(Markov, SmoothedModelNormalizes) {
  for (int order : {1, 2, 3, 5}) {
    MarkovConfig c;
    c.order = order;
    c.max_len = 4;
    c.alphabet = "abc";
    const std::vector<std::string> train = {"abc", "abca", "cab", "a", "bb"};
    const MarkovModel m = MarkovModel::Train(train, c);
    double total = 0.0;
    for (const auto& s : AllStrings("abc", 4)) total += std::exp(m.LogProb(s));
    EXPECT_NEAR(total, 1.0, 1e-9) << "order " << order;
  }
}

TEST(Markov, BackoffMatchesFullOrderOnFrequentContexts) {
  std::vector<std::string> train;
  for (int i = 0; i < 20; ++i) train.push_back("abab");
  train.push_back("cab");
  MarkovConfig full;
  full.order = 3;
  full.alphabet = "abc";
  MarkovConfig back = full;
  back.backoff = true;
  const MarkovModel a = MarkovModel::Train(train, full);
  const MarkovModel b = MarkovModel::Train(train, back);
  EXPECT_EQ(b.OrderUsed("ab"), 3);
  EXPECT_DOUBLE_EQ(a.ConditionalProb("ab", 'a'), b.ConditionalProb("ab", 'a'));
  EXPECT_LT(b.OrderUsed("ca"), 3);
  double total = 0.0;
  for (const auto& s : AllStrings("abc", 4)) total += std::exp(b.LogProb(s));
  EXPECT_LE(total, 1.0 + 1e-9);
}

TEST(Markov, SamplesAreConsistent) {
  MarkovConfig c;
  c.order = 3;
  c.max_len = 6;
  const std::vector<std::string> train = {"password", "pass", "word", "sword"};
  const MarkovModel m = MarkovModel::Train(train, c);
  std::mt19937_64 rng(4);
  for (const auto& s : m.Sample(rng, 500)) {
    EXPECT_LE(s.password.size(), 6u);
    EXPECT_NEAR(s.log_prob, m.LogProb(s.password), 1e-9);
  }
}

TEST(Markov, RejectsBadConfig) {
  MarkovConfig c;
  c.order = 0;
  const std::vector<std::string> train = {"a"};
  EXPECT_THROW(MarkovModel::Train(train, c), InvalidArgument);
  EXPECT_THROW(MarkovModel::Train({}, MarkovConfig{}), InvalidArgument);
}

TEST(Markov, OrderOneIsUnigramWithEnd) {
  MarkovConfig c;
  c.order = 1;
  c.smoothing = 0.0;
  const std::vector<std::string> train = {"ab", "a", "b"};
  const MarkovModel m = MarkovModel::Train(train, c);
  // Counts: a 2, b 2, END 3 over 7 events.
  EXPECT_NEAR(std::exp(m.LogProb("ab")), (2.0 / 7) * (2.0 / 7) * (3.0 / 7), 1e-12);
  EXPECT_NEAR(std::exp(m.LogProb("")), 3.0 / 7, 1e-12);
  EXPECT_NEAR(std::exp(m.LogProb("bba")), std::pow(2.0 / 7, 3) * 3.0 / 7, 1e-12);
}

TEST(Markov, UnsmoothedTwoCharacterAlphabetNormalizes) {
  MarkovConfig c;
  c.order = 2;
  c.smoothing = 0.0;
  c.max_len = 4;
  const std::vector<std::string> train = {"ab", "ba", "a", "abab", "bb"};
  const MarkovModel m = MarkovModel::Train(train, c);
  double total = 0.0;
  for (const auto& s : AllStrings("ab", 4)) {
    const double lp = m.LogProb(s);
    EXPECT_LE(lp, 0.0);
    total += std::exp(lp);
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(Markov, UnseenContextIsUniformWhenSmoothed) {
  MarkovConfig c;
  c.order = 3;
  c.smoothing = 0.5;
  c.alphabet = "abc";
  const std::vector<std::string> train = {"abc", "aab"};
  const MarkovModel m = MarkovModel::Train(train, c);
  for (char x : std::string("abc") + '\0') {
    EXPECT_NEAR(m.ConditionalProb("cc", x), 0.25, 1e-12);
  }
}

TEST(Markov, LoweringBackoffThresholdKeepsFrequentContexts) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> len(1, 6), ch(0, 2);
  std::vector<std::string> train;
  for (int i = 0; i < 400; ++i) {
    std::string s;
    for (int n = len(rng); n > 0; --n) s.push_back("abc"[ch(rng)]);
    train.push_back(s);
  }
  MarkovConfig high;
  high.order = 4;
  high.alphabet = "abc";
  high.backoff = true;
  high.backoff_threshold = 30;
  MarkovConfig low = high;
  low.backoff_threshold = 5;
  const MarkovModel a = MarkovModel::Train(train, high);
  const MarkovModel b = MarkovModel::Train(train, low);
  int checked = 0;
  for (const auto& h : AllStrings("abc", 3)) {
    if (a.OrderUsed(h) != high.order) continue;
    ++checked;
    for (char x : std::string("abc") + '\0') {
      EXPECT_DOUBLE_EQ(a.ConditionalProb(h, x), b.ConditionalProb(h, x)) << h;
    }
  }
  EXPECT_GT(checked, 5);
}

TEST(Markov, WorksWithMonteCarloEstimator) {
  MarkovConfig c;
  c.order = 2;
  c.max_len = 6;
  const std::vector<std::string> train = {"abc", "abd", "bcd", "abc"};
  const MarkovModel m = MarkovModel::Train(train, c);
  std::mt19937_64 rng(3);
  const guess::MCEstimator est = guess::BuildEstimator(m, 5000, rng);
  EXPECT_LT(est.GuessNumberFromLogProb(m.LogProb("abc")),
            est.GuessNumberFromLogProb(m.LogProb("dcba")));
}

TEST(MinAuto, TakesMinimum) {
  EXPECT_DOUBLE_EQ(MinAuto(std::vector<double>{3e2, 5e6}), 3e2);
  EXPECT_DOUBLE_EQ(MinAuto(std::vector<double>{42.0}), 42.0);
  const std::vector<double> g = {1e6, 3e4, 7e9};
  EXPECT_DOUBLE_EQ(MinAuto(g), 3e4);
  EXPECT_THROW(MinAuto({}), InvalidArgument);
}

}  // namespace
}  // namespace uncm::markov
