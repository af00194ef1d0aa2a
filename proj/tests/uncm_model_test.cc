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

#include "uncm/uncm_model.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "testing/micro_uncm.h"
#include "uncm/errors.h"

namespace uncm {
namespace {

using testing::MicroConfig;
using testing::MicroLeaks;
using testing::MicroUncm;

std::vector<double> Values(const nn::Tensor& t) {
  return {t.data().begin(), t.data().end()};
}

class UncmModelTest : public ::testing::Test {
 protected:
  LeakCollection leaks_ = MicroLeaks(2, 40, 3);
  UncmModel model_ = MicroUncm(leaks_, 11);
};

TEST(UncmConfigTest, TinyValidates) {
  EXPECT_NO_THROW(UncmConfig::Tiny().Validate());
  EXPECT_NO_THROW(MicroConfig().Validate());
}

TEST(UncmConfigTest, RejectsMismatchedDimensions) {
  UncmConfig c = MicroConfig();
  c.mix.value_dim += 1;
  EXPECT_THROW(c.Validate(), InvalidArgument);
  c = MicroConfig();
  c.password.seed_dim = 3;
  EXPECT_THROW(c.Validate(), InvalidArgument);
  c = MicroConfig();
  c.password.conditional = false;
  EXPECT_THROW(c.Validate(), InvalidArgument);
}

TEST(SubsampleTest, DistinctIndicesOfSizeMinKN) {
  std::mt19937_64 rng(1);
  const auto all = SubsampleIndices(5, 64, rng);
  EXPECT_EQ(all.size(), 5u);
  EXPECT_EQ(std::set<std::size_t>(all.begin(), all.end()).size(), 5u);
  const auto some = SubsampleIndices(100, 10, rng);
  EXPECT_EQ(some.size(), 10u);
  EXPECT_EQ(std::set<std::size_t>(some.begin(), some.end()).size(), 10u);
  EXPECT_TRUE(std::all_of(some.begin(), some.end(),
                          [](std::size_t i) { return i < 100; }));
}

TEST_F(UncmModelTest, SmallLeakUsesEveryAccount) {
  std::vector<Account> five(leaks_.leaks[0].accounts.begin(),
                            leaks_.leaks[0].accounts.begin() + 5);
  const ConfigSeed seed = ComputeSeed(model_, five, 64, 7);
  EXPECT_EQ(seed.k_used, 5u);
  EXPECT_EQ(seed.skipped, 0u);
  EXPECT_EQ(seed.psi.rows(), 1u);
  EXPECT_EQ(seed.psi.cols(), model_.config.mix.seed_dim);
  EXPECT_FALSE(seed.dp.has_value());
}

TEST_F(UncmModelTest, SeedIsDeterministicGivenRngSeed) {
  const auto& acc = leaks_.leaks[0].accounts;
  const ConfigSeed a = ComputeSeed(model_, acc, 10, 99);
  const ConfigSeed b = ComputeSeed(model_, acc, 10, 99);
  EXPECT_EQ(a.id, b.id);
  EXPECT_EQ(Values(a.psi), Values(b.psi));
  const ConfigSeed c = ComputeSeed(model_, acc, 10, 100);
  EXPECT_NE(a.id, c.id);
  EXPECT_NE(Values(a.psi), Values(c.psi));
}

TEST_F(UncmModelTest, FullLeakSeedIgnoresRngSeedExceptInId) {
  const auto& acc = leaks_.leaks[0].accounts;
  const ConfigSeed a = ComputeSeed(model_, acc, acc.size(), 1);
  const ConfigSeed b = ComputeSeed(model_, acc, acc.size(), 2);
  for (std::size_t i = 0; i < a.psi.size(); ++i) {
    EXPECT_NEAR(a.psi[i], b.psi[i], 1e-12);
  }
}

TEST_F(UncmModelTest, MalformedAccountsAreSkippedAndCounted) {
  std::vector<Account> acc(leaks_.leaks[0].accounts.begin(),
                           leaks_.leaks[0].accounts.begin() + 5);
  acc.push_back({"no-at-sign", "pw", {}});
  acc.push_back({"@nouser.com", "pw", {}});
  acc.push_back({"", "pw", {}});
  const ConfigSeed seed = ComputeSeed(model_, acc, 64, 5);
  EXPECT_EQ(seed.k_used, 5u);
  EXPECT_EQ(seed.skipped, 3u);
}

TEST_F(UncmModelTest, AllMalformedThrows) {
  const std::vector<Account> acc = {{"bad", "x", {}}, {"worse", "y", {}}};
  EXPECT_THROW(ComputeSeed(model_, acc, 64, 1), MalformedEmail);
}

TEST_F(UncmModelTest, RejectsEmptyInputAndZeroK) {
  EXPECT_THROW(ComputeSeed(model_, {}, 64, 1), InvalidArgument);
  EXPECT_THROW(ComputeSeed(model_, leaks_.leaks[0].accounts, 0, 1),
               InvalidArgument);
}

TEST_F(UncmModelTest, PrivateSeedOnNonPrivateModelConflicts) {
  EXPECT_THROW(
      ComputeSeed(model_, leaks_.leaks[0].accounts, 64, 1, DpParams{}),
      Conflict);
}

TEST_F(UncmModelTest, PrivateSeedCarriesAccount) {
  UncmConfig c = MicroConfig();
  c.mix.kind = mixing::AttentionKind::kDpSigmoid;
  const UncmModel priv = MicroUncm(leaks_, 11, c);
  ASSERT_TRUE(priv.private_variant());
  const auto& acc = leaks_.leaks[0].accounts;
  const ConfigSeed seed = ComputeSeed(priv, acc, 10, 3, DpParams{3.0, 1e-4});
  ASSERT_TRUE(seed.dp.has_value());
  EXPECT_TRUE(std::isfinite(seed.dp->epsilon));
  EXPECT_GT(seed.dp->epsilon, 0.0);
  const ConfigSeed noiseless = ComputeSeed(priv, acc, 10, 3);
  EXPECT_FALSE(noiseless.dp.has_value());
  EXPECT_NE(Values(seed.psi), Values(noiseless.psi));
}

TEST_F(UncmModelTest, SeededAndBaselineModels) {
  const ConfigSeed seed = ComputeSeed(model_, leaks_.leaks[0].accounts, 10, 3);
  const pwmodel::SeededModel seeded = MakeSeeded(model_, seed);
  const pwmodel::SeededModel base = MakeBaseline(model_);
  EXPECT_EQ(seeded.seed_id(), seed.id);
  EXPECT_FALSE(seeded.IsBaseline());
  EXPECT_TRUE(base.IsBaseline());
  EXPECT_NE(seeded.LogProb("snow4"), base.LogProb("snow4"));
}

}  // namespace
}  // namespace uncm
