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

#include "uncm/trainer.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "json.hpp"
#include "testing/micro_uncm.h"
#include "uncm/errors.h"

namespace uncm::train {
namespace {

using testing::MicroConfig;
using testing::MicroLeaks;
using testing::MicroUncm;

double MaxAbsDiff(const nn::GradMap& a, const nn::GradMap& b) {
  double worst = 0.0;
  for (const auto& [name, t] : a) {
    const nn::Tensor& u = b.at(name);
    for (std::size_t i = 0; i < t.size(); ++i) {
      worst = std::max(worst, std::abs(t[i] - u[i]));
    }
  }
  return worst;
}

double NormWithPrefix(const nn::GradMap& g, const std::string& prefix) {
  double s = 0.0;
  for (const auto& [name, t] : g) {
    if (name.rfind(prefix, 0) != 0) continue;
    for (double x : t.data()) s += x * x;
  }
  return std::sqrt(s);
}

bool SameParams(const nn::ParamSet& a, const nn::ParamSet& b) {
  const auto na = a.Names();
  if (na != b.Names()) return false;
  for (const auto& n : na) {
    const auto x = a.Get(n).data();
    const auto y = b.Get(n).data();
    if (!std::equal(x.begin(), x.end(), y.begin(), y.end())) return false;
  }
  return true;
}

TrainConfig FastConfig(std::uint64_t seed) {
  TrainConfig c;
  c.k = 16;
  c.virtual_batch = 2;
  c.max_epochs = 3;
  c.adam.learning_rate = 0.01;
  c.rng_seed = seed;
  return c;
}

TEST(TrainConfigTest, Validate) {
  EXPECT_NO_THROW(TrainConfig{}.Validate());
  TrainConfig c;
  c.k = 0;
  EXPECT_THROW(c.Validate(), InvalidArgument);
  c = {};
  c.virtual_batch = 0;
  EXPECT_THROW(c.Validate(), InvalidArgument);
  c = {};
  c.patience = 0;
  EXPECT_THROW(c.Validate(), InvalidArgument);
}

TEST(LogRecordTest, JsonLine) {
  const LogRecord r{3, 42, 1.5, 2.25};
  const auto j = nlohmann::json::parse(ToJsonLine(r));
  EXPECT_EQ(j["epoch"], 3);
  EXPECT_EQ(j["step"], 42);
  EXPECT_DOUBLE_EQ(j["train_loss"].get<double>(), 1.5);
  EXPECT_DOUBLE_EQ(j["valid_loss"].get<double>(), 2.25);
  EXPECT_EQ(ToJsonLine(r).find('\n'), std::string::npos);
}

TEST(EarlyStoppingTest, StopsAfterPatienceEpochsWithoutImprovement) {
  EarlyStopping s(5);
  const std::vector<double> losses = {5, 4, 3, 3.5, 3.1, 3.2, 3.0, 3.3};
  std::size_t stopped_at = 0;
  for (std::size_t e = 1; e <= losses.size(); ++e) {
    if (s.Update(e, losses[e - 1])) {
      stopped_at = e;
      break;
    }
  }
  EXPECT_EQ(stopped_at, 8u);
  EXPECT_EQ(s.best_epoch(), 3u);
  EXPECT_DOUBLE_EQ(s.best_loss(), 3.0);
}

TEST(EarlyStoppingTest, ImprovementResetsCounter) {
  EarlyStopping s(2);
  EXPECT_FALSE(s.Update(1, 2.0));
  EXPECT_FALSE(s.Update(2, 2.5));
  EXPECT_FALSE(s.Update(3, 1.0));
  EXPECT_TRUE(s.improved());
  EXPECT_FALSE(s.Update(4, 1.5));
  EXPECT_TRUE(s.Update(5, 1.5));
  EXPECT_EQ(s.best_epoch(), 3u);
}

class TrainerTest : public ::testing::Test {
 protected:
  LeakCollection train_ = MicroLeaks(3, 30, 1);
  LeakCollection valid_ = MicroLeaks(1, 30, 2);
};

TEST_F(TrainerTest, PrepareLeaksDropsUnusableAccounts) {
  LeakCollection c = train_;
  c.leaks[0].accounts.push_back({"broken", "snow1", {}});
  c.leaks[0].accounts.push_back({"x@ice.no", "UPPER", {}});
  c.leaks[0].accounts.push_back({"y@ice.no", "waytoolongpassword", {}});
  const UncmModel m = MicroUncm(train_, 1);
  const auto prepared = PrepareLeaks(m, c);
  ASSERT_EQ(prepared.size(), c.leaks.size());
  EXPECT_EQ(prepared[0].inputs.size(), 30u);
  EXPECT_EQ(prepared[0].passwords.size(), 30u);
}

TEST_F(TrainerTest, GradientAccumulationMatchesJointLoss) {
  const UncmModel m = MicroUncm(train_, 4);
  const auto prepared = PrepareLeaks(m, train_);
  std::vector<std::size_t> picked(12);
  std::iota(picked.begin(), picked.end(), 0);

  nn::GradMap acc = m.params.ZeroGrads();
  for (std::size_t b = 0; b < 3; ++b) {
    nn::Accumulate(acc, LeakLossAndGradients(m, prepared[b], picked).grads,
                   1.0 / 3.0);
  }
  nn::Graph g(&m.params);
  nn::Var total = LeakLoss(g, m, prepared[0], picked);
  total = g.Add(total, LeakLoss(g, m, prepared[1], picked));
  total = g.Add(total, LeakLoss(g, m, prepared[2], picked));
  const nn::GradMap joint = g.Backward(g.Affine(total, 1.0 / 3.0));
  EXPECT_LT(MaxAbsDiff(joint, acc), 1e-10);
}

TEST_F(TrainerTest, GradientsReachEveryComponent) {
  const UncmModel m = MicroUncm(train_, 4);
  const auto prepared = PrepareLeaks(m, train_);
  std::vector<std::size_t> picked = {0, 1, 2, 3, 4, 5};
  const LeakGradient lg = LeakLossAndGradients(m, prepared[0], picked);
  EXPECT_GT(lg.loss, 0.0);
  EXPECT_GT(NormWithPrefix(lg.grads, "enc/"), 0.0);
  EXPECT_GT(NormWithPrefix(lg.grads, "mix/"), 0.0);
  EXPECT_GT(NormWithPrefix(lg.grads, "pm/seed_h"), 0.0);
  EXPECT_GT(NormWithPrefix(lg.grads, "pm/lstm"), 0.0);
}

TEST_F(TrainerTest, OverfitsRepeatedPassword) {
  LeakCollection tiny;
  CredentialLeak leak;
  leak.id = "tiny";
  for (int i = 0; i < 20; ++i) {
    leak.accounts.push_back({"user" + std::to_string(i) + "@ice.no", "troll7", {}});
  }
  tiny.leaks.push_back(leak);
  UncmModel m = MicroUncm(tiny, 5);
  const auto prepared = PrepareLeaks(m, tiny);
  std::vector<std::size_t> all(20);
  std::iota(all.begin(), all.end(), 0);
  nn::AdamConfig adam;
  adam.learning_rate = 0.02;
  double loss = 0.0;
  for (int step = 0; step < 200; ++step) {
    const LeakGradient lg = LeakLossAndGradients(m, prepared[0], all);
    loss = lg.loss;
    nn::AdamUpdate(m.params, lg.grads, adam);
  }
  const double per_char = loss / static_cast<double>(std::string("troll7").size() + 1);
  EXPECT_LT(per_char, 0.2);
}

TEST(BaselineTest, LearnsSinglePassword) {
  pwmodel::PasswordModelConfig cfg = MicroConfig().password;
  cfg.conditional = false;
  nn::ParamSet params;
  std::mt19937_64 rng(3);
  pwmodel::InitPasswordModel(params, cfg, rng);
  const std::vector<std::string> pw(32, "hello");
  TrainConfig tc;
  tc.baseline_batch = 32;
  tc.max_epochs = 150;
  tc.patience = 150;
  tc.adam.learning_rate = 0.03;
  const TrainResult r = TrainBaseline(params, cfg, pw, pw, tc);
  EXPECT_EQ(r.epochs_run, 150u);
  const auto model = pwmodel::MakeBaselineModel(params, cfg);
  EXPECT_GT(std::exp(model.LogProb("hello")), 0.9);
  EXPECT_NEAR(r.best_valid_loss, -model.LogProb("hello"), 1e-9);
}

TEST(BaselineTest, RejectsEmptyUsableSets) {
  pwmodel::PasswordModelConfig cfg = MicroConfig().password;
  cfg.conditional = false;
  nn::ParamSet params;
  std::mt19937_64 rng(3);
  pwmodel::InitPasswordModel(params, cfg, rng);
  const std::vector<std::string> bad = {"NOPE", "toolongpassword"};
  const std::vector<std::string> good = {"abc"};
  EXPECT_THROW(TrainBaseline(params, cfg, bad, good, {}), InvalidArgument);
  EXPECT_THROW(TrainBaseline(params, cfg, good, bad, {}), InvalidArgument);
}

TEST_F(TrainerTest, ValidationLossDecreasesOverThreeEpochs) {
  int decreased = 0;
  for (std::uint64_t run = 0; run < 10; ++run) {
    UncmModel m = MicroUncm(train_, 100 + run);
    const TrainResult r = TrainUncm(m, train_, valid_, FastConfig(run + 1));
    ASSERT_EQ(r.log.size(), 3u);
    if (r.log[2].valid_loss < r.log[0].valid_loss) ++decreased;
  }
  EXPECT_GE(decreased, 9);
}

TEST_F(TrainerTest, ReturnsBestEpochParameters) {
  UncmModel m = MicroUncm(train_, 8);
  TrainConfig c = FastConfig(8);
  c.max_epochs = 8;
  c.patience = 2;
  c.adam.learning_rate = 0.2;
  std::map<std::size_t, nn::ParamSet> snapshots;
  const TrainResult r = TrainUncm(
      m, train_, valid_, c,
      [&](const LogRecord& rec, const UncmModel& cur) {
        snapshots.emplace(rec.epoch, cur.params);
      });
  ASSERT_GE(r.best_epoch, 1u);
  EXPECT_TRUE(SameParams(m.params, snapshots.at(r.best_epoch)));
  double best = r.log[0].valid_loss;
  for (const LogRecord& rec : r.log) best = std::min(best, rec.valid_loss);
  EXPECT_DOUBLE_EQ(r.best_valid_loss, best);
  if (r.epochs_run < c.max_epochs) {
    EXPECT_EQ(r.epochs_run, r.best_epoch + c.patience);
  }
}

TEST_F(TrainerTest, EarlyStopsOnStalledValidation) {
  UncmModel m = MicroUncm(train_, 9);
  TrainConfig c = FastConfig(9);
  c.max_epochs = 20;
  c.patience = 1;
  c.adam.learning_rate = 0.0;
  const TrainResult r = TrainUncm(m, train_, valid_, c);
  EXPECT_EQ(r.best_epoch, 1u);
  EXPECT_EQ(r.epochs_run, 2u);
}

TEST_F(TrainerTest, Reproducible) {
  UncmModel a = MicroUncm(train_, 21);
  UncmModel b = MicroUncm(train_, 21);
  const TrainResult ra = TrainUncm(a, train_, valid_, FastConfig(5));
  const TrainResult rb = TrainUncm(b, train_, valid_, FastConfig(5));
  ASSERT_EQ(ra.log.size(), rb.log.size());
  for (std::size_t i = 0; i < ra.log.size(); ++i) {
    EXPECT_EQ(ra.log[i].train_loss, rb.log[i].train_loss);
    EXPECT_EQ(ra.log[i].valid_loss, rb.log[i].valid_loss);
  }
  EXPECT_TRUE(SameParams(a.params, b.params));
}

}  // namespace
}  // namespace uncm::train
