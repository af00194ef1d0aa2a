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

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "testing/micro_uncm.h"
#include "uncm/checkpoint.h"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult RunCli(const std::string& args) {
  const std::string cmd = std::string(UNCM_CLI) + " " + args + " 2>/dev/null";
  RunResult r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (p == nullptr) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), p)) > 0) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::vector<std::string> Lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) {
    if (!l.empty()) out.push_back(l);
  }
  return out;
}

json LastJson(const RunResult& r) {
  const auto lines = Lines(r.out);
  return lines.empty() ? json() : json::parse(lines.back());
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("uncm-cli-" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    ASSERT_EQ(RunCli("synth --print-spec " + P("default.json")).exit_code, 0);
    json spec = json::parse(Slurp(dir_ / "default.json"));
    for (json& c : spec["communities"]) {
      c["leaks"] = 12;
      c["size"] = {60, 60};
    }
    std::ofstream(dir_ / "spec.json") << spec.dump();
    UncmConfig mc = uncm::testing::MicroConfig();
    mc.password.max_len = 12;
    std::ofstream(dir_ / "model.json") << uncm::ckpt::ConfigToJson(mc).dump();
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }
  static std::string P(const std::string& name) { return (dir_ / name).string(); }

  using UncmConfig = uncm::UncmConfig;
  static fs::path dir_;
};

fs::path CliTest::dir_;

TEST_F(CliTest, EndToEndWorkflow) {
  RunResult r = RunCli("synth --spec " + P("spec.json") + " --out " + P("all") + " --rng-seed 3");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(LastJson(r)["leaks"], 24);
  EXPECT_EQ(LastJson(r)["accounts"], 24 * 60);
  ASSERT_EQ(RunCli("synth --spec " + P("spec.json") + " --out " + P("again") + " --rng-seed 3")
                .exit_code,
            0);
  EXPECT_EQ(Slurp(dir_ / "all" / "manifest.json"), Slurp(dir_ / "again" / "manifest.json"));

  r = RunCli("split --in " + P("all") + " --train-out " + P("train") + " --test-out " +
          P("test") + " --test-fraction 0.25 --rng-seed 4");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(LastJson(r)["train_leaks"], 18);
  EXPECT_EQ(LastJson(r)["test_leaks"], 6);

  r = RunCli("train --train " + P("train") + " --config " + P("model.json") + " --out " +
          P("m.ckpt") + " --epochs 1 --k 16 --virtual-batch 4 --log " + P("log.jsonl") +
          " --rng-seed 1");
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_EQ(LastJson(r)["epochs_run"], 1);
  EXPECT_EQ(Lines(Slurp(dir_ / "log.jsonl")).size(), 1u);
  EXPECT_EQ(uncm::ckpt::ReadFile(P("m.ckpt")).kind, "uncm");

  r = RunCli("train --train " + P("train") + " --config " + P("model.json") + " --out " +
          P("mdp.ckpt") + " --private --epochs 1 --k 16 --virtual-batch 4 --rng-seed 1");
  ASSERT_EQ(r.exit_code, 0);

  r = RunCli("train-baseline --train " + P("train") + " --model " + P("m.ckpt") + " --out " +
          P("b.ckpt") + " --epochs 1 --steps-per-epoch 5 --batch 16 --rng-seed 1");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(uncm::ckpt::ReadFile(P("b.ckpt")).kind, "password-model");

  std::ofstream(dir_ / "emails.txt") << "kimi1@kmail.jp\nsumo2@hoshi.jp\nrara@kmail.jp\n"
                                        "yuto9@sakuranet.jp\nshine@kmail.jp\n";
  r = RunCli("seed --model " + P("m.ckpt") + " --emails " + P("emails.txt") + " --k 100 --out " +
          P("s.ckpt") + " --bundle " + P("bundle.ckpt") + " --rng-seed 7");
  ASSERT_EQ(r.exit_code, 0);
  const json seed = LastJson(r);
  EXPECT_EQ(seed["k_used"], 5);
  EXPECT_FALSE(seed.contains("epsilon"));
  EXPECT_EQ(uncm::ckpt::ReadFile(P("bundle.ckpt")).kind, "seeded-bundle");

  r = RunCli("seed --model " + P("mdp.ckpt") + " --emails " + P("emails.txt") +
          " --k 100 --dp --z 3 --delta 1e-4 --rng-seed 7");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_NEAR(LastJson(r)["epsilon"].get<double>(), 1.44, 0.01);
  EXPECT_NE(RunCli("seed --model " + P("m.ckpt") + " --emails " + P("emails.txt") + " --dp")
                .exit_code,
            0);

  std::ofstream(dir_ / "pw.txt") << "kimi12\nsumora\nNOT-IN-ALPHABET\n";
  r = RunCli("estimate --model " + P("m.ckpt") + " --seed " + P("s.ckpt") + " --passwords " +
          P("pw.txt") + " --samples 500 --rng-seed 2");
  ASSERT_EQ(r.exit_code, 0);
  const auto from_seed = Lines(r.out);
  ASSERT_EQ(from_seed.size(), 3u);
  EXPECT_EQ(json::parse(from_seed[0])["seed_id"], seed["seed_id"]);
  EXPECT_TRUE(json::parse(from_seed[2])["log10_guess_number"].is_null());
  EXPECT_EQ(from_seed[0].find("kimi12"), std::string::npos);
  r = RunCli("estimate --bundle " + P("bundle.ckpt") + " --passwords " + P("pw.txt") +
          " --samples 500 --rng-seed 2");
  ASSERT_EQ(r.exit_code, 0);
  const auto from_bundle = Lines(r.out);
  ASSERT_EQ(from_bundle.size(), 3u);
  for (std::size_t i = 0; i < 2; ++i) {
    const json a = json::parse(from_seed[i]), b = json::parse(from_bundle[i]);
    EXPECT_NEAR(a["log2_prob"].get<double>(), b["log2_prob"].get<double>(), 1e-5);
    EXPECT_EQ(a["strength_label"], b["strength_label"]);
  }
  r = RunCli("estimate --baseline " + P("b.ckpt") + " --password kimi12 --samples 500");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(LastJson(r)["seed_id"], "baseline");

  r = RunCli("attack --model " + P("m.ckpt") + " --baseline " + P("b.ckpt") + " --private-model " +
          P("mdp.ckpt") + " --test " + P("test") +
          " --k 16 --samples 300 --budgets 10 100 1000 --csv " + P("c.csv") + " --svg " +
          P("c.svg") + " --per-leak-csv " + P("leaks.csv") + " --rng-seed 5");
  ASSERT_EQ(r.exit_code, 0);
  const auto csv = Lines(Slurp(dir_ / "c.csv"));
  ASSERT_EQ(csv.size(), 1u + 3u * 3u);
  EXPECT_EQ(csv[0], "series,budget,fraction");
  EXPECT_EQ(csv[1].rfind("seeded,10,", 0), 0u);
  EXPECT_EQ(Lines(Slurp(dir_ / "leaks.csv")).size(), 1u + 6u * 3u * 3u);
  EXPECT_EQ(Slurp(dir_ / "c.svg").rfind("<svg", 0), 0u);

  r = RunCli("mia --model " + P("m.ckpt") + " --train " + P("train") + " --test " + P("test") +
          " --noise --runs 1 --epochs 1 --seeds-per-leak 2 --rng-seed 1");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(LastJson(r)["accuracies"].size(), 1u);
}

TEST_F(CliTest, CleanWritesReport) {
  fs::create_directories(dir_ / "raw");
  {
    std::ofstream a(dir_ / "raw" / "shop_com.txt");
    for (int i = 0; i < 5; ++i) a << "user" << i << "@mail.com:pass" << i << "\n";
    a << "broken line\n";
    a << "hash@mail.com:5f4dcc3b5aa765d61d8327deb882cf99\n";
  }
  const RunResult r = RunCli("clean --in " + P("raw") + " --out " + P("clean") +
                          " --min-leak-size 1 --report " + P("report.json"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  const json rep = json::parse(Slurp(dir_ / "report.json"));
  EXPECT_EQ(rep["malformed_lines"], 1);
  EXPECT_EQ(rep["hash_accounts_dropped"], 1);
  EXPECT_EQ(rep["accounts_written"], 5);
  EXPECT_TRUE(fs::exists(dir_ / "clean" / "manifest.json"));
}

TEST_F(CliTest, ErrorsExitNonZero) {
  EXPECT_NE(RunCli("").exit_code, 0);
  EXPECT_NE(RunCli("nonsense").exit_code, 0);
  EXPECT_NE(RunCli("split --in " + P("missing") + " --train-out a --test-out b").exit_code, 0);
  EXPECT_EQ(RunCli("serve --help").exit_code, 0);
  EXPECT_NE(RunCli("serve --model " + P("missing.ckpt") + " --port 0").exit_code, 0);
}

}  // namespace
