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

#include <cmath>
#include <csignal>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "uncm/checkpoint.h"
#include "uncm/email_encoder.h"
#include "uncm/errors.h"
#include "uncm/eval.h"
#include "uncm/guess_estimator.h"
#include "uncm/leak_pipeline.h"
#include "uncm/mia.h"
#include "uncm/service.h"
#include "uncm/trainer.h"
#include "uncm/uncm_model.h"

namespace {

using namespace uncm;
using nlohmann::json;
namespace fs = std::filesystem;

std::string ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

json ReadJson(const fs::path& path) {
  const json j = json::parse(ReadText(path), nullptr, false);
  if (j.is_discarded()) throw InvalidArgument("invalid JSON in " + path.string());
  return j;
}

std::vector<std::string> ReadLines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> ReadLinesFrom(const std::string& path) {
  if (path == "-") return ReadLines(std::cin);
  std::ifstream in(path);
  if (!in) throw NotFound("cannot read " + path);
  return ReadLines(in);
}

UncmModel LoadModel(const std::string& path) { return ckpt::ToUncm(ckpt::ReadFile(path)); }

std::optional<DpParams> DpFrom(bool dp, double z, double delta) {
  if (!dp) return std::nullopt;
  return DpParams{z, delta};
}

void AddTrainingOptions(CLI::App* cmd, train::TrainConfig& c) {
  cmd->add_option("--lr", c.adam.learning_rate, "Adam learning rate");
  cmd->add_option("--epochs", c.max_epochs, "maximum epochs");
  cmd->add_option("--patience", c.patience, "early-stopping patience");
}

// Subcommands.

struct Synth {
  std::string spec, out, print_spec;
  std::uint64_t rng_seed = 1;
  void Run() const {
    pipeline::SynthSpec s =
        spec.empty() ? pipeline::DefaultSynthSpec() : pipeline::SynthSpec::FromJson(ReadJson(spec));
    if (!print_spec.empty()) {
      WriteText(print_spec, s.ToJson().dump(2) + "\n");
      if (out.empty()) return;
    }
    if (out.empty()) throw InvalidArgument("synth: --out is required");
    std::mt19937_64 rng(rng_seed);
    const LeakCollection c = pipeline::SynthGenerate(s, rng);
    pipeline::SaveCollection(c, out);
    std::cout << json{{"leaks", c.leaks.size()}, {"accounts", c.NumAccounts()}}.dump()
              << "\n";
  }
};

struct Clean {
  std::string in, out, format = "auto", report, tld;
  bool keep_hashes = false, english = false;
  pipeline::CleanRules rules;
  void Run() const {
    pipeline::LoadStats stats;
    LeakCollection c = pipeline::LoadCollection(in, pipeline::ParseLeakFormat(format), &stats);
    pipeline::CleanRules r = rules;
    r.drop_hashes = !keep_hashes;
    pipeline::CleanReport rep;
    LeakCollection cleaned = pipeline::Clean(c, r, &rep);
    if (english) cleaned = pipeline::FilterEnglish(cleaned);
    if (!tld.empty()) cleaned = pipeline::FilterByTld(cleaned, tld);
    pipeline::SaveCollection(cleaned, out);
    json j = rep.ToJson();
    j["files"] = stats.files;
    j["skipped_files"] = stats.skipped_files;
    j["malformed_lines"] = stats.malformed_lines;
    j["leaks_written"] = cleaned.leaks.size();
    j["accounts_written"] = cleaned.NumAccounts();
    if (!report.empty()) WriteText(report, j.dump(2) + "\n");
    std::cout << j.dump() << "\n";
  }
};

struct Split {
  std::string in, train_out, test_out;
  double test_fraction = 0.2;
  std::uint64_t rng_seed = 1;
  void Run() const {
    const LeakCollection c = pipeline::LoadCollection(in);
    std::mt19937_64 rng(rng_seed);
    auto [train, test] = pipeline::SplitTrainTest(c, test_fraction, rng);
    pipeline::SaveCollection(train, train_out);
    pipeline::SaveCollection(test, test_out);
    std::cout << json{{"train_leaks", train.leaks.size()},
                      {"train_accounts", train.NumAccounts()},
                      {"test_leaks", test.leaks.size()},
                      {"test_accounts", test.NumAccounts()}}
                     .dump()
              << "\n";
  }
};

std::pair<LeakCollection, LeakCollection> TrainValid(const std::string& train,
                                                     const std::string& valid,
                                                     double valid_fraction,
                                                     std::mt19937_64& rng) {
  LeakCollection t = pipeline::LoadCollection(train);
  if (!valid.empty()) return {std::move(t), pipeline::LoadCollection(valid)};
  return pipeline::SplitTrainTest(t, valid_fraction, rng);
}

struct Train {
  std::string train, valid, out, config, log;
  bool private_variant = false;
  double valid_fraction = 0.1;
  train::TrainConfig tc;
  void Run() {
    UncmConfig mc = config.empty() ? UncmConfig::Tiny() : ckpt::ConfigFromJson(ReadJson(config));
    if (private_variant) mc.mix.kind = mixing::AttentionKind::kDpSigmoid;
    std::mt19937_64 rng(tc.rng_seed);
    auto [tr, va] = TrainValid(train, valid, valid_fraction, rng);
    UncmModel m = InitUncm(mc, encoder::BuildVocabularies(tr, mc.vocab_cutoff), rng);
    std::ofstream log_file;
    if (!log.empty()) log_file.open(log);
    const train::TrainResult r =
        train::TrainUncm(m, tr, va, tc, [&](const train::LogRecord& rec, const UncmModel&) {
          const std::string line = train::ToJsonLine(rec);
          std::cout << line << "\n" << std::flush;
          if (log_file) log_file << line << "\n" << std::flush;
        });
    ckpt::WriteFile(ckpt::FromUncm(m), out);
    std::cout << json{{"best_epoch", r.best_epoch},
                      {"best_valid_loss", r.best_valid_loss},
                      {"epochs_run", r.epochs_run},
                      {"out", out}}
                     .dump()
              << "\n";
  }
};

struct TrainBase {
  std::string train, valid, out, model, config;
  double valid_fraction = 0.1;
  train::TrainConfig tc;
  void Run() {
    pwmodel::PasswordModelConfig pc;
    if (!model.empty()) {
      pc = LoadModel(model).config.password;
    } else if (!config.empty()) {
      pc = ckpt::ConfigFromJson(ReadJson(config)).password;
    } else {
      pc = UncmConfig::Tiny().password;
    }
    pc.conditional = false;
    std::mt19937_64 rng(tc.rng_seed);
    auto [tr, va] = TrainValid(train, valid, valid_fraction, rng);
    nn::ParamSet params;
    pwmodel::InitPasswordModel(params, pc, rng);
    const train::TrainResult r = train::TrainBaseline(
        params, pc, tr.AllPasswords(), va.AllPasswords(), tc,
        [](const train::LogRecord& rec, const nn::ParamSet&) {
          std::cout << train::ToJsonLine(rec) << "\n" << std::flush;
        });
    ckpt::WriteFile(ckpt::FromPasswordModel(params, pc), out);
    std::cout << json{{"best_epoch", r.best_epoch},
                      {"best_valid_loss", r.best_valid_loss},
                      {"epochs_run", r.epochs_run},
                      {"out", out}}
                     .dump()
              << "\n";
  }
};

struct Seed {
  std::string model, emails, out, bundle;
  std::size_t k = kDefaultSubsample;
  bool dp = false;
  double z = 3.0, delta = 0.0;
  std::uint64_t rng_seed = 1;
  void Run() const {
    const UncmModel m = LoadModel(model);
    std::vector<Account> accounts;
    for (auto& e : ReadLinesFrom(emails)) accounts.push_back({e, "", {}});
    const ConfigSeed s = ComputeSeed(m, accounts, k, rng_seed, DpFrom(dp, z, delta));
    if (!out.empty()) ckpt::WriteFile(ckpt::FromSeed(s), out);
    if (!bundle.empty()) ckpt::WriteFile(ckpt::SeededBundle(m, s), bundle);
    json j = {{"seed_id", s.id}, {"k_used", s.k_used}, {"skipped", s.skipped}};
    if (s.dp) {
      j["epsilon"] = s.dp->epsilon;
      j["delta"] = s.dp->delta;
      j["z"] = s.dp->z;
      j["q_rate"] = s.dp->q_rate;
    }
    std::cout << j.dump() << "\n";
  }
};

struct Estimate {
  std::string model, seed, bundle, baseline, password, passwords = "-";
  std::size_t samples = guess::kDefaultSamples;
  std::uint64_t rng_seed = 1;
  void Run() const {
    std::optional<pwmodel::SeededModel> sm;
    if (!bundle.empty()) {
      sm = ckpt::LoadSeededBundle(ckpt::ReadFile(bundle));
    } else if (!baseline.empty()) {
      auto [params, pc] = ckpt::ToPasswordModel(ckpt::ReadFile(baseline));
      sm = pwmodel::MakeBaselineModel(params, pc);
    } else {
      if (model.empty()) throw InvalidArgument("estimate: --model, --bundle or --baseline is required");
      const UncmModel m = LoadModel(model);
      sm = seed.empty() ? MakeBaseline(m) : MakeSeeded(m, ckpt::ToSeed(ckpt::ReadFile(seed)));
    }
    std::mt19937_64 rng(rng_seed);
    const guess::MCEstimator est = guess::BuildEstimator(*sm, samples, rng);
    const std::vector<std::string> pws =
        password.empty() ? ReadLinesFrom(passwords) : std::vector<std::string>{password};
    for (std::size_t i = 0; i < pws.size(); ++i) {
      json j = {{"index", i}, {"seed_id", sm->seed_id()}};
      if (!sm->InKeySpace(pws[i])) {
        j["log10_guess_number"] = nullptr;
        j["log2_prob"] = nullptr;
        j["strength_label"] = service::StrengthLabel(INFINITY);
      } else {
        const double lp = sm->LogProb(pws[i]);
        const double lg = std::log10(est.GuessNumberFromLogProb(lp));
        j["log10_guess_number"] = std::isfinite(lg) ? json(lg) : json(nullptr);
        j["log2_prob"] = std::isfinite(lp) ? json(lp / std::numbers::ln2) : json(nullptr);
        j["strength_label"] = service::StrengthLabel(lg);
      }
      std::cout << j.dump() << "\n";
    }
  }
};

struct Attack {
  std::string model, baseline, private_model, test, csv, svg, per_leak;
  bool dp = false;
  double z = 3.0, delta = 0.0;
  eval::AttackConfig ac;
  void Run() const {
    const UncmModel m = LoadModel(model);
    std::optional<pwmodel::SeededModel> base;
    if (!baseline.empty()) {
      auto [params, pc] = ckpt::ToPasswordModel(ckpt::ReadFile(baseline));
      base = pwmodel::MakeBaselineModel(params, pc);
    } else {
      base = MakeBaseline(m);
    }
    std::optional<UncmModel> pm;
    if (!private_model.empty()) pm = LoadModel(private_model);
    const LeakCollection t = pipeline::LoadCollection(test);
    const auto results = eval::RunAttack(m, *base, t, ac, pm ? &*pm : nullptr,
                                         pm ? DpFrom(true, z, delta) : std::nullopt);
    std::vector<eval::GuessingCurve> s, b, p;
    std::vector<eval::NamedCurve> leaks;
    for (const auto& r : results) {
      s.push_back(r.seeded);
      b.push_back(r.baseline);
      leaks.push_back({r.leak_id + "/seeded", r.seeded});
      leaks.push_back({r.leak_id + "/baseline", r.baseline});
      if (r.private_seeded) {
        p.push_back(*r.private_seeded);
        leaks.push_back({r.leak_id + "/private", *r.private_seeded});
      }
    }
    std::vector<eval::NamedCurve> avg = {{"seeded", eval::AverageCurves(s)},
                                         {"baseline", eval::AverageCurves(b)}};
    if (!p.empty()) avg.push_back({"private", eval::AverageCurves(p)});
    const std::string table = eval::CurvesToCsv(avg);
    if (csv.empty()) std::cout << table;
    else WriteText(csv, table);
    if (!svg.empty()) WriteText(svg, eval::CurvesToSvg(avg, "guessing curves"));
    if (!per_leak.empty()) WriteText(per_leak, eval::CurvesToCsv(leaks));
    json gains = json::object();
    for (double budget : ac.budgets) {
      const auto g = eval::GainRatio(avg[0].curve, avg[1].curve, budget);
      std::ostringstream key;
      key << budget;
      gains[key.str()] = g ? json(*g) : json(nullptr);
    }
    json summary = {{"leaks", results.size()}, {"gain_ratio", gains}};
    if (!results.empty() && results[0].epsilon) summary["epsilon"] = *results[0].epsilon;
    std::cerr << summary.dump() << "\n";
  }
};

struct Mia {
  std::string model, train, test;
  bool dp = false;
  double z = 3.0, delta = 0.0;
  eval::MiaConfig mc;
  void Run() {
    const UncmModel m = LoadModel(model);
    mc.dp = DpFrom(dp, z, delta);
    const eval::MiaResult r =
        eval::RunMia(m, pipeline::LoadCollection(train), pipeline::LoadCollection(test), mc);
    json j = {{"accuracies", r.accuracies}, {"mean", r.mean}, {"stddev", r.stddev},
              {"train_rows", r.train_rows}, {"test_rows", r.test_rows}};
    if (r.epsilon) {
      j["epsilon"] = *r.epsilon;
      j["delta"] = *r.delta;
      j["accuracy_bound"] = eval::DpAccuracyBound(*r.epsilon, *r.delta);
      j["accuracy_limit_99"] = eval::DpAccuracyLimit(*r.epsilon, *r.delta, r.test_rows);
    }
    std::cout << j.dump() << "\n";
  }
};

service::PsmService* g_service = nullptr;

void OnSignal(int) {
  if (g_service != nullptr) g_service->Stop();
}

struct Serve {
  std::string config, model, data_dir, bind;
  std::optional<int> port;
  std::optional<std::size_t> samples;
  void Run() const {
    service::ServiceConfig c = service::ServiceConfig::Load(config);
    if (!model.empty()) c.model_path = model;
    if (!data_dir.empty()) c.data_dir = data_dir;
    if (!bind.empty()) c.bind_address = bind;
    if (port) c.port = *port;
    if (samples) c.estimator_samples = *samples;
    c.Validate();
    auto svc = service::PsmService::FromConfig(
        c, [](std::string_view line) { std::cerr << line << "\n" << std::flush; });
    g_service = svc.get();
    std::signal(SIGINT, OnSignal);
    std::signal(SIGTERM, OnSignal);
    svc->Serve();
    g_service = nullptr;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Universal Neural-Cracking-Machines toolkit"};
  app.require_subcommand(1);

  Synth synth;
  auto* c_synth = app.add_subcommand("synth", "generate a synthetic leak collection");
  c_synth->add_option("--spec", synth.spec, "generator spec (JSON)")->check(CLI::ExistingFile);
  c_synth->add_option("--out", synth.out, "output collection directory");
  c_synth->add_option("--print-spec", synth.print_spec, "write the effective spec here");
  c_synth->add_option("--rng-seed", synth.rng_seed);

  Clean clean;
  auto* c_clean = app.add_subcommand("clean", "parse and clean raw leak files");
  c_clean->add_option("--in", clean.in, "leak file or directory")->required();
  c_clean->add_option("--out", clean.out, "output collection directory")->required();
  c_clean->add_option("--format", clean.format, "auto|colon|tsv|jsonl");
  c_clean->add_option("--report", clean.report, "write the cleaning report (JSON)");
  c_clean->add_flag("--keep-hashes", clean.keep_hashes, "keep hash-like passwords");
  c_clean->add_option("--max-email-leaks", clean.rules.max_email_leaks);
  c_clean->add_option("--min-leak-size", clean.rules.min_leak_size);
  c_clean->add_option("--overlap", clean.rules.overlap_threshold);
  c_clean->add_flag("--english", clean.english, "keep English leaks only");
  c_clean->add_option("--tld", clean.tld, "keep leaks of this top-level domain");

  Split split;
  auto* c_split = app.add_subcommand("split", "leak-level train/test split");
  c_split->add_option("--in", split.in)->required();
  c_split->add_option("--train-out", split.train_out)->required();
  c_split->add_option("--test-out", split.test_out)->required();
  c_split->add_option("--test-fraction", split.test_fraction);
  c_split->add_option("--rng-seed", split.rng_seed);

  Train tr;
  auto* c_train = app.add_subcommand("train", "train a UNCM");
  c_train->add_option("--train", tr.train)->required();
  c_train->add_option("--valid", tr.valid, "validation collection (default: split off train)");
  c_train->add_option("--valid-fraction", tr.valid_fraction);
  c_train->add_option("--out", tr.out)->required();
  c_train->add_option("--config", tr.config, "model config (JSON)");
  c_train->add_flag("--private", tr.private_variant, "sigmoid attention for private seeds");
  c_train->add_option("--k", tr.tc.k);
  c_train->add_option("--virtual-batch", tr.tc.virtual_batch);
  c_train->add_option("--log", tr.log, "training log (JSON lines)");
  c_train->add_option("--rng-seed", tr.tc.rng_seed);
  AddTrainingOptions(c_train, tr.tc);

  TrainBase tb;
  auto* c_tb = app.add_subcommand("train-baseline", "train the unconditional baseline");
  c_tb->add_option("--train", tb.train)->required();
  c_tb->add_option("--valid", tb.valid);
  c_tb->add_option("--valid-fraction", tb.valid_fraction);
  c_tb->add_option("--out", tb.out)->required();
  c_tb->add_option("--model", tb.model, "copy the architecture of this UNCM checkpoint");
  c_tb->add_option("--config", tb.config, "model config (JSON)");
  c_tb->add_option("--batch", tb.tc.baseline_batch);
  c_tb->add_option("--steps-per-epoch", tb.tc.baseline_steps_per_epoch);
  c_tb->add_option("--rng-seed", tb.tc.rng_seed);
  AddTrainingOptions(c_tb, tb.tc);

  Seed seed;
  auto* c_seed = app.add_subcommand("seed", "compute a configuration seed");
  c_seed->add_option("--model", seed.model)->required();
  c_seed->add_option("--emails", seed.emails, "one email per line, - for stdin")->required();
  c_seed->add_option("--k", seed.k);
  c_seed->add_flag("--dp", seed.dp, "private seed");
  c_seed->add_option("--z", seed.z, "noise multiplier");
  c_seed->add_option("--delta", seed.delta, "0 selects 1e-2 / #emails");
  c_seed->add_option("--out", seed.out, "seed checkpoint");
  c_seed->add_option("--bundle", seed.bundle, "seeded-bundle checkpoint");
  c_seed->add_option("--rng-seed", seed.rng_seed);

  Estimate est;
  auto* c_est = app.add_subcommand("estimate", "estimate guess numbers");
  c_est->add_option("--model", est.model);
  c_est->add_option("--seed", est.seed, "seed checkpoint (default: baseline state)");
  c_est->add_option("--bundle", est.bundle, "seeded-bundle checkpoint");
  c_est->add_option("--baseline", est.baseline, "baseline password-model checkpoint");
  c_est->add_option("--password", est.password);
  c_est->add_option("--passwords", est.passwords, "one password per line, - for stdin");
  c_est->add_option("--samples", est.samples);
  c_est->add_option("--rng-seed", est.rng_seed);

  Attack atk;
  auto* c_atk = app.add_subcommand("attack", "seeded vs baseline guessing attack");
  c_atk->add_option("--model", atk.model)->required();
  c_atk->add_option("--test", atk.test)->required();
  c_atk->add_option("--baseline", atk.baseline, "baseline password-model checkpoint");
  c_atk->add_option("--private-model", atk.private_model, "private UNCM checkpoint");
  c_atk->add_option("--z", atk.z);
  c_atk->add_option("--delta", atk.delta);
  c_atk->add_option("--k", atk.ac.k);
  c_atk->add_option("--samples", atk.ac.samples);
  c_atk->add_option("--budgets", atk.ac.budgets);
  c_atk->add_option("--csv", atk.csv, "average curves (CSV)");
  c_atk->add_option("--svg", atk.svg, "average curves (SVG)");
  c_atk->add_option("--per-leak-csv", atk.per_leak);
  c_atk->add_option("--rng-seed", atk.ac.rng_seed);

  Mia mia;
  auto* c_mia = app.add_subcommand("mia", "membership-inference attack on seeds");
  c_mia->add_option("--model", mia.model)->required();
  c_mia->add_option("--train", mia.train)->required();
  c_mia->add_option("--test", mia.test)->required();
  c_mia->add_flag("--dp", mia.dp);
  c_mia->add_option("--z", mia.z);
  c_mia->add_option("--delta", mia.delta);
  c_mia->add_flag("--noise", mia.mc.noise_seeds, "replace seeds by Gaussian noise");
  c_mia->add_option("--k", mia.mc.k);
  c_mia->add_option("--seeds-per-leak", mia.mc.seeds_per_leak);
  c_mia->add_option("--runs", mia.mc.runs);
  c_mia->add_option("--epochs", mia.mc.max_epochs);
  c_mia->add_option("--rng-seed", mia.mc.rng_seed);

  Serve serve;
  auto* c_serve = app.add_subcommand("serve", "run the strength-meter HTTP service");
  c_serve->add_option("--config", serve.config, "service config (JSON)");
  c_serve->add_option("--model", serve.model);
  c_serve->add_option("--data-dir", serve.data_dir);
  c_serve->add_option("--bind", serve.bind);
  c_serve->add_option("--port", serve.port);
  c_serve->add_option("--samples", serve.samples);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*c_synth) synth.Run();
    else if (*c_clean) clean.Run();
    else if (*c_split) split.Run();
    else if (*c_train) tr.Run();
    else if (*c_tb) tb.Run();
    else if (*c_seed) seed.Run();
    else if (*c_est) est.Run();
    else if (*c_atk) atk.Run();
    else if (*c_mia) mia.Run();
    else if (*c_serve) serve.Run();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
