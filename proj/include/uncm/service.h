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

#ifndef UNCM_SERVICE_H_
#define UNCM_SERVICE_H_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "uncm/guess_estimator.h"
#include "uncm/password_model.h"
#include "uncm/uncm_model.h"

namespace uncm::service {

inline constexpr std::string_view kBaselineId = "baseline";
inline constexpr std::size_t kServiceSamples = 20'000;

struct ServiceConfig {
  std::string model_path;
  std::string baseline_path;  // optional password-model checkpoint
  std::string data_dir = "uncm-data";
  std::string bind_address = "127.0.0.1";
  int port = 8080;
  std::size_t estimator_samples = kServiceSamples;
  std::size_t default_k = kDefaultSubsample;
  std::size_t default_private_k = kDefaultPrivateSubsample;
  double dp_z = 3.0;
  double dp_delta = 0.0;  // zero selects 1e-2 / |emails|
  std::uint64_t rng_seed = 0;  // zero draws from std::random_device

  void Validate() const;
  nlohmann::json ToJson() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static ServiceConfig FromJson(const nlohmann::json& j);
  // Applies UNCM_<KEY> overrides, e.g. UNCM_DATA_DIR, UNCM_PORT.
  void ApplyEnv(const std::function<const char*(const char*)>& lookup);
  // Reads `path` when non-empty, then applies the process environment.
  static ServiceConfig Load(const std::filesystem::path& path);
};

// <6 weak, [6,8) fair, [8,10) strong, >=10 very strong.
std::string StrengthLabel(double log10_guess_number);

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  nlohmann::json json() const { return nlohmann::json::parse(body); }
};

// One line per request; never receives request bodies.
using LogSink = std::function<void(std::string_view)>;

class PsmService {
 public:
  // `baseline` replaces the zero-state UNCM baseline when given.
  PsmService(UncmModel model, ServiceConfig config,
             std::optional<pwmodel::SeededModel> baseline = std::nullopt,
             LogSink log = nullptr);
  ~PsmService();
  PsmService(const PsmService&) = delete;
  PsmService& operator=(const PsmService&) = delete;

  // Loads the model (and optional baseline) named in the config.
  static std::unique_ptr<PsmService> FromConfig(const ServiceConfig& config,
                                                LogSink log = nullptr);

  Response CreateSeed(std::string_view body);
  Response Estimate(std::string_view body);
  Response ListSeeds();
  Response Export(std::string_view seed_id);
  // Routes a request and writes one log line.
  Response Handle(std::string_view method, std::string_view path,
                  std::string_view body);

  // Blocks until Stop(). Binds to config.port, or an ephemeral port when 0.
  void Serve();
  void Stop();
  // Port actually bound; valid once Serve() has started listening.
  int bound_port() const { return bound_port_.load(); }
  bool WaitUntilListening(int timeout_ms) const;

  const ServiceConfig& config() const { return config_; }
  const UncmModel& model() const { return model_; }

 private:
  struct Entry;
  struct Server;

  Response Route(std::string_view method, std::string_view path,
                 std::string_view body);
  std::shared_ptr<Entry> Find(std::string_view id);
  std::shared_ptr<Entry> LoadFromDisk(std::string_view id);
  std::shared_ptr<Entry> MakeEntry(ConfigSeed seed, std::string created_at,
                                   std::optional<pwmodel::SeededModel> model);
  const guess::MCEstimator& EstimatorFor(Entry& entry);
  std::filesystem::path SeedPath(std::string_view id) const;
  std::uint64_t NextRngSeed();

  UncmModel model_;
  ServiceConfig config_;
  LogSink log_;
  std::shared_ptr<Entry> baseline_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>, std::less<>> seeds_;
  std::mutex rng_mu_;
  std::uint64_t rng_state_;
  std::unique_ptr<Server> server_;
  std::atomic<int> bound_port_{0};
};

}  // namespace uncm::service

#endif  // UNCM_SERVICE_H_
