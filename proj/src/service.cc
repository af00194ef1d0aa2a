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

#include "uncm/service.h"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <numbers>
#include <random>
#include <thread>

#include "httplib.h"
#include "uncm/checkpoint.h"
#include "uncm/errors.h"

namespace uncm::service {

using nlohmann::json;

namespace {

// Request validation failure tied to one body field.
class FieldError : public InvalidArgument {
 public:
  FieldError(std::string field, const std::string& message)
      : InvalidArgument(message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

Response JsonResponse(int status, const json& body) {
  Response r;
  r.status = status;
  r.body = body.dump();
  return r;
}

Response ErrorResponse(int status, std::string_view code, std::string_view message,
                       std::optional<std::string> field = std::nullopt) {
  json e = {{"code", code}, {"message", message}};
  if (field) e["field"] = *field;
  return JsonResponse(status, {{"error", e}});
}

json ParseBody(std::string_view body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw FieldError("body", "request body is not valid JSON");
  if (!j.is_object()) throw FieldError("body", "request body must be a JSON object");
  return j;
}

void RejectUnknown(const json& j, std::initializer_list<std::string_view> known,
                   std::string_view prefix = "") {
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw FieldError(std::string(prefix) + key, "unknown field");
    }
  }
}

double PositiveNumber(const json& j, const std::string& field) {
  if (!j.is_number() || !std::isfinite(j.get<double>()) || j.get<double>() <= 0) {
    throw FieldError(field, "must be a positive number");
  }
  return j.get<double>();
}

std::string Utc(std::chrono::system_clock::time_point t) {
  const auto us =
      std::chrono::duration_cast<std::chrono::microseconds>(t.time_since_epoch())
          .count();
  const std::time_t secs = static_cast<std::time_t>(us / 1'000'000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%06lldZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec, static_cast<long long>(us % 1'000'000));
  return buf;
}

bool ValidId(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
  });
}

std::uint64_t Fnv(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Exclusive advisory lock on a file, released on destruction.
class FileLock {
 public:
  explicit FileLock(const std::filesystem::path& path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error("cannot open lock file " + path.string());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw Error("cannot lock " + path.string());
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

template <typename T>
T ParseNumber(std::string_view text, const char* name) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InvalidArgument(std::string("config: bad value for ") + name);
  }
  return value;
}

}  // namespace

// Config.

void ServiceConfig::Validate() const {
  if (port < 0 || port > 65535) throw InvalidArgument("config: port out of range");
  if (estimator_samples == 0) throw InvalidArgument("config: estimator_samples must be >= 1");
  if (default_k == 0 || default_private_k == 0) {
    throw InvalidArgument("config: default k must be >= 1");
  }
  if (!(dp_z > 0) || !std::isfinite(dp_z)) throw InvalidArgument("config: dp.z must be > 0");
  if (!(dp_delta >= 0 && dp_delta < 1)) throw InvalidArgument("config: dp.delta must be in [0, 1)");
  if (data_dir.empty()) throw InvalidArgument("config: data_dir is empty");
}

json ServiceConfig::ToJson() const {
  return {{"model_path", model_path},
          {"baseline_path", baseline_path},
          {"data_dir", data_dir},
          {"bind_address", bind_address},
          {"port", port},
          {"estimator_samples", estimator_samples},
          {"default_k", default_k},
          {"default_private_k", default_private_k},
          {"dp", {{"z", dp_z}, {"delta", dp_delta}}},
          {"rng_seed", rng_seed}};
}

ServiceConfig ServiceConfig::FromJson(const json& j) {
  if (!j.is_object()) throw InvalidArgument("config: expected a JSON object");
  ServiceConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "model_path") c.model_path = v.get<std::string>();
      else if (key == "baseline_path") c.baseline_path = v.get<std::string>();
      else if (key == "data_dir") c.data_dir = v.get<std::string>();
      else if (key == "bind_address") c.bind_address = v.get<std::string>();
      else if (key == "port") c.port = v.get<int>();
      else if (key == "estimator_samples") c.estimator_samples = v.get<std::size_t>();
      else if (key == "default_k") c.default_k = v.get<std::size_t>();
      else if (key == "default_private_k") c.default_private_k = v.get<std::size_t>();
      else if (key == "rng_seed") c.rng_seed = v.get<std::uint64_t>();
      else if (key == "dp") {
        for (const auto& [dk, dv] : v.items()) {
          if (dk == "z") c.dp_z = dv.get<double>();
          else if (dk == "delta") c.dp_delta = dv.get<double>();
          else throw InvalidArgument("config: unknown key dp." + dk);
        }
      } else {
        throw InvalidArgument("config: unknown key " + key);
      }
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  c.Validate();
  return c;
}

void ServiceConfig::ApplyEnv(const std::function<const char*(const char*)>& lookup) {
  auto get = [&](const char* name) -> std::optional<std::string_view> {
    const char* v = lookup(name);
    if (v == nullptr) return std::nullopt;
    return std::string_view(v);
  };
  if (auto v = get("UNCM_MODEL_PATH")) model_path = *v;
  if (auto v = get("UNCM_BASELINE_PATH")) baseline_path = *v;
  if (auto v = get("UNCM_DATA_DIR")) data_dir = *v;
  if (auto v = get("UNCM_BIND_ADDRESS")) bind_address = *v;
  if (auto v = get("UNCM_PORT")) port = ParseNumber<int>(*v, "UNCM_PORT");
  if (auto v = get("UNCM_ESTIMATOR_SAMPLES")) {
    estimator_samples = ParseNumber<std::size_t>(*v, "UNCM_ESTIMATOR_SAMPLES");
  }
  if (auto v = get("UNCM_DEFAULT_K")) default_k = ParseNumber<std::size_t>(*v, "UNCM_DEFAULT_K");
  if (auto v = get("UNCM_DEFAULT_PRIVATE_K")) {
    default_private_k = ParseNumber<std::size_t>(*v, "UNCM_DEFAULT_PRIVATE_K");
  }
  if (auto v = get("UNCM_DP_Z")) dp_z = ParseNumber<double>(*v, "UNCM_DP_Z");
  if (auto v = get("UNCM_DP_DELTA")) dp_delta = ParseNumber<double>(*v, "UNCM_DP_DELTA");
  if (auto v = get("UNCM_RNG_SEED")) rng_seed = ParseNumber<std::uint64_t>(*v, "UNCM_RNG_SEED");
  Validate();
}

ServiceConfig ServiceConfig::Load(const std::filesystem::path& path) {
  ServiceConfig c;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw NotFound("config file not found: " + path.string());
    const json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw InvalidArgument("config: invalid JSON in " + path.string());
    c = FromJson(j);
  }
  c.ApplyEnv([](const char* name) { return std::getenv(name); });
  return c;
}

std::string StrengthLabel(double log10_guess_number) {
  if (log10_guess_number < 6) return "weak";
  if (log10_guess_number < 8) return "fair";
  if (log10_guess_number < 10) return "strong";
  return "very strong";
}

// Service.

struct PsmService::Entry {
  std::string id;
  std::optional<ConfigSeed> seed;  // absent for the baseline
  std::string created_at;
  std::shared_ptr<const pwmodel::SeededModel> model;
  std::once_flag built;
  std::unique_ptr<guess::MCEstimator> estimator;
};

struct PsmService::Server {
  httplib::Server http;
};

PsmService::PsmService(UncmModel model, ServiceConfig config,
                       std::optional<pwmodel::SeededModel> baseline, LogSink log)
    : model_(std::move(model)), config_(std::move(config)), log_(std::move(log)) {
  config_.Validate();
  rng_state_ = config_.rng_seed != 0 ? config_.rng_seed : std::random_device{}();
  baseline_ = std::make_shared<Entry>();
  baseline_->id = std::string(kBaselineId);
  baseline_->model = std::make_shared<const pwmodel::SeededModel>(
      baseline ? std::move(*baseline) : MakeBaseline(model_));

  std::filesystem::create_directories(SeedPath("x").parent_path());
  for (const auto& f : std::filesystem::directory_iterator(SeedPath("x").parent_path())) {
    if (f.path().extension() != ".ckpt") continue;
    try {
      const ckpt::Container c = ckpt::ReadFile(f.path());
      ConfigSeed seed = ckpt::ToSeed(c);
      std::string created = c.seed.value("created_at", "");
      auto entry = MakeEntry(std::move(seed), std::move(created), std::nullopt);
      seeds_[entry->id] = entry;
    } catch (const Error& e) {
      if (log_) log_("skipping unreadable seed file " + f.path().filename().string());
    }
  }
}

PsmService::~PsmService() { Stop(); }

std::unique_ptr<PsmService> PsmService::FromConfig(const ServiceConfig& config,
                                                   LogSink log) {
  if (config.model_path.empty()) throw InvalidArgument("config: model_path is empty");
  UncmModel model = ckpt::ToUncm(ckpt::ReadFile(config.model_path));
  std::optional<pwmodel::SeededModel> baseline;
  if (!config.baseline_path.empty()) {
    const auto [params, pc] = ckpt::ToPasswordModel(ckpt::ReadFile(config.baseline_path));
    baseline = pwmodel::MakeBaselineModel(params, pc);
  }
  return std::make_unique<PsmService>(std::move(model), config, std::move(baseline),
                                      std::move(log));
}

std::filesystem::path PsmService::SeedPath(std::string_view id) const {
  return std::filesystem::path(config_.data_dir) / "seeds" / (std::string(id) + ".ckpt");
}

std::uint64_t PsmService::NextRngSeed() {
  std::lock_guard<std::mutex> lock(rng_mu_);
  std::mt19937_64 rng(rng_state_);
  rng_state_ = rng();
  return rng();
}

std::shared_ptr<PsmService::Entry> PsmService::MakeEntry(
    ConfigSeed seed, std::string created_at,
    std::optional<pwmodel::SeededModel> model) {
  if (seed.psi.cols() != model_.config.mix.seed_dim || seed.psi.rows() != 1) {
    throw FormatError("seed " + seed.id + " does not match the loaded model");
  }
  auto e = std::make_shared<Entry>();
  e->id = seed.id;
  e->created_at = std::move(created_at);
  e->model = std::make_shared<const pwmodel::SeededModel>(
      model ? std::move(*model) : MakeSeeded(model_, seed));
  e->seed = std::move(seed);
  return e;
}

std::shared_ptr<PsmService::Entry> PsmService::LoadFromDisk(std::string_view id) {
  const auto path = SeedPath(id);
  if (!std::filesystem::exists(path)) return nullptr;
  const ckpt::Container c = ckpt::ReadFile(path);
  auto entry = MakeEntry(ckpt::ToSeed(c), c.seed.value("created_at", ""), std::nullopt);
  std::lock_guard<std::mutex> lock(mu_);
  return seeds_.emplace(entry->id, entry).first->second;
}

std::shared_ptr<PsmService::Entry> PsmService::Find(std::string_view id) {
  if (id == kBaselineId) return baseline_;
  if (!ValidId(id)) return nullptr;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = seeds_.find(id);
    if (it != seeds_.end()) return it->second;
  }
  return LoadFromDisk(id);
}

const guess::MCEstimator& PsmService::EstimatorFor(Entry& entry) {
  std::call_once(entry.built, [&] {
    std::mt19937_64 rng(Fnv(entry.id) ^ config_.rng_seed);
    entry.estimator = std::make_unique<guess::MCEstimator>(
        guess::BuildEstimator(*entry.model, config_.estimator_samples, rng));
  });
  return *entry.estimator;
}

Response PsmService::CreateSeed(std::string_view body) {
  const json j = ParseBody(body);
  RejectUnknown(j, {"emails", "k", "dp"});
  if (!j.contains("emails") || !j["emails"].is_array()) {
    throw FieldError("emails", "must be an array of strings");
  }
  if (j["emails"].empty()) throw FieldError("emails", "must not be empty");
  std::vector<Account> accounts;
  accounts.reserve(j["emails"].size());
  for (const json& e : j["emails"]) {
    if (!e.is_string()) throw FieldError("emails", "must be an array of strings");
    accounts.push_back({e.get<std::string>(), "", {}});
  }
  std::optional<DpParams> dp;
  if (j.contains("dp") && !j["dp"].is_null()) {
    const json& d = j["dp"];
    if (!d.is_object()) throw FieldError("dp", "must be an object");
    RejectUnknown(d, {"z", "delta"}, "dp.");
    DpParams p{config_.dp_z, config_.dp_delta};
    if (d.contains("z")) p.z = PositiveNumber(d["z"], "dp.z");
    if (d.contains("delta")) {
      p.delta = PositiveNumber(d["delta"], "dp.delta");
      if (p.delta >= 1) throw FieldError("dp.delta", "must be below 1");
    }
    dp = p;
  }
  std::size_t k = dp ? config_.default_private_k : config_.default_k;
  if (j.contains("k")) {
    const json& kj = j["k"];
    if (!kj.is_number_integer() || kj.get<std::int64_t>() < 1) {
      throw FieldError("k", "must be a positive integer");
    }
    k = kj.get<std::size_t>();
  }
  if (dp && !model_.private_variant()) {
    throw Conflict("the loaded model was not trained with the private attention path");
  }

  std::filesystem::create_directories(config_.data_dir);
  FileLock lock(std::filesystem::path(config_.data_dir) / ".lock");
  ConfigSeed seed;
  try {
    seed = ComputeSeed(model_, accounts, k, NextRngSeed(), dp);
  } catch (const MalformedEmail&) {
    throw FieldError("emails", "no parseable email address");
  }
  // Round psi through the stored precision so reloads behave identically.
  ckpt::Container c = ckpt::FromSeed(seed);
  seed = ckpt::ToSeed(c);
  std::shared_ptr<Entry> entry;
  {
    std::lock_guard<std::mutex> guard(mu_);
    auto it = seeds_.find(seed.id);
    if (it != seeds_.end()) entry = it->second;
  }
  if (!entry) {
    std::string created = Utc(std::chrono::system_clock::now());
    c.seed["created_at"] = created;
    ckpt::WriteFile(c, SeedPath(seed.id));
    entry = MakeEntry(seed, created, std::nullopt);
    std::lock_guard<std::mutex> guard(mu_);
    seeds_.emplace(entry->id, entry);
  }
  json out = {{"seed_id", entry->id},
              {"k_used", entry->seed->k_used},
              {"skipped", entry->seed->skipped},
              {"created_at", entry->created_at}};
  if (entry->seed->dp) {
    out["epsilon"] = entry->seed->dp->epsilon;
    out["delta"] = entry->seed->dp->delta;
  }
  return JsonResponse(201, out);
}

Response PsmService::Estimate(std::string_view body) {
  const json j = ParseBody(body);
  RejectUnknown(j, {"seed_id", "password"});
  if (!j.contains("seed_id") || !j["seed_id"].is_string() ||
      j["seed_id"].get_ref<const std::string&>().empty()) {
    throw FieldError("seed_id", "must be a non-empty string");
  }
  if (!j.contains("password") || !j["password"].is_string()) {
    throw FieldError("password", "must be a string");
  }
  const std::string& password = j["password"].get_ref<const std::string&>();
  if (password.empty()) throw FieldError("password", "must not be empty");
  const std::string& id = j["seed_id"].get_ref<const std::string&>();
  const std::shared_ptr<Entry> entry = Find(id);
  if (!entry) throw NotFound("unknown seed_id");

  json out = {{"seed_id", entry->id}};
  if (!entry->model->InKeySpace(password)) {
    out["log10_guess_number"] = nullptr;
    out["log2_prob"] = nullptr;
    out["strength_label"] = StrengthLabel(std::numeric_limits<double>::infinity());
    out["in_keyspace"] = false;
    return JsonResponse(200, out);
  }
  const double lp = entry->model->LogProb(password);
  const double g = EstimatorFor(*entry).GuessNumberFromLogProb(lp);
  const double log10_g = std::log10(g);
  out["log10_guess_number"] = std::isfinite(log10_g) ? json(log10_g) : json(nullptr);
  out["log2_prob"] = std::isfinite(lp) ? json(lp / std::numbers::ln2) : json(nullptr);
  out["strength_label"] = StrengthLabel(log10_g);
  out["in_keyspace"] = true;
  return JsonResponse(200, out);
}

Response PsmService::ListSeeds() {
  std::vector<std::shared_ptr<Entry>> all;
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& [id, e] : seeds_) all.push_back(e);
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return std::tie(a->created_at, a->id) < std::tie(b->created_at, b->id);
  });
  json list = json::array();
  for (const auto& e : all) {
    json item = {{"seed_id", e->id}, {"k_used", e->seed->k_used},
                 {"created_at", e->created_at}};
    if (e->seed->dp) item["epsilon"] = e->seed->dp->epsilon;
    list.push_back(item);
  }
  return JsonResponse(200, {{"seeds", list}});
}

Response PsmService::Export(std::string_view seed_id) {
  const std::shared_ptr<Entry> entry = seed_id == kBaselineId ? nullptr : Find(seed_id);
  if (!entry) throw NotFound("unknown seed_id");
  Response r;
  r.content_type = "application/octet-stream";
  r.body = ckpt::Serialize(ckpt::SeededBundle(model_, *entry->seed));
  return r;
}

Response PsmService::Route(std::string_view method, std::string_view path,
                           std::string_view body) {
  constexpr std::string_view kExport = "/v1/export/";
  const bool get = method == "GET", post = method == "POST";
  if (path == "/v1/seeds") {
    if (post) return CreateSeed(body);
    if (get) return ListSeeds();
  } else if (path == "/v1/estimate") {
    if (post) return Estimate(body);
  } else if (path.starts_with(kExport)) {
    if (get) return Export(path.substr(kExport.size()));
  } else {
    return ErrorResponse(404, "not_found", "no such route");
  }
  return ErrorResponse(405, "method_not_allowed", "method not allowed");
}

Response PsmService::Handle(std::string_view method, std::string_view path,
                            std::string_view body) {
  const auto start = std::chrono::steady_clock::now();
  Response r;
  try {
    r = Route(method, path, body);
  } catch (const FieldError& e) {
    r = ErrorResponse(e.field() == "body" ? 400 : 422, "validation", e.what(), e.field());
  } catch (const NotFound& e) {
    r = ErrorResponse(404, "not_found", e.what());
  } catch (const Conflict& e) {
    r = ErrorResponse(409, "conflict", e.what());
  } catch (const std::exception&) {
    r = ErrorResponse(500, "internal", "internal error");
  }
  if (log_) {
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
    char buf[64];
    std::snprintf(buf, sizeof(buf), " %d %.1fms", r.status, ms);
    std::string line;
    line.append(method).append(" ").append(path.substr(0, 128)).append(buf);
    log_(line);
  }
  return r;
}

void PsmService::Serve() {
  server_ = std::make_unique<Server>();
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    const Response r = Handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  auto& http = server_->http;
  http.Get(R"(/.*)", handler);
  http.Post(R"(/.*)", handler);
  http.Put(R"(/.*)", handler);
  http.Delete(R"(/.*)", handler);
  int port = config_.port;
  if (port == 0) {
    port = http.bind_to_any_port(config_.bind_address);
    if (port < 0) throw Error("cannot bind " + config_.bind_address);
  } else if (!http.bind_to_port(config_.bind_address, port)) {
    throw Error("cannot bind " + config_.bind_address + ":" + std::to_string(port));
  }
  bound_port_ = port;
  if (log_) log_("listening on " + config_.bind_address + ":" + std::to_string(port));
  http.listen_after_bind();
}

bool PsmService::WaitUntilListening(int timeout_ms) const {
  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  while (std::chrono::steady_clock::now() < deadline) {
    if (server_ && server_->http.is_running() && bound_port_ > 0) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return false;
}

void PsmService::Stop() {
  if (server_) server_->http.stop();
}

}  // namespace uncm::service
