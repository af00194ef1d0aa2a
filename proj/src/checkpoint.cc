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

#include "uncm/checkpoint.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "uncm/errors.h"

namespace uncm::ckpt {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr std::size_t kHeaderBytes = 16;

void PutU64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t GetU64(std::string_view in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[i])) << (8 * i);
  }
  return v;
}

std::size_t NumElements(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

NamedArray FromTensor(const std::string& name, const nn::Tensor& t) {
  NamedArray a;
  a.name = name;
  a.shape = t.shape();
  a.values.reserve(t.size());
  for (double x : t.data()) a.values.push_back(static_cast<float>(x));
  return a;
}

nn::Tensor ToTensor(const NamedArray& a) {
  std::vector<double> data(a.values.begin(), a.values.end());
  return nn::Tensor(a.shape, std::move(data));
}

void AddParams(Container& c, const nn::ParamSet& params,
               bool (*keep)(const std::string&)) {
  for (const auto& name : params.Names()) {
    if (keep == nullptr || keep(name)) {
      c.arrays.push_back(FromTensor(name, params.Get(name)));
    }
  }
}

nn::ParamSet ParamsFrom(const Container& c, std::string_view prefix) {
  nn::ParamSet p;
  for (const NamedArray& a : c.arrays) {
    if (a.name.rfind(prefix, 0) == 0) p.Add(a.name, ToTensor(a));
  }
  return p;
}

void ExpectKind(const Container& c, std::string_view kind) {
  if (c.kind != kind) {
    throw FormatError("checkpoint kind is '" + c.kind + "', expected '" +
                      std::string(kind) + "'");
  }
}

bool IsCoreWeight(const std::string& name) {
  return name.rfind("pm/", 0) == 0 && name.rfind("pm/seed_", 0) != 0;
}

std::string StateName(char which, std::size_t layer) {
  return std::string("state/") + which + std::to_string(layer);
}

template <typename F>
auto Guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint ") + what + ": " + e.what());
  }
}

}  // namespace

const NamedArray& Container::array(std::string_view name) const {
  for (const NamedArray& a : arrays) {
    if (a.name == name) return a;
  }
  throw FormatError("checkpoint has no array '" + std::string(name) + "'");
}

bool Container::has_array(std::string_view name) const {
  return std::any_of(arrays.begin(), arrays.end(),
                     [&](const NamedArray& a) { return a.name == name; });
}

std::string Serialize(const Container& c) {
  json manifest;
  manifest["format"] = kFormat;
  manifest["kind"] = c.kind;
  manifest["architecture"] = c.architecture;
  manifest["vocabs"] = c.vocabs;
  if (!c.seed.is_null()) manifest["seed"] = c.seed;
  json arrays = json::array();
  std::size_t offset = 0;
  for (const NamedArray& a : c.arrays) {
    if (NumElements(a.shape) != a.values.size()) {
      throw ShapeError("checkpoint array '" + a.name + "' does not match its shape");
    }
    const std::size_t length = a.values.size() * sizeof(float);
    arrays.push_back(
        {{"name", a.name}, {"shape", a.shape}, {"offset", offset}, {"length", length}});
    offset += length;
  }
  manifest["arrays"] = std::move(arrays);
  const std::string text = manifest.dump();

  std::string out;
  out.reserve(kHeaderBytes + text.size() + offset);
  out.append(kMagic);
  PutU64(out, text.size());
  out.append(text);
  for (const NamedArray& a : c.arrays) {
    const std::size_t bytes = a.values.size() * sizeof(float);
    const std::size_t at = out.size();
    out.resize(at + bytes);
    std::memcpy(out.data() + at, a.values.data(), bytes);
  }
  return out;
}

Container Parse(std::string_view bytes) {
  if (bytes.size() < kHeaderBytes || bytes.substr(0, kMagic.size()) != kMagic) {
    throw FormatError("not an UNCM checkpoint (bad magic)");
  }
  const std::uint64_t mlen = GetU64(bytes.substr(8, 8));
  if (mlen > bytes.size() - kHeaderBytes) {
    throw FormatError("checkpoint manifest is truncated");
  }
  const std::string_view payload = bytes.substr(kHeaderBytes + mlen);
  return Guarded("manifest", [&] {
    const json m = json::parse(bytes.substr(kHeaderBytes, mlen));
    if (m.at("format").get<std::string>() != kFormat) {
      throw FormatError("unsupported checkpoint format '" +
                        m.at("format").get<std::string>() + "'");
    }
    Container c;
    c.kind = m.at("kind").get<std::string>();
    c.architecture = m.at("architecture");
    c.vocabs = m.at("vocabs");
    c.seed = m.value("seed", json());
    std::size_t expected = 0;
    for (const json& aj : m.at("arrays")) {
      NamedArray a;
      a.name = aj.at("name").get<std::string>();
      a.shape = aj.at("shape").get<std::vector<std::size_t>>();
      const auto offset = aj.at("offset").get<std::size_t>();
      const auto length = aj.at("length").get<std::size_t>();
      if (offset != expected || length != NumElements(a.shape) * sizeof(float) ||
          offset + length > payload.size()) {
        throw FormatError("checkpoint array '" + a.name +
                          "' does not tile the payload");
      }
      a.values.resize(length / sizeof(float));
      std::memcpy(a.values.data(), payload.data() + offset, length);
      expected += length;
      c.arrays.push_back(std::move(a));
    }
    if (expected != payload.size()) {
      throw FormatError("checkpoint payload has trailing bytes");
    }
    return c;
  });
}

void WriteFile(const Container& container, const std::filesystem::path& path) {
  const std::string bytes = Serialize(container);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Container ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("checkpoint not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str());
}

json PasswordConfigToJson(const pwmodel::PasswordModelConfig& c) {
  return {{"alphabet", c.alphabet},   {"max_len", c.max_len},
          {"embedding", c.embedding}, {"hidden", c.hidden},
          {"layers", c.layers},       {"seed_dim", c.seed_dim},
          {"conditional", c.conditional}};
}

pwmodel::PasswordModelConfig PasswordConfigFromJson(const json& j) {
  return Guarded("password architecture", [&] {
    pwmodel::PasswordModelConfig c;
    c.alphabet = j.at("alphabet").get<std::string>();
    c.max_len = j.at("max_len").get<std::size_t>();
    c.embedding = j.at("embedding").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::size_t>();
    c.layers = j.at("layers").get<std::size_t>();
    c.seed_dim = j.at("seed_dim").get<std::size_t>();
    c.conditional = j.at("conditional").get<bool>();
    return c;
  });
}

json ConfigToJson(const UncmConfig& c) {
  const encoder::EncoderConfig& e = c.encoder;
  const mixing::MixConfig& m = c.mix;
  return {{"encoder",
           {{"char_embedding", e.char_embedding},
            {"gru_output", e.gru_output},
            {"provider_embedding", e.provider_embedding},
            {"domain_embedding", e.domain_embedding},
            {"max_username", e.max_username},
            {"extra_modalities", e.extra_modalities}}},
          {"mix",
           {{"value_dim", m.value_dim},
            {"attention_dim", m.attention_dim},
            {"seed_dim", m.seed_dim},
            {"output_projection", m.output_projection},
            {"kind", mixing::AttentionKindName(m.kind)},
            {"clip_norm", m.clip_norm}}},
          {"password", PasswordConfigToJson(c.password)},
          {"vocab_cutoff", c.vocab_cutoff}};
}

UncmConfig ConfigFromJson(const json& j) {
  UncmConfig c = Guarded("architecture", [&] {
    UncmConfig c;
    const json& e = j.at("encoder");
    c.encoder.char_embedding = e.at("char_embedding").get<std::size_t>();
    c.encoder.gru_output = e.at("gru_output").get<std::size_t>();
    c.encoder.provider_embedding = e.at("provider_embedding").get<std::size_t>();
    c.encoder.domain_embedding = e.at("domain_embedding").get<std::size_t>();
    c.encoder.max_username = e.at("max_username").get<std::size_t>();
    c.encoder.extra_modalities =
        e.at("extra_modalities").get<std::vector<std::string>>();
    const json& m = j.at("mix");
    c.mix.value_dim = m.at("value_dim").get<std::size_t>();
    c.mix.attention_dim = m.at("attention_dim").get<std::size_t>();
    c.mix.seed_dim = m.at("seed_dim").get<std::size_t>();
    c.mix.output_projection = m.at("output_projection").get<bool>();
    c.mix.kind = mixing::ParseAttentionKind(m.at("kind").get<std::string>());
    c.mix.clip_norm = m.at("clip_norm").get<double>();
    c.password = PasswordConfigFromJson(j.at("password"));
    c.vocab_cutoff = j.at("vocab_cutoff").get<std::size_t>();
    return c;
  });
  c.Validate();
  return c;
}

json VocabsToJson(const encoder::Vocabs& v) {
  return {{"providers", v.providers.tokens()},
          {"domains", v.domains.tokens()},
          {"chars", v.chars.chars()}};
}

encoder::Vocabs VocabsFromJson(const json& j) {
  return Guarded("vocabs", [&] {
    encoder::Vocabs v;
    v.providers = encoder::Vocab::FromTokens(
        j.at("providers").get<std::vector<std::string>>());
    v.domains = encoder::Vocab::FromTokens(
        j.at("domains").get<std::vector<std::string>>());
    v.chars = encoder::CharTable(j.at("chars").get<std::string>());
    return v;
  });
}

json SeedToJson(const ConfigSeed& seed) {
  json j = {{"id", seed.id},
            {"k_used", seed.k_used},
            {"skipped", seed.skipped},
            {"rng_seed", seed.rng_seed}};
  if (seed.dp) {
    j["privacy"] = {{"z", seed.dp->z},
                    {"s", seed.dp->s},
                    {"q_rate", seed.dp->q_rate},
                    {"delta", seed.dp->delta},
                    {"epsilon", seed.dp->epsilon}};
  }
  return j;
}

Container FromUncm(const UncmModel& model) {
  Container c;
  c.kind = kKindUncm;
  c.architecture = ConfigToJson(model.config);
  c.vocabs = VocabsToJson(model.vocabs);
  AddParams(c, model.params, nullptr);
  return c;
}

UncmModel ToUncm(const Container& c) {
  ExpectKind(c, kKindUncm);
  UncmModel m{ConfigFromJson(c.architecture), VocabsFromJson(c.vocabs),
              ParamsFrom(c, "")};
  std::mt19937_64 rng(0);
  const UncmModel fresh = InitUncm(m.config, m.vocabs, rng);
  for (const auto& name : fresh.params.Names()) {
    if (!m.params.Contains(name)) {
      throw FormatError("checkpoint is missing parameter '" + name + "'");
    }
    if (m.params.Get(name).shape() != fresh.params.Get(name).shape()) {
      throw FormatError("checkpoint parameter '" + name + "' has the wrong shape");
    }
  }
  if (m.params.Names().size() != fresh.params.Names().size()) {
    throw FormatError("checkpoint has unexpected parameters");
  }
  return m;
}

Container FromPasswordModel(const nn::ParamSet& params,
                            const pwmodel::PasswordModelConfig& config) {
  Container c;
  c.kind = kKindPasswordModel;
  c.architecture = PasswordConfigToJson(config);
  AddParams(c, params, nullptr);
  return c;
}

std::pair<nn::ParamSet, pwmodel::PasswordModelConfig> ToPasswordModel(
    const Container& c) {
  ExpectKind(c, kKindPasswordModel);
  auto config = PasswordConfigFromJson(c.architecture);
  nn::ParamSet params = ParamsFrom(c, "pm/");
  // Validates names and shapes.
  pwmodel::InferenceNet(params, config);
  return {std::move(params), std::move(config)};
}

Container FromSeed(const ConfigSeed& seed) {
  Container c;
  c.kind = kKindSeed;
  c.seed = SeedToJson(seed);
  c.arrays.push_back(FromTensor("seed/psi", seed.psi));
  return c;
}

ConfigSeed ToSeed(const Container& c) {
  ExpectKind(c, kKindSeed);
  return Guarded("seed block", [&] {
    ConfigSeed s;
    s.id = c.seed.at("id").get<std::string>();
    s.k_used = c.seed.at("k_used").get<std::size_t>();
    s.skipped = c.seed.at("skipped").get<std::size_t>();
    s.rng_seed = c.seed.at("rng_seed").get<std::uint64_t>();
    if (c.seed.contains("privacy")) {
      const json& p = c.seed["privacy"];
      s.dp = dp::PrivacyAccount{p.at("z").get<double>(), p.at("s").get<double>(),
                                p.at("q_rate").get<double>(),
                                p.at("delta").get<double>(),
                                p.at("epsilon").get<double>()};
    }
    s.psi = ToTensor(c.array("seed/psi"));
    return s;
  });
}

Container SeededBundle(const UncmModel& model, const ConfigSeed& seed) {
  Container c;
  c.kind = kKindSeededBundle;
  pwmodel::PasswordModelConfig pc = model.config.password;
  pc.conditional = false;
  c.architecture = PasswordConfigToJson(pc);
  c.seed = SeedToJson(seed);
  AddParams(c, model.params, &IsCoreWeight);
  const pwmodel::InitialState states =
      pwmodel::ProjectSeedStates(model.params, model.config.password, seed.psi);
  for (std::size_t l = 0; l < states.h.size(); ++l) {
    c.arrays.push_back(FromTensor(StateName('h', l), states.h[l]));
    c.arrays.push_back(FromTensor(StateName('c', l), states.c[l]));
  }
  return c;
}

pwmodel::SeededModel LoadSeededBundle(const Container& c) {
  ExpectKind(c, kKindSeededBundle);
  const auto config = PasswordConfigFromJson(c.architecture);
  const std::string id =
      Guarded("seed block", [&] { return c.seed.at("id").get<std::string>(); });
  auto net = std::make_shared<const pwmodel::InferenceNet>(ParamsFrom(c, "pm/"),
                                                           config);
  pwmodel::InitialState states;
  for (std::size_t l = 0; l < config.layers; ++l) {
    states.h.push_back(ToTensor(c.array(StateName('h', l))));
    states.c.push_back(ToTensor(c.array(StateName('c', l))));
    if (states.h.back().size() != config.hidden ||
        states.c.back().size() != config.hidden) {
      throw FormatError("seeded bundle state has the wrong width");
    }
  }
  return pwmodel::SeededModel(std::move(net), std::move(states), id);
}

}  // namespace uncm::ckpt
