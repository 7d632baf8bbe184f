// Copyright 2026 The Lacuna Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "lacuna/providers.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "lacuna/digest.hpp"

namespace lacuna {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::kStop: return "stop";
    case FinishReason::kLength: return "length";
    case FinishReason::kError: return "error";
  }
  return "error";
}

FinishReason finish_reason_from_string(std::string_view s) {
  if (s == "stop") return FinishReason::kStop;
  if (s == "length") return FinishReason::kLength;
  if (s == "error") return FinishReason::kError;
  throw InvalidArgument("unknown finish reason: " + std::string(s));
}

std::string ProviderError::describe(Kind kind) {
  switch (kind) {
    case Kind::kAuth: return "provider auth error";
    case Kind::kTimeout: return "provider timeout";
    case Kind::kMalformedResponse: return "malformed provider response";
    case Kind::kTransport: return "provider transport error";
    case Kind::kContract: return "provider contract violation";
  }
  return "provider error";
}

ordered_json to_json(const GenerationRequest& r) {
  ordered_json j;
  j["system"] = r.system ? ordered_json(*r.system) : ordered_json(nullptr);
  j["user"] = r.user;
  j["max_new_tokens"] = r.max_new_tokens;
  j["deterministic"] = r.deterministic;
  return j;
}

ordered_json to_json(const GenerationResponse& r) {
  ordered_json j;
  j["text"] = r.text;
  j["model_id"] = r.model_id;
  j["finish_reason"] = std::string(to_string(r.finish_reason));
  return j;
}

ordered_json to_json(const EmbeddingRequest& r) {
  ordered_json j;
  j["texts"] = r.texts;
  j["task_prefix"] = r.task_prefix ? ordered_json(*r.task_prefix) : ordered_json(nullptr);
  return j;
}

namespace {

template <typename T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(std::string("missing field: ") + key);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(std::string("bad field type: ") + key);
  }
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_string()) throw SchemaError(std::string("bad field type: ") + key);
  return j.at(key).get<std::string>();
}

}  // namespace

GenerationRequest generation_request_from_json(const json& j) {
  GenerationRequest r;
  r.system = optional_string(j, "system");
  r.user = field<std::string>(j, "user");
  if (j.contains("max_new_tokens")) r.max_new_tokens = field<int>(j, "max_new_tokens");
  if (j.contains("deterministic")) r.deterministic = field<bool>(j, "deterministic");
  return r;
}

GenerationResponse generation_response_from_json(const json& j) {
  GenerationResponse r;
  r.text = field<std::string>(j, "text");
  if (j.contains("model_id")) r.model_id = field<std::string>(j, "model_id");
  if (j.contains("finish_reason"))
    r.finish_reason = finish_reason_from_string(field<std::string>(j, "finish_reason"));
  return r;
}

EmbeddingRequest embedding_request_from_json(const json& j) {
  EmbeddingRequest r;
  r.texts = field<std::vector<std::string>>(j, "texts");
  r.task_prefix = optional_string(j, "task_prefix");
  return r;
}

std::string request_digest(const GenerationRequest& r) {
  return sha256_hex(to_json(r).dump()).substr(0, 16);
}

std::string request_digest(const EmbeddingRequest& r) {
  return sha256_hex(to_json(r).dump()).substr(0, 16);
}

GenerationResponse generate(GenerationProvider& provider, const GenerationRequest& request) {
  if (request.max_new_tokens <= 0) throw InvalidArgument("max_new_tokens must be positive");
  return provider.generate(request);
}

std::vector<Vector> embed(EmbeddingProvider& provider, const EmbeddingRequest& request) {
  if (request.texts.empty()) throw InvalidArgument("embedding batch is empty");
  auto vectors = provider.embed(request);
  const std::string digest = request_digest(request);
  if (vectors.size() != request.texts.size())
    throw ProviderError(ProviderError::Kind::kContract,
                        "expected " + std::to_string(request.texts.size()) + " vectors, got " +
                            std::to_string(vectors.size()),
                        1, digest);
  for (const auto& v : vectors) {
    if (v.empty() || v.size() != vectors.front().size())
      throw ProviderError(ProviderError::Kind::kContract, "inconsistent embedding dimensions", 1,
                          digest);
  }
  return vectors;
}

// ---------------------------------------------------------------------------

GenerationResponse EchoGenerator::generate(const GenerationRequest& request) {
  return {request.user, id(), FinishReason::kStop};
}

GenerationResponse FixedGenerator::generate(const GenerationRequest&) {
  return {text_, id(), FinishReason::kStop};
}

GenerationResponse ContinuationOracle::generate(const GenerationRequest& request) {
  const std::string& prompt = request.user;
  for (const auto& doc : documents_) {
    std::size_t pos = 0;
    std::size_t i = 0;
    bool matched = false;
    while (i < doc.size()) {
      const std::string& s = doc[i];
      if (i > 0) {
        if (pos >= prompt.size() || prompt[pos] != ' ') break;
        ++pos;
      }
      if (prompt.compare(pos, s.size(), s) != 0) break;
      pos += s.size();
      ++i;
      if (pos == prompt.size()) {
        matched = true;
        break;
      }
    }
    if (!matched) continue;
    std::string text;
    for (std::size_t k = i; k < doc.size() && k < i + window_; ++k) {
      if (!text.empty()) text += ' ';
      text += doc[k];
    }
    return {text, id(), FinishReason::kStop};
  }
  return {"", id(), FinishReason::kStop};
}

std::vector<Vector> BagOfWordsEmbedder::embed(const EmbeddingRequest& request) {
  std::vector<Vector> out;
  out.reserve(request.texts.size());
  for (const auto& text : request.texts) {
    Vector v(dimension_, 0.0);
    std::uint64_t h = 0;
    bool in_word = false;
    auto flush = [&] {
      if (in_word) v[h % dimension_] += 1.0;
      in_word = false;
    };
    for (unsigned char c : text) {
      if (std::isalnum(c) || c >= 0x80) {
        if (!in_word) {
          h = 1469598103934665603ULL;
          in_word = true;
        }
        h ^= static_cast<unsigned char>(std::tolower(c));
        h *= 1099511628211ULL;
      } else {
        flush();
      }
    }
    flush();
    out.push_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------

HttpOptions HttpOptions::from_environment(std::string_view name) {
  std::string prefix = "LACUNA_";
  for (char c : name) prefix += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  auto get = [&](const char* suffix) -> std::optional<std::string> {
    const char* v = std::getenv((prefix + suffix).c_str());
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
  HttpOptions o;
  auto endpoint = get("_ENDPOINT");
  if (!endpoint) throw InvalidArgument(prefix + "_ENDPOINT is not set");
  o.endpoint = *endpoint;
  o.api_key = get("_API_KEY").value_or("");
  o.model = get("_MODEL").value_or(std::string(name));
  if (auto t = get("_TIMEOUT_MS")) {
    try {
      o.timeout = std::chrono::milliseconds(std::stol(*t));
    } catch (const std::exception&) {
      throw InvalidArgument(prefix + "_TIMEOUT_MS is not a number");
    }
  }
  return o;
}

HttpTransport::HttpTransport(HttpOptions options)
    : options_(std::move(options)),
      in_flight_(std::clamp(options_.max_in_flight, 1, 1024)) {
  const std::string& ep = options_.endpoint;
  auto scheme_end = ep.find("://");
  if (scheme_end == std::string::npos) throw InvalidArgument("endpoint needs a scheme: " + ep);
  auto path_start = ep.find('/', scheme_end + 3);
  scheme_host_port_ = ep.substr(0, path_start);
  base_path_ = path_start == std::string::npos ? "" : ep.substr(path_start);
  while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  if (options_.max_attempts < 1) throw InvalidArgument("max_attempts must be >= 1");
}

HttpTransport::~HttpTransport() = default;

json HttpTransport::post(const std::string& path, const json& body, const std::string& digest) {
  using Kind = ProviderError::Kind;
  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  httplib::Client client(scheme_host_port_);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

  const std::string payload = body.dump();
  auto delay = options_.backoff;
  Kind last_kind = Kind::kTransport;
  std::string last_message;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    auto res = client.Post(base_path_ + path, headers, payload, "application/json");
    if (!res) {
      auto err = res.error();
      last_kind = (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
                      ? Kind::kTimeout
                      : Kind::kTransport;
      last_message = httplib::to_string(err);
      continue;
    }
    if (res->status == 401 || res->status == 403)
      throw ProviderError(Kind::kAuth, "HTTP " + std::to_string(res->status), attempt, digest);
    if (res->status == 429 || res->status >= 500) {
      last_kind = Kind::kTransport;
      last_message = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300)
      throw ProviderError(Kind::kTransport, "HTTP " + std::to_string(res->status), attempt,
                          digest);
    json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object())
      throw ProviderError(Kind::kMalformedResponse, "body is not a JSON object", attempt, digest);
    return parsed;
  }
  throw ProviderError(last_kind, last_message, options_.max_attempts, digest);
}

GenerationResponse HttpGenerationProvider::generate(const GenerationRequest& request) {
  json body = to_json(request);
  body["model"] = transport_.options().model;
  const std::string digest = request_digest(request);
  json res = transport_.post("/generate", body, digest);
  try {
    auto r = generation_response_from_json(res);
    if (r.model_id.empty()) r.model_id = transport_.options().model;
    return r;
  } catch (const Error& e) {
    throw ProviderError(ProviderError::Kind::kMalformedResponse, e.what(), 1, digest);
  }
}

std::vector<Vector> HttpEmbeddingProvider::embed(const EmbeddingRequest& request) {
  json body = to_json(request);
  body["model"] = transport_.options().model;
  const std::string digest = request_digest(request);
  json res = transport_.post("/embed", body, digest);
  try {
    return res.at("vectors").get<std::vector<Vector>>();
  } catch (const json::exception& e) {
    throw ProviderError(ProviderError::Kind::kMalformedResponse, e.what(), 1, digest);
  }
}

std::vector<std::vector<std::string>> HttpNerProvider::person_spans(
    std::span<const std::string> texts) {
  json body;
  body["model"] = transport_.options().model;
  body["texts"] = std::vector<std::string>(texts.begin(), texts.end());
  const std::string digest = sha256_hex(body.dump()).substr(0, 16);
  json res = transport_.post("/ner", body, digest);
  std::vector<std::vector<std::string>> out;
  try {
    out = res.at("persons").get<std::vector<std::vector<std::string>>>();
  } catch (const json::exception& e) {
    throw ProviderError(ProviderError::Kind::kMalformedResponse, e.what(), 1, digest);
  }
  if (out.size() != texts.size())
    throw ProviderError(ProviderError::Kind::kContract, "span list size mismatch", 1, digest);
  return out;
}

// ---------------------------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path ResponseCache::path_for(const std::string& key) const {
  return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<json> ResponseCache::get(const std::string& key) const {
  std::ifstream in(path_for(key), std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  json j = json::parse(ss.str(), nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  return j;
}

void ResponseCache::put(const std::string& key, const json& value) {
  std::lock_guard lock(write_mutex_);
  auto target = path_for(key);
  std::filesystem::create_directories(target.parent_path());
  auto tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write cache entry: " + tmp.string());
    out << value.dump();
  }
  std::filesystem::rename(tmp, target);
}

GenerationResponse CachingGenerationProvider::generate(const GenerationRequest& request) {
  const std::string key = sha256_hex(inner_->id() + "\n" + to_json(request).dump());
  if (auto hit = cache_->get(key)) {
    try {
      auto r = generation_response_from_json(*hit);
      ++hits_;
      return r;
    } catch (const Error&) {
    }
  }
  auto r = inner_->generate(request);
  cache_->put(key, to_json(r));
  return r;
}

std::vector<Vector> CachingEmbeddingProvider::embed(const EmbeddingRequest& request) {
  const std::string key = sha256_hex(inner_->id() + "\n" + to_json(request).dump());
  if (auto hit = cache_->get(key)) {
    try {
      return hit->get<std::vector<Vector>>();
    } catch (const json::exception&) {
    }
  }
  auto v = inner_->embed(request);
  cache_->put(key, json(v));
  return v;
}

// ---------------------------------------------------------------------------

std::unique_ptr<GenerationProvider> make_generation_provider(
    std::string_view id, const std::optional<std::filesystem::path>& cache_dir) {
  if (id == "mock:echo") return std::make_unique<EchoGenerator>();
  if (id.starts_with("mock:fixed:"))
    return std::make_unique<FixedGenerator>(std::string(id.substr(11)));
  if (id.starts_with("http:")) {
    std::unique_ptr<GenerationProvider> p =
        std::make_unique<HttpGenerationProvider>(HttpOptions::from_environment(id.substr(5)));
    if (cache_dir)
      p = std::make_unique<CachingGenerationProvider>(std::move(p),
                                                      std::make_shared<ResponseCache>(*cache_dir));
    return p;
  }
  throw InvalidArgument("unknown generation provider: " + std::string(id));
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(
    std::string_view id, const std::optional<std::filesystem::path>& cache_dir) {
  if (id == "mock:bow") return std::make_unique<BagOfWordsEmbedder>();
  if (id.starts_with("http:")) {
    std::unique_ptr<EmbeddingProvider> p =
        std::make_unique<HttpEmbeddingProvider>(HttpOptions::from_environment(id.substr(5)));
    if (cache_dir)
      p = std::make_unique<CachingEmbeddingProvider>(std::move(p),
                                                     std::make_shared<ResponseCache>(*cache_dir));
    return p;
  }
  throw InvalidArgument("unknown embedding provider: " + std::string(id));
}

std::unique_ptr<NerProvider> make_ner_provider(std::string_view id) {
  if (id == "heuristic") return std::make_unique<HeuristicNer>();
  if (id.starts_with("http:"))
    return std::make_unique<HttpNerProvider>(HttpOptions::from_environment(id.substr(5)));
  throw InvalidArgument("unknown ner provider: " + std::string(id));
}

}  // namespace lacuna
