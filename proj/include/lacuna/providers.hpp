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

#pragma once

// Contracts for the external model services (text generation, embeddings,
// person-name tagging), their JSON-over-HTTP transport, a content-addressed
// response cache, and deterministic mocks for hermetic runs.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lacuna/corpus.hpp"
#include "lacuna/error.hpp"
#include "lacuna/nameaudit.hpp"

namespace lacuna {

inline constexpr std::string_view kNarrativeEmbeddingPrefix =
    "Retrieve stories with a similar narrative to the given story:";

struct GenerationRequest {
  std::optional<std::string> system;
  std::string user;
  int max_new_tokens = 128;
  bool deterministic = true;  // greedy decoding

  friend bool operator==(const GenerationRequest&, const GenerationRequest&) = default;
};

enum class FinishReason { kStop, kLength, kError };
std::string_view to_string(FinishReason reason);
FinishReason finish_reason_from_string(std::string_view s);

struct GenerationResponse {
  std::string text;
  std::string model_id;
  FinishReason finish_reason = FinishReason::kStop;

  friend bool operator==(const GenerationResponse&, const GenerationResponse&) = default;
};

struct EmbeddingRequest {
  std::vector<std::string> texts;
  std::optional<std::string> task_prefix;

  friend bool operator==(const EmbeddingRequest&, const EmbeddingRequest&) = default;
};

using Vector = std::vector<double>;

nlohmann::ordered_json to_json(const GenerationRequest& r);
nlohmann::ordered_json to_json(const GenerationResponse& r);
nlohmann::ordered_json to_json(const EmbeddingRequest& r);
GenerationRequest generation_request_from_json(const nlohmann::json& j);
GenerationResponse generation_response_from_json(const nlohmann::json& j);
EmbeddingRequest embedding_request_from_json(const nlohmann::json& j);

// Short content digest used to tag provider errors and cache entries.
std::string request_digest(const GenerationRequest& r);
std::string request_digest(const EmbeddingRequest& r);

class ProviderError : public Error {
 public:
  enum class Kind { kAuth, kTimeout, kMalformedResponse, kTransport, kContract };

  ProviderError(Kind kind, std::string message, int attempts = 1, std::string digest = {})
      : Error(describe(kind) + ": " + message + " (attempts=" + std::to_string(attempts) +
              (digest.empty() ? "" : ", request=" + digest) + ")"),
        kind_(kind),
        attempts_(attempts),
        message_(std::move(message)),
        digest_(std::move(digest)) {}

  Kind kind() const noexcept { return kind_; }
  int attempts() const noexcept { return attempts_; }
  const std::string& digest() const noexcept { return digest_; }
  const std::string& message() const noexcept { return message_; }

 private:
  static std::string describe(Kind kind);
  Kind kind_;
  int attempts_;
  std::string message_;
  std::string digest_;
};

class GenerationProvider {
 public:
  virtual ~GenerationProvider() = default;
  virtual std::string id() const = 0;
  virtual GenerationResponse generate(const GenerationRequest& request) = 0;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string id() const = 0;
  virtual std::vector<Vector> embed(const EmbeddingRequest& request) = 0;
};

// Validated entry points. embed() rejects an empty batch (InvalidArgument)
// and a response whose size or dimensions disagree (ProviderError kContract).
GenerationResponse generate(GenerationProvider& provider, const GenerationRequest& request);
std::vector<Vector> embed(EmbeddingProvider& provider, const EmbeddingRequest& request);

// ---------------------------------------------------------------------------
// Mocks

// text = request.user
class EchoGenerator final : public GenerationProvider {
 public:
  std::string id() const override { return "mock:echo"; }
  GenerationResponse generate(const GenerationRequest& request) override;
};

// Always answers with the same text.
class FixedGenerator final : public GenerationProvider {
 public:
  explicit FixedGenerator(std::string text) : text_(std::move(text)) {}
  std::string id() const override { return "mock:fixed"; }
  GenerationResponse generate(const GenerationRequest& request) override;

 private:
  std::string text_;
};

// Knows a set of documents as sentence lists. Given a prompt equal to the
// first i sentences of a document joined by single spaces, answers with the
// next `window` sentences. Unknown prompts get an empty stop response.
class ContinuationOracle final : public GenerationProvider {
 public:
  ContinuationOracle(std::vector<std::vector<std::string>> documents, std::size_t window)
      : documents_(std::move(documents)), window_(window) {}
  std::string id() const override { return "mock:oracle"; }
  GenerationResponse generate(const GenerationRequest& request) override;

 private:
  std::vector<std::vector<std::string>> documents_;
  std::size_t window_;
};

// Hashed bag of words over lowercase alphanumeric tokens. The task prefix is
// ignored so that texts with disjoint vocabularies stay orthogonal.
class BagOfWordsEmbedder final : public EmbeddingProvider {
 public:
  explicit BagOfWordsEmbedder(std::size_t dimension = 4096) : dimension_(dimension) {}
  std::string id() const override { return "mock:bow"; }
  std::vector<Vector> embed(const EmbeddingRequest& request) override;

 private:
  std::size_t dimension_;
};

// ---------------------------------------------------------------------------
// HTTP transport

struct HttpOptions {
  std::string endpoint;  // e.g. http://127.0.0.1:8080/v1
  std::string api_key;   // sent as "Authorization: Bearer <key>" when set
  std::string model;
  std::chrono::milliseconds timeout{60000};
  int max_attempts = 3;
  std::chrono::milliseconds backoff{250};  // doubles per retry
  int max_in_flight = 8;

  // LACUNA_<NAME>_ENDPOINT, _API_KEY, _MODEL, _TIMEOUT_MS. Throws
  // InvalidArgument when the endpoint variable is unset.
  static HttpOptions from_environment(std::string_view name);
};

// POSTs JSON bodies to <endpoint><path>, retrying transport failures, 429 and
// 5xx with exponential backoff. 401/403 fail immediately as kAuth.
class HttpTransport {
 public:
  explicit HttpTransport(HttpOptions options);
  ~HttpTransport();
  nlohmann::json post(const std::string& path, const nlohmann::json& body,
                      const std::string& digest);
  const HttpOptions& options() const { return options_; }

 private:
  HttpOptions options_;
  std::string scheme_host_port_;
  std::string base_path_;
  std::counting_semaphore<1024> in_flight_;
};

// POST /generate {model, system, user, max_new_tokens, deterministic}
//   -> {text, model_id, finish_reason}
class HttpGenerationProvider final : public GenerationProvider {
 public:
  explicit HttpGenerationProvider(HttpOptions options) : transport_(std::move(options)) {}
  std::string id() const override { return "http:" + transport_.options().model; }
  GenerationResponse generate(const GenerationRequest& request) override;

 private:
  HttpTransport transport_;
};

// POST /embed {model, texts, task_prefix} -> {vectors: [[...], ...]}
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(HttpOptions options) : transport_(std::move(options)) {}
  std::string id() const override { return "http:" + transport_.options().model; }
  std::vector<Vector> embed(const EmbeddingRequest& request) override;

 private:
  HttpTransport transport_;
};

// POST /ner {model, texts} -> {persons: [[name, ...], ...]}
class HttpNerProvider final : public NerProvider {
 public:
  explicit HttpNerProvider(HttpOptions options) : transport_(std::move(options)) {}
  std::vector<std::vector<std::string>> person_spans(std::span<const std::string> texts) override;

 private:
  HttpTransport transport_;
};

// ---------------------------------------------------------------------------
// Cache

// Content-addressed store: <dir>/<hh>/<sha256>.json, written atomically.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);
  std::optional<nlohmann::json> get(const std::string& key) const;
  void put(const std::string& key, const nlohmann::json& value);
  std::filesystem::path path_for(const std::string& key) const;

 private:
  std::filesystem::path dir_;
  std::mutex write_mutex_;
};

class CachingGenerationProvider final : public GenerationProvider {
 public:
  CachingGenerationProvider(std::unique_ptr<GenerationProvider> inner,
                            std::shared_ptr<ResponseCache> cache)
      : inner_(std::move(inner)), cache_(std::move(cache)) {}
  std::string id() const override { return inner_->id(); }
  GenerationResponse generate(const GenerationRequest& request) override;
  std::size_t hits() const { return hits_.load(); }

 private:
  std::unique_ptr<GenerationProvider> inner_;
  std::shared_ptr<ResponseCache> cache_;
  std::atomic<std::size_t> hits_{0};
};

class CachingEmbeddingProvider final : public EmbeddingProvider {
 public:
  CachingEmbeddingProvider(std::unique_ptr<EmbeddingProvider> inner,
                           std::shared_ptr<ResponseCache> cache)
      : inner_(std::move(inner)), cache_(std::move(cache)) {}
  std::string id() const override { return inner_->id(); }
  std::vector<Vector> embed(const EmbeddingRequest& request) override;

 private:
  std::unique_ptr<EmbeddingProvider> inner_;
  std::shared_ptr<ResponseCache> cache_;
};

// Provider ids:
//   generation: mock:echo | mock:fixed:<text> | http:<NAME>
//   embedding:  mock:bow | http:<NAME>
//   ner:        heuristic | http:<NAME>
// http:<NAME> reads LACUNA_<NAME>_* variables (see HttpOptions). When
// cache_dir is given, http providers are wrapped in the disk cache.
std::unique_ptr<GenerationProvider> make_generation_provider(
    std::string_view id, const std::optional<std::filesystem::path>& cache_dir = std::nullopt);
std::unique_ptr<EmbeddingProvider> make_embedding_provider(
    std::string_view id, const std::optional<std::filesystem::path>& cache_dir = std::nullopt);
std::unique_ptr<NerProvider> make_ner_provider(std::string_view id);

}  // namespace lacuna
