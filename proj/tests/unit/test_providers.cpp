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
#include "httplib.h"

#include <cstdlib>
#include <thread>

#include "doctest.h"
#include "lacuna/providers.hpp"
#include "support.hpp"

using namespace lacuna;
using nlohmann::json;

namespace {

double dot(const Vector& a, const Vector& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Local stand-in for a model server.
class FakeServer {
 public:
  FakeServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  HttpOptions options(const std::string& model = "m1") const {
    HttpOptions o;
    o.endpoint = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    o.model = model;
    o.backoff = std::chrono::milliseconds(1);
    o.timeout = std::chrono::milliseconds(2000);
    return o;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("request and response JSON round-trip") {
  GenerationRequest r{"sys", "user text", 64, true};
  CHECK(generation_request_from_json(json::parse(to_json(r).dump())) == r);
  GenerationRequest nosys{std::nullopt, "u", 10, false};
  CHECK(generation_request_from_json(json::parse(to_json(nosys).dump())) == nosys);
  GenerationResponse g{"t", "m", FinishReason::kLength};
  CHECK(generation_response_from_json(json::parse(to_json(g).dump())) == g);
  EmbeddingRequest e{{"a", "b"}, std::string(kNarrativeEmbeddingPrefix)};
  CHECK(embedding_request_from_json(json::parse(to_json(e).dump())) == e);
  CHECK_THROWS_AS(generation_request_from_json(json{{"system", 1}}), SchemaError);
  CHECK_THROWS_AS(finish_reason_from_string("eos"), InvalidArgument);
  CHECK(request_digest(r).size() == 16);
  CHECK(request_digest(r) == request_digest(r));
  CHECK(request_digest(r) != request_digest(nosys));
}

TEST_CASE("mock generators") {
  EchoGenerator echo;
  CHECK(generate(echo, {std::nullopt, "hi", 5, true}).text == "hi");
  CHECK_THROWS_AS(generate(echo, {std::nullopt, "hi", 0, true}), InvalidArgument);
  FixedGenerator fixed("same");
  CHECK(fixed.generate({std::nullopt, "anything", 5, true}).text == "same");

  ContinuationOracle oracle({{"A b.", "C d.", "E f.", "G h."}, {"X y."}}, 2);
  CHECK(oracle.generate({std::nullopt, "A b.", 5, true}).text == "C d. E f.");
  CHECK(oracle.generate({std::nullopt, "A b. C d. E f.", 5, true}).text == "G h.");
  CHECK(oracle.generate({std::nullopt, "A b. C d. E f. G h.", 5, true}).text.empty());
  CHECK(oracle.generate({std::nullopt, "A b.C d.", 5, true}).text.empty());
  CHECK(oracle.generate({std::nullopt, "X y", 5, true}).text.empty());
}

TEST_CASE("bag-of-words embedder") {
  BagOfWordsEmbedder bow(1024);
  auto v = embed(bow, {{"The cat sat.", "the CAT sat", "dog ran far"}, std::string(kNarrativeEmbeddingPrefix)});
  REQUIRE(v.size() == 3);
  CHECK(v[0].size() == 1024);
  CHECK(v[0] == v[1]);
  CHECK(dot(v[0], v[2]) == 0.0);
  CHECK_THROWS_AS(embed(bow, {{}, std::nullopt}), InvalidArgument);
}

namespace {

class BrokenEmbedder final : public EmbeddingProvider {
 public:
  explicit BrokenEmbedder(int mode) : mode_(mode) {}
  std::string id() const override { return "broken"; }
  std::vector<Vector> embed(const EmbeddingRequest& r) override {
    if (mode_ == 0) return std::vector<Vector>(r.texts.size() + 1, Vector{1.0});
    std::vector<Vector> out(r.texts.size(), Vector{1.0, 2.0});
    out.back() = Vector{1.0};
    return out;
  }

 private:
  int mode_;
};

class CountingGenerator final : public GenerationProvider {
 public:
  std::string id() const override { return "counting"; }
  GenerationResponse generate(const GenerationRequest& r) override {
    ++calls;
    return {r.user + "!", id(), FinishReason::kStop};
  }
  int calls = 0;
};

class CountingEmbedder final : public EmbeddingProvider {
 public:
  std::string id() const override { return "counting"; }
  std::vector<Vector> embed(const EmbeddingRequest& r) override {
    ++calls;
    return std::vector<Vector>(r.texts.size(), Vector{0.5, 0.25});
  }
  int calls = 0;
};

}  // namespace

TEST_CASE("embedding contract violations") {
  BrokenEmbedder count(0), dims(1);
  try {
    embed(count, {{"a"}, std::nullopt});
    FAIL("expected ProviderError");
  } catch (const ProviderError& e) {
    CHECK(e.kind() == ProviderError::Kind::kContract);
  }
  CHECK_THROWS_AS(embed(dims, {{"a", "b"}, std::nullopt}), ProviderError);
}

TEST_CASE("response cache") {
  lacuna::testing::TempDir tmp;
  auto cache = std::make_shared<ResponseCache>(tmp / "cache");
  CHECK_FALSE(cache->get("abcdef"));
  cache->put("abcdef", json{{"x", 1}});
  CHECK(cache->get("abcdef")->at("x") == 1);
  CHECK(cache->path_for("abcdef") == tmp / "cache" / "ab" / "abcdef.json");

  auto inner = std::make_unique<CountingGenerator>();
  auto* raw = inner.get();
  CachingGenerationProvider gen(std::move(inner), cache);
  GenerationRequest r{std::nullopt, "q", 8, true};
  CHECK(gen.generate(r).text == "q!");
  CHECK(gen.generate(r).text == "q!");
  CHECK(raw->calls == 1);
  CHECK(gen.hits() == 1);
  r.max_new_tokens = 9;
  gen.generate(r);
  CHECK(raw->calls == 2);

  auto einner = std::make_unique<CountingEmbedder>();
  auto* eraw = einner.get();
  CachingEmbeddingProvider emb(std::move(einner), cache);
  EmbeddingRequest er{{"a", "b"}, std::nullopt};
  auto v1 = emb.embed(er);
  auto v2 = emb.embed(er);
  CHECK(v1 == v2);
  CHECK(eraw->calls == 1);
}

TEST_CASE("provider factories") {
  CHECK(make_generation_provider("mock:echo")->id() == "mock:echo");
  CHECK(make_generation_provider("mock:fixed:hello")->generate({std::nullopt, "x", 1, true}).text == "hello");
  CHECK(make_embedding_provider("mock:bow")->id() == "mock:bow");
  CHECK(make_ner_provider("heuristic") != nullptr);
  CHECK_THROWS_AS(make_generation_provider("gpt"), InvalidArgument);
  CHECK_THROWS_AS(make_embedding_provider("nope"), InvalidArgument);
  CHECK_THROWS_AS(make_generation_provider("http:LACUNA_TEST_UNSET_NAME"), InvalidArgument);
}

TEST_CASE("options from the environment") {
  setenv("LACUNA_ENVTEST_ENDPOINT", "http://127.0.0.1:9/v1", 1);
  setenv("LACUNA_ENVTEST_API_KEY", "k", 1);
  setenv("LACUNA_ENVTEST_TIMEOUT_MS", "1500", 1);
  auto o = HttpOptions::from_environment("envtest");
  CHECK(o.endpoint == "http://127.0.0.1:9/v1");
  CHECK(o.api_key == "k");
  CHECK(o.model == "envtest");
  CHECK(o.timeout == std::chrono::milliseconds(1500));
  setenv("LACUNA_ENVTEST_TIMEOUT_MS", "soon", 1);
  CHECK_THROWS_AS(HttpOptions::from_environment("envtest"), InvalidArgument);
}

TEST_CASE("HTTP generation, embedding and NER against a local server") {
  FakeServer fake;
  std::atomic<int> flaky{0};
  fake.server().Post("/v1/generate", [](const httplib::Request& req, httplib::Response& res) {
    auto body = json::parse(req.body);
    if (req.get_header_value("Authorization") != "Bearer secret") {
      res.status = 401;
      return;
    }
    json out{{"text", "re: " + body["user"].get<std::string>()},
             {"model_id", body["model"]},
             {"finish_reason", "length"}};
    res.set_content(out.dump(), "application/json");
  });
  fake.server().Post("/v1/embed", [&](const httplib::Request& req, httplib::Response& res) {
    if (flaky++ < 2) {
      res.status = 503;
      return;
    }
    auto body = json::parse(req.body);
    json vectors = json::array();
    for (std::size_t i = 0; i < body["texts"].size(); ++i) vectors.push_back({1.0, double(i)});
    res.set_content(json{{"vectors", vectors}}.dump(), "application/json");
  });
  fake.server().Post("/v1/ner", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"persons":[["Ann Lee"],[]]})", "application/json");
  });

  SUBCASE("auth") {
    auto o = fake.options();
    o.api_key = "secret";
    HttpGenerationProvider ok(o);
    auto r = generate(ok, {std::nullopt, "hello", 4, true});
    CHECK(r.text == "re: hello");
    CHECK(r.model_id == "m1");
    CHECK(r.finish_reason == FinishReason::kLength);
    CHECK(ok.id() == "http:m1");

    o.api_key = "wrong";
    HttpGenerationProvider bad(o);
    try {
      bad.generate({std::nullopt, "hello", 4, true});
      FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
      CHECK(e.kind() == ProviderError::Kind::kAuth);
      CHECK(e.attempts() == 1);
      CHECK(e.digest().size() == 16);
    }
  }
  SUBCASE("retry on 5xx then succeed") {
    HttpEmbeddingProvider emb(fake.options());
    auto v = embed(emb, {{"a", "b", "c"}, std::nullopt});
    CHECK(v.size() == 3);
    CHECK(v[2][1] == 2.0);
    CHECK(flaky.load() == 3);
  }
  SUBCASE("retries exhausted") {
    auto o = fake.options();
    o.max_attempts = 2;
    HttpEmbeddingProvider emb(o);
    try {
      emb.embed({{"a"}, std::nullopt});
      FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
      CHECK(e.kind() == ProviderError::Kind::kTransport);
      CHECK(e.attempts() == 2);
    }
  }
  SUBCASE("ner") {
    HttpNerProvider ner(fake.options());
    std::vector<std::string> texts = {"Ann Lee spoke.", "nothing"};
    auto spans = ner.person_spans(texts);
    REQUIRE(spans.size() == 2);
    CHECK(spans[0] == std::vector<std::string>{"Ann Lee"});
  }
}

TEST_CASE("HTTP failure modes") {
  FakeServer fake;
  fake.server().Post("/v1/generate", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("not json", "text/plain");
  });
  fake.server().Post("/v1/embed", [](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    res.set_content(R"({"vectors":[[1]]})", "application/json");
  });
  fake.server().Post("/v1/ner", [](const httplib::Request&, httplib::Response& res) {
    res.status = 404;
  });

  HttpGenerationProvider gen(fake.options());
  try {
    gen.generate({std::nullopt, "x", 4, true});
    FAIL("expected ProviderError");
  } catch (const ProviderError& e) {
    CHECK(e.kind() == ProviderError::Kind::kMalformedResponse);
  }

  auto o = fake.options();
  o.timeout = std::chrono::milliseconds(150);
  o.max_attempts = 2;
  HttpEmbeddingProvider slow(o);
  try {
    slow.embed({{"a"}, std::nullopt});
    FAIL("expected ProviderError");
  } catch (const ProviderError& e) {
    CHECK(e.kind() == ProviderError::Kind::kTimeout);
    CHECK(e.attempts() == 2);
  }

  HttpNerProvider ner(fake.options());
  std::vector<std::string> texts = {"x"};
  CHECK_THROWS_AS(ner.person_spans(texts), ProviderError);

  auto dead = fake.options();
  dead.endpoint = "http://127.0.0.1:1/v1";
  dead.max_attempts = 1;
  HttpGenerationProvider nowhere(dead);
  try {
    nowhere.generate({std::nullopt, "x", 4, true});
    FAIL("expected ProviderError");
  } catch (const ProviderError& e) {
    CHECK(e.kind() == ProviderError::Kind::kTransport);
  }
}
