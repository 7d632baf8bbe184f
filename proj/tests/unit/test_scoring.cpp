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

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "lacuna/error.hpp"
#include "lacuna/scoring.hpp"
#include "support.hpp"

using namespace lacuna;

namespace {

// Straight transcription of the vectorizer definition, sharing no code.
double oracle_tfidf(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::map<std::string, std::pair<double, double>> tf;
  for (const auto& t : a) tf[t].first += 1;
  for (const auto& t : b) tf[t].second += 1;
  double dot = 0, na = 0, nb = 0;
  for (const auto& [term, c] : tf) {
    const double df = (c.first > 0) + (c.second > 0);
    const double idf = std::log(3.0 / (1.0 + df)) + 1.0;
    const double x = c.first * idf, y = c.second * idf;
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  return dot / std::sqrt(na * nb);
}

double f1(int tp, int fp, int fn) {
  const int denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * tp / denom;
}

double oracle_macro_f1(const std::vector<double>& s, const std::vector<int>& y, double thr) {
  int tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool pred = s[i] >= thr;
    if (pred && y[i]) ++tp;
    else if (pred) ++fp;
    else if (y[i]) ++fn;
    else ++tn;
  }
  return 0.5 * (f1(tp, fp, fn) + f1(tn, fn, fp));
}

}  // namespace

TEST_CASE("cosine") {
  std::vector<double> a = {1, 0}, b = {0, 1}, c = {2, 0}, z = {0, 0}, d3 = {1, 2, 3};
  CHECK(cosine(a, b) == 0.0);
  CHECK(cosine(a, c) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(cosine(a, z), UndefinedSimilarity);
  CHECK_THROWS_AS(cosine(a, d3), InvalidArgument);
}

TEST_CASE("tf-idf tokens") {
  CHECK(tfidf_tokens("The U.S. army, 1867!") == std::vector<std::string>{"the", "u", "s", "army", "1867"});
  CHECK(tfidf_tokens("caf\xC3\xA9 x") == std::vector<std::string>{"caf\xC3\xA9", "x"});
  CHECK(tfidf_tokens(" .,; ").empty());
}

TEST_CASE("tf-idf hand fixture") {
  const double x = std::log(1.5) + 1.0;
  const double expected = 1.0 / (1.0 + x * x);
  CHECK(std::abs(tfidf_similarity("a b", "a c") - expected) < 1e-9);
  CHECK(std::abs(expected - 0.336097) < 1e-6);
  auto [u, v] = pairwise_tfidf("a b", "a c");
  REQUIRE(u.size() == 3);
  CHECK(std::abs(u[0] - 1.0 / std::sqrt(1 + x * x)) < 1e-12);
  CHECK(u[2] == 0.0);
  CHECK(v[1] == 0.0);
  CHECK(std::abs(tfidf_similarity("The same words here.", "the SAME words, here") - 1.0) < 1e-12);
  CHECK(tfidf_similarity("alpha beta", "gamma delta") == 0.0);
  CHECK_THROWS_AS(tfidf_similarity("...", "a"), UndefinedSimilarity);
}

TEST_CASE("tf-idf agrees with an independent oracle") {
  std::mt19937_64 rng(3);
  const char* vocab[] = {"a", "b", "c", "dd", "eee", "f1", "g"};
  for (int i = 0; i < 500; ++i) {
    std::vector<std::string> ta, tb;
    std::string a, b;
    for (std::size_t k = 0, n = 1 + rng() % 8; k < n; ++k) {
      ta.push_back(vocab[rng() % 7]);
      a += ta.back() + " ";
    }
    for (std::size_t k = 0, n = 1 + rng() % 8; k < n; ++k) {
      tb.push_back(vocab[rng() % 7]);
      b += tb.back() + ", ";
    }
    CHECK(std::abs(tfidf_similarity(a, b) - oracle_tfidf(ta, tb)) < 1e-12);
  }
}

TEST_CASE("similarity decision") {
  CHECK(is_similar(0.7313, 73.13));
  CHECK_FALSE(is_similar(0.7312, 73.13));
  CHECK_FALSE(is_similar(std::nullopt, 0.0));
}

TEST_CASE("threshold sweep") {
  std::vector<double> s = {90, 80, 20, 10};
  std::vector<int> y = {1, 1, 0, 0};
  auto r = tune_threshold(s, y);
  CHECK(r.macro_f1 == 1.0);
  CHECK(r.epsilon_star == 50.0);
  REQUIRE(r.sweep.size() == 5);
  CHECK(r.sweep.front().first == 9.0);
  CHECK(r.sweep.back().first == 91.0);
  CHECK(macro_f1(s, y, 9.0) == doctest::Approx(oracle_macro_f1(s, y, 9.0)));

  std::vector<int> one = {1, 1, 1, 1};
  CHECK_THROWS_AS(tune_threshold(s, one), DegenerateLabels);
  std::vector<int> bad = {1, 2, 0, 0};
  CHECK_THROWS_AS(tune_threshold(s, bad), InvalidArgument);
  std::vector<int> shorter = {1, 0};
  CHECK_THROWS_AS(tune_threshold(s, shorter), InvalidArgument);
}

TEST_CASE("threshold sweep equals the brute-force maximum") {
  std::mt19937_64 rng(99);
  for (int fixture = 0; fixture < 100; ++fixture) {
    const std::size_t n = 2 + rng() % 199;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % 40) + (fixture % 2 ? 0.0 : 0.5 * (rng() % 2));
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 0;
    y[1] = 1;
    std::set<double> uniq(s.begin(), s.end());
    std::vector<double> u(uniq.begin(), uniq.end());
    std::vector<double> candidates = {u.front() - 1};
    for (std::size_t i = 0; i + 1 < u.size(); ++i) candidates.push_back((u[i] + u[i + 1]) / 2);
    candidates.push_back(u.back() + 1);
    double best = -1, best_thr = 0;
    for (double c : candidates) {
      const double m = oracle_macro_f1(s, y, c);
      if (m > best + 1e-12) best = m, best_thr = c;
    }
    auto r = tune_threshold(s, y);
    CHECK(std::abs(r.macro_f1 - best) < 1e-9);
    CHECK(r.epsilon_star == best_thr);
    CHECK(r.sweep.size() == candidates.size());
  }
}

TEST_CASE("scoring predictions with the bag-of-words embedder") {
  BagOfWordsEmbedder bow;
  std::vector<Prediction> preds = {
      {"i1", "She opened a boarding house.", false},
      {"i2", "Completely different words entirely", false},
      {"i3", "", false},
      {"i4", "She opened a boarding house.", true},
  };
  std::vector<std::string> golds = {"she opened a boarding house", "She opened a boarding house.",
                                    "x", "She opened a boarding house."};
  auto scored = score_predictions(preds, golds, bow, 73.13, 2);
  REQUIRE(scored.size() == 4);
  CHECK(*scored[0].similarity == doctest::Approx(1.0));
  CHECK(scored[0].similar);
  CHECK(*scored[1].similarity == 0.0);
  CHECK_FALSE(scored[1].similar);
  CHECK_FALSE(scored[2].similarity);
  CHECK_FALSE(scored[3].similarity);
  CHECK(accuracy(scored) == 0.25);
  apply_threshold(scored, -100.0);
  CHECK(accuracy(scored) == 0.5);
  std::vector<ScoredPrediction> none;
  CHECK_THROWS_AS(accuracy(none), InvalidArgument);
  std::vector<std::string> fewer = {"a"};
  CHECK_THROWS_AS(score_predictions(preds, fewer, bow, 50), InvalidArgument);
}

namespace {

std::vector<ProbeDocument> probe_docs(std::size_t count, std::size_t sentences, std::uint64_t seed) {
  lacuna::testing::Lexicon lex(seed);
  std::vector<ProbeDocument> docs;
  for (std::size_t d = 0; d < count; ++d)
    docs.push_back({"p" + std::to_string(d), d % 2 ? AuditLabel::kSeen : AuditLabel::kUnseen,
                    lex.sentences(sentences)});
  return docs;
}

std::vector<std::vector<std::string>> sentence_lists(const std::vector<ProbeDocument>& docs) {
  std::vector<std::vector<std::string>> out;
  for (const auto& d : docs) out.push_back(d.sentences);
  return out;
}

}  // namespace

TEST_CASE("probe with a memorising oracle scores 1 everywhere") {
  auto docs = probe_docs(6, 45, 5);
  docs.push_back({"short", AuditLabel::kSeen, {"Too short."}});
  ContinuationOracle oracle(sentence_lists(docs), 5);
  auto report = run_probe(docs, oracle);
  REQUIRE(report.results.size() == 6);
  REQUIRE(report.skipped.size() == 1);
  CHECK(report.skipped[0].doc_id == "short");
  for (const auto& r : report.results) {
    REQUIRE(r.position_sims.size() == 5);
    for (double s : r.position_sims) CHECK(std::abs(s - 1.0) < 1e-12);
    CHECK(std::abs(r.mean_sim - 1.0) < 1e-12);
  }
  auto again = run_probe(docs, oracle);
  CHECK(again.results == report.results);
}

TEST_CASE("probe with a disjoint vocabulary scores 0 everywhere") {
  auto docs = probe_docs(4, 50, 6);
  FixedGenerator disjoint("111 222 333.");
  auto report = run_probe(docs, disjoint);
  for (const auto& r : report.results)
    for (double s : r.position_sims) CHECK(s == 0.0);
  FixedGenerator blank("");
  for (const auto& r : run_probe(docs, blank).results) CHECK(r.mean_sim == 0.0);
  ProbeOptions bad;
  bad.window = 0;
  CHECK_THROWS_AS(run_probe(docs, disjoint, bad), InvalidArgument);
}

TEST_CASE("probe sampling is seeded and class-balanced") {
  auto docs = probe_docs(30, 3, 1);
  auto a = sample_probe_set(docs, 4, 42);
  auto b = sample_probe_set(docs, 4, 42);
  auto c = sample_probe_set(docs, 4, 43);
  REQUIRE(a.size() == 8);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].doc_id == b[i].doc_id);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= a[i].doc_id != c[i].doc_id;
  CHECK(differs);
  for (std::size_t i = 0; i < 4; ++i) CHECK(a[i].label == AuditLabel::kSeen);
  for (std::size_t i = 4; i < 8; ++i) CHECK(a[i].label == AuditLabel::kUnseen);
  CHECK(sample_probe_set(docs, 100, 1).size() == 30);
}

TEST_CASE("probe result JSON") {
  ProbeResult r{"d", AuditLabel::kSeen, {0.5, 0.25}, 0.375};
  CHECK(probe_result_from_json(nlohmann::json::parse(to_json(r).dump())) == r);
}

TEST_CASE("position buckets and quartiles") {
  CHECK(position_bucket(1, 5) == PositionBucket::kBegin);
  CHECK(position_bucket(3, 5) == PositionBucket::kMiddle);
  CHECK(position_bucket(5, 5) == PositionBucket::kEnd);
  CHECK(position_bucket(1, 1) == PositionBucket::kBegin);
  CHECK_THROWS_AS(position_bucket(0, 5), InvalidArgument);
  std::vector<double> edges = {10, 20, 30};
  CHECK(quartile_of(10, edges) == 0);
  CHECK(quartile_of(10.5, edges) == 1);
  CHECK(quartile_of(30, edges) == 2);
  CHECK(quartile_of(31, edges) == 3);
  CHECK(position_bucket_from_string("end") == PositionBucket::kEnd);
}

TEST_CASE("breakdown on a monotone fixture") {
  // Short events are recovered, long ones are not.
  std::vector<ScoredPrediction> scored;
  std::vector<InstanceMetadata> meta;
  for (std::size_t i = 0; i < 40; ++i) {
    ScoredPrediction s;
    s.instance_id = std::to_string(i);
    s.similar = i < 20;
    s.similarity = s.similar ? 0.9 : 0.1;
    scored.push_back(s);
    InstanceMetadata m;
    m.event_type = i % 2 ? EventType::kRole : EventType::kAgentive;
    m.event_word_count = 5 + i;
    m.timeline_length = 10;
    m.position = i % 3 == 0 ? PositionBucket::kBegin : PositionBucket::kMiddle;
    meta.push_back(m);
  }
  auto r = breakdown_report(scored, meta);
  CHECK(r.n == 40);
  CHECK(r.overall_accuracy == 0.5);
  REQUIRE(r.by_event_length.size() == 4);
  CHECK(r.by_event_length[0].accuracy == 1.0);
  CHECK(r.by_event_length[3].accuracy == 0.0);
  for (std::size_t q = 1; q < 4; ++q) CHECK(r.by_event_length[q].accuracy <= r.by_event_length[q - 1].accuracy);
  CHECK(r.by_event_type.size() == 2);
  CHECK(r.by_position.size() == 2);
  REQUIRE(r.correlations.count("event_word_count"));
  CHECK(r.correlations.at("event_word_count").rho < -0.8);
  CHECK_FALSE(r.correlations.count("timeline_length"));
  CHECK(r.by_timeline_length.size() == 1);
  CHECK(render_breakdown_text(r).find("agentive") != std::string::npos);
}

TEST_CASE("accuracy grid rendering") {
  std::vector<GridCell> cells = {{"m1", TemplateId::kBase, false, 10, 0.5},
                                 {"m1", TemplateId::kBase, true, 10, 0.625},
                                 {"m2", TemplateId::kHaluEval, true, 4, 0.25}};
  const auto grid = render_accuracy_grid(cells);
  CHECK(grid.find("50.0") != std::string::npos);
  CHECK(grid.find("62.5") != std::string::npos);
  CHECK(grid.find("25.0") != std::string::npos);
  CHECK(grid.find("n/a") != std::string::npos);
  CHECK(grid.find("m2") > grid.find("m1"));
}
