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

// Similarity of predictions to gold events, threshold tuning, accuracy
// aggregation, and the next-sentence continuation probe.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lacuna/cloze.hpp"
#include "lacuna/providers.hpp"
#include "lacuna/stats.hpp"
#include "lacuna/strsearch.hpp"
#include "lacuna/timeline.hpp"

namespace lacuna {

// Similarities are kept in [-1, 1] internally and reported as 100x.
inline constexpr double kReportScale = 100.0;

// Throws InvalidArgument on a dimension mismatch and UndefinedSimilarity
// when either vector is zero.
double cosine(std::span<const double> u, std::span<const double> v);

// Lowercased runs of ASCII alphanumerics (bytes >= 0x80 count as word bytes).
std::vector<std::string> tfidf_tokens(std::string_view text);

// Vectorizer fitted on the pair only: tf = raw counts,
// idf = ln((1 + 2) / (1 + df)) + 1, rows L2-normalised. Vocabulary order is
// lexicographic. Throws UndefinedSimilarity if either text has no tokens.
std::pair<Vector, Vector> pairwise_tfidf(std::string_view a, std::string_view b);
double tfidf_similarity(std::string_view a, std::string_view b);

struct Prediction {
  std::string instance_id;
  std::string text;
  bool unparseable = false;
};

struct ScoredPrediction {
  std::string instance_id;
  std::string prediction;
  std::string gold;
  std::optional<double> similarity;  // internal scale; absent if undefined
  bool similar = false;
};

// similarity (internal) against epsilon (report scale), inclusive.
bool is_similar(std::optional<double> similarity, double epsilon);

// Embeds predictions and golds with the narrative task prefix and marks
// sim * 100 >= epsilon as similar. Unparseable or empty predictions and zero
// embeddings get no similarity and are not similar.
std::vector<ScoredPrediction> score_predictions(std::span<const Prediction> predictions,
                                                std::span<const std::string> golds,
                                                EmbeddingProvider& embedder, double epsilon,
                                                std::size_t batch_size = 64);

// Relabel existing scores under a different epsilon.
void apply_threshold(std::vector<ScoredPrediction>& scored, double epsilon);

struct ThresholdResult {
  double epsilon_star = 0;
  double macro_f1 = 0;
  std::vector<std::pair<double, double>> sweep;  // (candidate, macro-F1), ascending
};

// Mean of F1("similar") and F1("different"); 0 when a class F1 is 0/0.
double macro_f1(std::span<const double> scores, std::span<const int> labels, double threshold);

// Candidates are min - 1, the midpoints of consecutive distinct scores, and
// max + 1; a score >= candidate is predicted similar. Returns the smallest
// candidate with the maximum macro-F1. Throws DegenerateLabels unless both
// labels occur.
ThresholdResult tune_threshold(std::span<const double> scores, std::span<const int> labels);

// Fraction similar; throws InvalidArgument on an empty input.
double accuracy(std::span<const ScoredPrediction> scored);

// ---------------------------------------------------------------------------
// Continuation probe

struct ProbeDocument {
  std::string doc_id;
  AuditLabel label = AuditLabel::kUnseen;
  std::vector<std::string> sentences;
};

struct ProbeOptions {
  std::size_t context = 20;
  std::size_t window = 5;
  std::size_t window_count = 5;
  int max_new_tokens = 256;
};

struct ProbeResult {
  std::string doc_id;
  AuditLabel label = AuditLabel::kUnseen;
  std::vector<double> position_sims;
  double mean_sim = 0;

  friend bool operator==(const ProbeResult&, const ProbeResult&) = default;
};

struct ProbeSkip {
  std::string doc_id;
  std::string reason;
};

struct ProbeReport {
  std::vector<ProbeResult> results;
  std::vector<ProbeSkip> skipped;
};

// Window i is generated from the context sentences followed by the model's
// own earlier continuations, all joined by single spaces, and compared with
// gold window i by pairwise TF-IDF cosine (0 for an empty continuation).
ProbeReport run_probe(std::span<const ProbeDocument> docs, GenerationProvider& generator,
                      const ProbeOptions& options = {});

// Seeded draw of up to `per_class` SEEN and `per_class` UNSEEN documents,
// SEEN first, each group in draw order.
std::vector<ProbeDocument> sample_probe_set(std::span<const ProbeDocument> docs,
                                            std::size_t per_class, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Breakdowns

enum class PositionBucket { kBegin, kMiddle, kEnd };
std::string_view to_string(PositionBucket b);
PositionBucket position_bucket_from_string(std::string_view s);
// 1-based position; the first event is begin, the last is end.
PositionBucket position_bucket(std::size_t position, std::size_t timeline_length);

struct InstanceMetadata {
  EventType event_type = EventType::kAgentive;
  std::size_t event_word_count = 0;
  std::size_t timeline_length = 0;
  PositionBucket position = PositionBucket::kMiddle;
};

struct GroupAccuracy {
  std::string group;
  std::size_t n = 0;
  std::size_t correct = 0;
  double accuracy = 0;
};

struct BreakdownReport {
  std::size_t n = 0;
  double overall_accuracy = 0;
  std::vector<GroupAccuracy> by_event_type;
  std::vector<GroupAccuracy> by_event_length;     // Q1..Q4
  std::vector<GroupAccuracy> by_timeline_length;  // Q1..Q4
  std::vector<GroupAccuracy> by_position;         // begin, middle, end
  std::vector<double> event_length_edges;         // Q1, Q2, Q3 cut points
  std::vector<double> timeline_length_edges;
  // Spearman rho of each covariate against the 0/1 outcome; absent when
  // undefined (constant covariate or outcome).
  std::map<std::string, Correlation> correlations;
};

BreakdownReport breakdown_report(std::span<const ScoredPrediction> scored,
                                 std::span<const InstanceMetadata> metadata);

// Quartile index 0..3 for value given the three cut points (<= edge goes low).
std::size_t quartile_of(double value, std::span<const double> edges);

// One cell of the models x templates x hint grid.
struct GridCell {
  std::string model;
  TemplateId prompt = TemplateId::kBase;
  bool hint = false;
  std::size_t n = 0;
  double accuracy = 0;
};

// Rows are models, columns prompt templates, each split into
// "-" (no hint) and "+" (event-type hint) accuracy in percent.
std::string render_accuracy_grid(std::span<const GridCell> cells);
std::string render_breakdown_text(const BreakdownReport& report);

nlohmann::ordered_json to_json(const ScoredPrediction& s);
nlohmann::ordered_json to_json(const ThresholdResult& t);
nlohmann::ordered_json to_json(const ProbeResult& r);
ProbeResult probe_result_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const BreakdownReport& r);
nlohmann::ordered_json to_json(const GridCell& c);

}  // namespace lacuna
