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

#include "lacuna/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "rng.hpp"

namespace lacuna {

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw InvalidArgument("cosine: dimension mismatch");
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0 || nv == 0) throw UndefinedSimilarity("cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

std::vector<std::string> tfidf_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      cur += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::pair<Vector, Vector> pairwise_tfidf(std::string_view a, std::string_view b) {
  const auto ta = tfidf_tokens(a), tb = tfidf_tokens(b);
  if (ta.empty() || tb.empty()) throw UndefinedSimilarity("tf-idf: text has no terms");
  std::map<std::string, std::pair<double, double>> counts;
  for (const auto& t : ta) counts[t].first += 1;
  for (const auto& t : tb) counts[t].second += 1;
  Vector va, vb;
  va.reserve(counts.size());
  vb.reserve(counts.size());
  for (const auto& [term, c] : counts) {
    const double df = (c.first > 0 ? 1.0 : 0.0) + (c.second > 0 ? 1.0 : 0.0);
    const double idf = std::log((1.0 + 2.0) / (1.0 + df)) + 1.0;
    va.push_back(c.first * idf);
    vb.push_back(c.second * idf);
  }
  auto normalise = [](Vector& v) {
    double n = 0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    for (double& x : v) x /= n;
  };
  normalise(va);
  normalise(vb);
  return {std::move(va), std::move(vb)};
}

double tfidf_similarity(std::string_view a, std::string_view b) {
  const auto [va, vb] = pairwise_tfidf(a, b);
  return cosine(va, vb);
}

bool is_similar(std::optional<double> similarity, double epsilon) {
  return similarity && *similarity * kReportScale >= epsilon - 1e-9;
}

namespace {

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

std::vector<ScoredPrediction> score_predictions(std::span<const Prediction> predictions,
                                                std::span<const std::string> golds,
                                                EmbeddingProvider& embedder, double epsilon,
                                                std::size_t batch_size) {
  if (predictions.size() != golds.size())
    throw InvalidArgument("score_predictions: predictions and golds differ in length");
  if (batch_size == 0) throw InvalidArgument("score_predictions: batch_size must be positive");
  std::vector<ScoredPrediction> out(predictions.size());
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    out[i].instance_id = predictions[i].instance_id;
    out[i].prediction = predictions[i].text;
    out[i].gold = golds[i];
    if (!predictions[i].unparseable && !blank(predictions[i].text) && !blank(golds[i]))
      todo.push_back(i);
  }
  for (std::size_t start = 0; start < todo.size(); start += batch_size) {
    const std::size_t end = std::min(todo.size(), start + batch_size);
    EmbeddingRequest req;
    req.task_prefix = std::string(kNarrativeEmbeddingPrefix);
    for (std::size_t k = start; k < end; ++k) req.texts.push_back(predictions[todo[k]].text);
    for (std::size_t k = start; k < end; ++k) req.texts.push_back(golds[todo[k]]);
    std::vector<Vector> vectors;
    try {
      vectors = embed(embedder, req);
    } catch (const ProviderError& e) {
      std::string ids;
      for (std::size_t k = start; k < end && k < start + 5; ++k) {
        if (!ids.empty()) ids += ",";
        ids += predictions[todo[k]].instance_id;
      }
      if (end - start > 5) ids += ",...";
      throw ProviderError(e.kind(), e.message() + " while scoring " + ids, e.attempts(),
                          e.digest());
    }
    const std::size_t m = end - start;
    for (std::size_t k = 0; k < m; ++k) {
      auto& s = out[todo[start + k]];
      try {
        s.similarity = cosine(vectors[k], vectors[m + k]);
      } catch (const UndefinedSimilarity&) {
        s.similarity.reset();
      }
    }
  }
  apply_threshold(out, epsilon);
  return out;
}

void apply_threshold(std::vector<ScoredPrediction>& scored, double epsilon) {
  for (auto& s : scored) s.similar = is_similar(s.similarity, epsilon);
}

namespace {

double f1(double tp, double fp, double fn) {
  const double denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2 * tp / denom;
}

double macro_from_counts(double tp, double fp, double fn, double tn) {
  return (f1(tp, fp, fn) + f1(tn, fn, fp)) / 2.0;
}

void check_labels(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("scores and labels differ in length");
  bool pos = false, neg = false;
  for (int l : labels) {
    if (l != 0 && l != 1) throw InvalidArgument("labels must be 0 or 1");
    (l ? pos : neg) = true;
  }
  for (double s : scores)
    if (!std::isfinite(s)) throw InvalidArgument("scores must be finite");
  if (!pos || !neg) throw DegenerateLabels("threshold tuning needs both labels");
}

}  // namespace

double macro_f1(std::span<const double> scores, std::span<const int> labels, double threshold) {
  if (scores.size() != labels.size()) throw InvalidArgument("scores and labels differ in length");
  double tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (pred && labels[i]) ++tp;
    else if (pred) ++fp;
    else if (labels[i]) ++fn;
    else ++tn;
  }
  return macro_from_counts(tp, fp, fn, tn);
}

ThresholdResult tune_threshold(std::span<const double> scores, std::span<const int> labels) {
  check_labels(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return scores[i] < scores[j]; });
  std::vector<double> sorted(n);
  std::vector<double> ones_prefix(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    sorted[k] = scores[order[k]];
    ones_prefix[k + 1] = ones_prefix[k] + labels[order[k]];
  }
  const double total_pos = ones_prefix[n], total_neg = static_cast<double>(n) - total_pos;

  std::vector<double> unique = sorted;
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  std::vector<double> candidates;
  candidates.push_back(unique.front() - 1.0);
  for (std::size_t k = 1; k < unique.size(); ++k)
    candidates.push_back(unique[k - 1] + (unique[k] - unique[k - 1]) / 2.0);
  candidates.push_back(unique.back() + 1.0);

  ThresholdResult r;
  r.macro_f1 = -1;
  for (double c : candidates) {
    const auto idx = static_cast<std::size_t>(
        std::lower_bound(sorted.begin(), sorted.end(), c) - sorted.begin());
    const double tp = total_pos - ones_prefix[idx];
    const double fp = static_cast<double>(n - idx) - tp;
    const double fn = total_pos - tp;
    const double tn = total_neg - fp;
    const double m = macro_from_counts(tp, fp, fn, tn);
    r.sweep.emplace_back(c, m);
    if (m > r.macro_f1) {
      r.macro_f1 = m;
      r.epsilon_star = c;
    }
  }
  return r;
}

double accuracy(std::span<const ScoredPrediction> scored) {
  if (scored.empty()) throw InvalidArgument("accuracy of an empty set");
  const auto hits = std::count_if(scored.begin(), scored.end(),
                                  [](const ScoredPrediction& s) { return s.similar; });
  return static_cast<double>(hits) / static_cast<double>(scored.size());
}

// ---------------------------------------------------------------------------

namespace {

std::string join_range(const std::vector<std::string>& s, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t i = from; i < to; ++i) {
    if (i > from) out += ' ';
    out += s[i];
  }
  return out;
}

}  // namespace

ProbeReport run_probe(std::span<const ProbeDocument> docs, GenerationProvider& generator,
                      const ProbeOptions& options) {
  if (options.window == 0 || options.window_count == 0)
    throw InvalidArgument("probe window and window_count must be positive");
  const std::size_t needed = options.context + options.window * options.window_count;
  ProbeReport report;
  for (const auto& doc : docs) {
    if (doc.sentences.size() < needed) {
      report.skipped.push_back({doc.doc_id, "needs " + std::to_string(needed) +
                                                " sentences, has " +
                                                std::to_string(doc.sentences.size())});
      continue;
    }
    ProbeResult result{doc.doc_id, doc.label, {}, 0.0};
    std::string prompt = join_range(doc.sentences, 0, options.context);
    for (std::size_t i = 0; i < options.window_count; ++i) {
      const std::size_t from = options.context + i * options.window;
      const std::string gold = join_range(doc.sentences, from, from + options.window);
      GenerationRequest req;
      req.user = prompt;
      req.max_new_tokens = options.max_new_tokens;
      req.deterministic = true;
      const auto res = generate(generator, req);
      double sim = 0.0;
      try {
        sim = tfidf_similarity(gold, res.text);
      } catch (const UndefinedSimilarity&) {
      }
      result.position_sims.push_back(sim);
      if (!blank(res.text)) {
        if (!prompt.empty()) prompt += ' ';
        prompt += res.text;
      }
    }
    result.mean_sim = mean(result.position_sims);
    report.results.push_back(std::move(result));
  }
  return report;
}

std::vector<ProbeDocument> sample_probe_set(std::span<const ProbeDocument> docs,
                                            std::size_t per_class, std::uint64_t seed) {
  std::vector<std::size_t> seen, unseen;
  for (std::size_t i = 0; i < docs.size(); ++i)
    (docs[i].label == AuditLabel::kSeen ? seen : unseen).push_back(i);
  std::mt19937_64 rng(seed);
  detail::shuffle(seen.begin(), seen.end(), rng);
  detail::shuffle(unseen.begin(), unseen.end(), rng);
  std::vector<ProbeDocument> out;
  for (std::size_t k = 0; k < std::min(per_class, seen.size()); ++k) out.push_back(docs[seen[k]]);
  for (std::size_t k = 0; k < std::min(per_class, unseen.size()); ++k)
    out.push_back(docs[unseen[k]]);
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(PositionBucket b) {
  switch (b) {
    case PositionBucket::kBegin: return "begin";
    case PositionBucket::kMiddle: return "middle";
    case PositionBucket::kEnd: return "end";
  }
  return "middle";
}

PositionBucket position_bucket_from_string(std::string_view s) {
  if (s == "begin") return PositionBucket::kBegin;
  if (s == "middle") return PositionBucket::kMiddle;
  if (s == "end") return PositionBucket::kEnd;
  throw InvalidArgument("unknown position bucket: " + std::string(s));
}

PositionBucket position_bucket(std::size_t position, std::size_t timeline_length) {
  if (position < 1 || position > timeline_length)
    throw InvalidArgument("position outside the timeline");
  if (position == 1) return PositionBucket::kBegin;
  if (position == timeline_length) return PositionBucket::kEnd;
  return PositionBucket::kMiddle;
}

std::size_t quartile_of(double value, std::span<const double> edges) {
  std::size_t q = 0;
  while (q < edges.size() && value > edges[q]) ++q;
  return q;
}

namespace {

std::vector<double> quartile_edges(const std::vector<double>& v) {
  return {quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75)};
}

GroupAccuracy make_group(std::string name, std::size_t n, std::size_t correct) {
  return {std::move(name), n, correct, static_cast<double>(correct) / static_cast<double>(n)};
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

BreakdownReport breakdown_report(std::span<const ScoredPrediction> scored,
                                 std::span<const InstanceMetadata> metadata) {
  if (scored.size() != metadata.size())
    throw InvalidArgument("breakdown_report: scores and metadata differ in length");
  BreakdownReport r;
  r.n = scored.size();
  if (scored.empty()) return r;
  r.overall_accuracy = accuracy(scored);

  std::vector<double> outcome, ev_len, tl_len, pos;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    outcome.push_back(scored[i].similar ? 1.0 : 0.0);
    ev_len.push_back(static_cast<double>(metadata[i].event_word_count));
    tl_len.push_back(static_cast<double>(metadata[i].timeline_length));
    pos.push_back(static_cast<double>(static_cast<int>(metadata[i].position)));
  }
  r.event_length_edges = quartile_edges(ev_len);
  r.timeline_length_edges = quartile_edges(tl_len);

  auto tally = [&](auto key_of, std::size_t groups, auto name_of) {
    std::vector<std::size_t> n(groups, 0), c(groups, 0);
    for (std::size_t i = 0; i < scored.size(); ++i) {
      const std::size_t g = key_of(i);
      ++n[g];
      if (scored[i].similar) ++c[g];
    }
    std::vector<GroupAccuracy> out;
    for (std::size_t g = 0; g < groups; ++g)
      if (n[g] > 0) out.push_back(make_group(name_of(g), n[g], c[g]));
    return out;
  };
  r.by_event_type = tally([&](std::size_t i) { return static_cast<std::size_t>(metadata[i].event_type); },
                          5, [](std::size_t g) { return std::string(to_string(static_cast<EventType>(g))); });
  auto qname = [](std::size_t g) { return "Q" + std::to_string(g + 1); };
  r.by_event_length = tally([&](std::size_t i) { return quartile_of(ev_len[i], r.event_length_edges); }, 4, qname);
  r.by_timeline_length =
      tally([&](std::size_t i) { return quartile_of(tl_len[i], r.timeline_length_edges); }, 4, qname);
  r.by_position = tally([&](std::size_t i) { return static_cast<std::size_t>(metadata[i].position); },
                        3, [](std::size_t g) { return std::string(to_string(static_cast<PositionBucket>(g))); });

  auto correlate = [&](const char* name, const std::vector<double>& x) {
    try {
      r.correlations[name] = spearman_rho(x, outcome);
    } catch (const Error&) {
    }
  };
  correlate("event_word_count", ev_len);
  correlate("timeline_length", tl_len);
  correlate("position", pos);
  return r;
}

std::string render_accuracy_grid(std::span<const GridCell> cells) {
  std::vector<std::string> models;
  std::set<TemplateId> present;
  std::map<std::tuple<std::string, TemplateId, bool>, const GridCell*> index;
  for (const auto& c : cells) {
    if (std::find(models.begin(), models.end(), c.model) == models.end()) models.push_back(c.model);
    present.insert(c.prompt);
    index[{c.model, c.prompt, c.hint}] = &c;
  }
  std::vector<TemplateId> prompts;
  for (auto t : kAllTemplates)
    if (present.count(t)) prompts.push_back(t);

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"model"};
  for (auto t : prompts) {
    header.push_back(std::string(to_string(t)) + " -");
    header.push_back(std::string(to_string(t)) + " +");
  }
  rows.push_back(header);
  for (const auto& m : models) {
    std::vector<std::string> row{m};
    for (auto t : prompts) {
      for (bool hint : {false, true}) {
        auto it = index.find({m, t, hint});
        row.push_back(it == index.end() ? "n/a" : fmt("%.1f", it->second->accuracy * 100.0));
      }
    }
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows)
    for (std::size_t k = 0; k < row.size(); ++k) width[k] = std::max(width[k], row[k].size());
  std::ostringstream out;
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k == 0) {
        out << row[k] << std::string(width[k] - row[k].size(), ' ');
      } else {
        out << "  " << std::string(width[k] - row[k].size(), ' ') << row[k];
      }
    }
    out << '\n';
  }
  return out.str();
}

std::string render_breakdown_text(const BreakdownReport& report) {
  std::ostringstream out;
  out << "n = " << report.n << ", accuracy = " << fmt("%.1f", report.overall_accuracy * 100.0)
      << "%\n";
  auto section = [&](const char* title, const std::vector<GroupAccuracy>& groups) {
    out << '\n' << title << '\n';
    for (const auto& g : groups) {
      char line[128];
      std::snprintf(line, sizeof line, "  %-14s n=%-6zu acc=%5.1f\n", g.group.c_str(), g.n,
                    g.accuracy * 100.0);
      out << line;
    }
  };
  section("event type", report.by_event_type);
  section("event length quartile", report.by_event_length);
  section("timeline length quartile", report.by_timeline_length);
  section("position", report.by_position);
  if (!report.correlations.empty()) {
    out << "\nspearman vs outcome\n";
    for (const auto& [name, c] : report.correlations) {
      char line[128];
      std::snprintf(line, sizeof line, "  %-18s rho=%+.3f p=%.3g\n", name.c_str(), c.rho,
                    c.p_value);
      out << line;
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------

nlohmann::ordered_json to_json(const ScoredPrediction& s) {
  nlohmann::ordered_json j;
  j["instance_id"] = s.instance_id;
  j["prediction"] = s.prediction;
  j["gold"] = s.gold;
  j["similarity"] = s.similarity ? nlohmann::ordered_json(*s.similarity * kReportScale)
                                 : nlohmann::ordered_json(nullptr);
  j["similar"] = s.similar;
  return j;
}

nlohmann::ordered_json to_json(const ThresholdResult& t) {
  nlohmann::ordered_json j;
  j["epsilon_star"] = t.epsilon_star;
  j["macro_f1"] = t.macro_f1;
  auto sweep = nlohmann::ordered_json::array();
  for (const auto& [c, m] : t.sweep) sweep.push_back({c, m});
  j["sweep"] = std::move(sweep);
  return j;
}

nlohmann::ordered_json to_json(const ProbeResult& r) {
  nlohmann::ordered_json j;
  j["doc_id"] = r.doc_id;
  j["label"] = std::string(to_string(r.label));
  j["position_sims"] = r.position_sims;
  j["mean_sim"] = r.mean_sim;
  return j;
}

ProbeResult probe_result_from_json(const nlohmann::json& j) {
  try {
    ProbeResult r;
    r.doc_id = j.at("doc_id").get<std::string>();
    r.label = audit_label_from_string(j.at("label").get<std::string>());
    r.position_sims = j.at("position_sims").get<std::vector<double>>();
    r.mean_sim = j.contains("mean_sim") ? j.at("mean_sim").get<double>() : mean(r.position_sims);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("probe result: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const BreakdownReport& r) {
  auto groups = [](const std::vector<GroupAccuracy>& gs) {
    auto a = nlohmann::ordered_json::array();
    for (const auto& g : gs)
      a.push_back({{"group", g.group}, {"n", g.n}, {"correct", g.correct}, {"accuracy", g.accuracy}});
    return a;
  };
  nlohmann::ordered_json j;
  j["n"] = r.n;
  j["accuracy"] = r.overall_accuracy;
  j["by_event_type"] = groups(r.by_event_type);
  j["by_event_length"] = groups(r.by_event_length);
  j["event_length_edges"] = r.event_length_edges;
  j["by_timeline_length"] = groups(r.by_timeline_length);
  j["timeline_length_edges"] = r.timeline_length_edges;
  j["by_position"] = groups(r.by_position);
  nlohmann::ordered_json corr = nlohmann::ordered_json::object();
  for (const auto& [name, c] : r.correlations) corr[name] = to_json(c);
  j["spearman"] = std::move(corr);
  return j;
}

nlohmann::ordered_json to_json(const GridCell& c) {
  nlohmann::ordered_json j;
  j["model"] = c.model;
  j["template"] = std::string(to_string(c.prompt));
  j["hint"] = c.hint;
  j["n"] = c.n;
  j["accuracy"] = c.accuracy;
  return j;
}

}  // namespace lacuna
