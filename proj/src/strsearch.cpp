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

#include "lacuna/strsearch.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <mutex>
#include <unordered_map>

#include "json.hpp"
#include "lacuna/error.hpp"

namespace lacuna {

BadCharTable bm_preprocess(std::string_view pattern) {
  if (pattern.empty()) throw InvalidPattern("Boyer-Moore pattern is empty");
  BadCharTable table;
  table.shift.fill(-1);
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    table.shift[static_cast<unsigned char>(pattern[i])] = static_cast<int>(i);
  }
  return table;
}

bool bm_contains(std::string_view text, std::string_view pattern, const BadCharTable& table) {
  if (pattern.empty()) throw InvalidPattern("Boyer-Moore pattern is empty");
  const auto m = static_cast<std::ptrdiff_t>(pattern.size());
  const auto n = static_cast<std::ptrdiff_t>(text.size());
  const char* x = text.data();
  const char* p = pattern.data();
  std::ptrdiff_t s = 0;
  while (s <= n - m) {
    std::ptrdiff_t j = m - 1;
    while (j >= 0 && p[j] == x[s + j]) --j;
    if (j < 0) return true;
    s += std::max<std::ptrdiff_t>(1, j - table[static_cast<unsigned char>(x[s + j])]);
  }
  return false;
}

bool bm_contains(std::string_view text, std::string_view pattern) {
  return bm_contains(text, pattern, bm_preprocess(pattern));
}

std::string_view to_string(AuditLabel label) {
  return label == AuditLabel::kSeen ? "SEEN" : "UNSEEN";
}

AuditLabel audit_label_from_string(std::string_view s) {
  if (s == "SEEN") return AuditLabel::kSeen;
  if (s == "UNSEEN") return AuditLabel::kUnseen;
  throw InvalidArgument("unknown audit label: " + std::string(s));
}

namespace {

bool is_edge_junk(unsigned char c) {
  return c == ' ' || (c >= '\t' && c <= '\r') || (c < 0x80 && std::ispunct(c));
}

std::string_view trim_edges(std::string_view s) {
  while (!s.empty() && is_edge_junk(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_edge_junk(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::uint64_t load_anchor(const char* p) {
  std::uint64_t v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

}  // namespace

SentenceMatcher::SentenceMatcher(std::span<const Document> docs, const SearchOptions& options)
    : strategy_(options.strategy), doc_count_(docs.size()) {
  std::unordered_map<std::string_view, std::uint32_t> index;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (const std::string& sentence : docs[d].sentences) {
      std::string_view query = options.trim_edges ? trim_edges(sentence) : sentence;
      if (query.empty()) continue;
      if (options.skip_short_sentences && query.size() < options.min_sentence_bytes) continue;
      auto [it, inserted] = index.try_emplace(query, static_cast<std::uint32_t>(patterns_.size()));
      // Keys view into `docs`, which outlives construction.
      if (inserted) patterns_.push_back({std::string(query), bm_preprocess(query), {}});
      auto& owners = patterns_[it->second].owners;
      if (!owners.empty() && owners.back().doc == d) {
        ++owners.back().multiplicity;
      } else {
        owners.push_back({static_cast<std::uint32_t>(d), 1});
      }
    }
  }

  filter_.assign((std::size_t{1} << kFilterBits) / 64, 0);
  for (std::uint32_t id = 0; id < patterns_.size(); ++id) {
    const std::string& text = patterns_[id].text;
    if (text.size() < kAnchorBytes) {
      short_patterns_.push_back(id);
      continue;
    }
    const std::uint64_t anchor = load_anchor(text.data());
    anchors_.emplace_back(anchor, id);
    const std::uint64_t h = (anchor * 0x9E3779B97F4A7C15ULL) >> (64 - kFilterBits);
    filter_[h >> 6] |= std::uint64_t{1} << (h & 63);
  }
  std::sort(anchors_.begin(), anchors_.end());
}

SentenceMatcher::Scratch SentenceMatcher::make_scratch() const {
  Scratch scratch;
  scratch.stamp.assign(patterns_.size(), 0);
  return scratch;
}

void SentenceMatcher::credit(const Pattern& p, std::span<std::uint64_t> per_doc) const {
  for (const Owner& owner : p.owners) per_doc[owner.doc] += owner.multiplicity;
}

void SentenceMatcher::accumulate_exhaustive(std::string_view text,
                                            std::span<std::uint64_t> per_doc) const {
  for (const Pattern& p : patterns_) {
    if (bm_contains(text, p.text, p.table)) credit(p, per_doc);
  }
}

void SentenceMatcher::accumulate(std::string_view text, Scratch& scratch,
                                 std::span<std::uint64_t> per_doc) const {
  if (per_doc.size() < doc_count_) throw InvalidArgument("per-document count span too small");
  if (strategy_ == SearchOptions::Strategy::kExhaustive) {
    accumulate_exhaustive(text, per_doc);
    return;
  }

  for (std::uint32_t id : short_patterns_) {
    if (bm_contains(text, patterns_[id].text, patterns_[id].table)) credit(patterns_[id], per_doc);
  }
  if (anchors_.empty() || text.size() < kAnchorBytes) return;

  if (++scratch.epoch == 0) {
    std::fill(scratch.stamp.begin(), scratch.stamp.end(), 0);
    scratch.epoch = 1;
  }
  const std::uint32_t epoch = scratch.epoch;
  const char* data = text.data();
  const std::size_t last = text.size() - kAnchorBytes;
  const std::uint64_t* filter = filter_.data();
  for (std::size_t pos = 0; pos <= last; ++pos) {
    const std::uint64_t anchor = load_anchor(data + pos);
    const std::uint64_t h = (anchor * 0x9E3779B97F4A7C15ULL) >> (64 - kFilterBits);
    if (!((filter[h >> 6] >> (h & 63)) & 1)) continue;
    auto lo = std::lower_bound(anchors_.begin(), anchors_.end(),
                               std::pair<std::uint64_t, std::uint32_t>{anchor, 0});
    for (; lo != anchors_.end() && lo->first == anchor; ++lo) {
      const std::uint32_t id = lo->second;
      if (scratch.stamp[id] == epoch) continue;
      scratch.stamp[id] = epoch;
      // Every occurrence starts at an anchor hit, and this is the first hit
      // for this pattern, so searching the suffix decides the pair.
      const Pattern& p = patterns_[id];
      if (bm_contains(text.substr(pos), p.text, p.table)) credit(p, per_doc);
    }
  }
}

namespace {

struct ScanTotals {
  std::vector<std::uint64_t> per_doc;
  ScanCounters counters;
  std::vector<ShardError> errors;
};

ScanTotals scan_corpus(const SentenceMatcher& matcher, const ShardManifest& corpus,
                       unsigned workers) {
  ScanTotals totals;
  totals.per_doc.assign(matcher.document_count(), 0);
  std::mutex merge_mutex;
  for_each_shard(corpus, workers, [&](std::size_t, RecordStream& stream) {
    std::vector<std::uint64_t> local(matcher.document_count(), 0);
    auto scratch = matcher.make_scratch();
    while (stream.next()) matcher.accumulate(stream.document().text, scratch, local);
    std::lock_guard lock(merge_mutex);
    for (std::size_t d = 0; d < local.size(); ++d) totals.per_doc[d] += local[d];
    totals.counters += stream.counters();
    totals.errors.insert(totals.errors.end(), stream.shard_errors().begin(),
                         stream.shard_errors().end());
  });
  std::sort(totals.errors.begin(), totals.errors.end(),
            [](const ShardError& a, const ShardError& b) { return a.path < b.path; });
  return totals;
}

}  // namespace

MatchCountResult match_count(const Document& doc, const ShardManifest& corpus,
                             const SearchOptions& options) {
  if (doc.sentences.empty()) throw InvalidArgument("document has no sentences: " + doc.doc_id);
  SentenceMatcher matcher(std::span<const Document>(&doc, 1), options);
  ScanTotals totals = scan_corpus(matcher, corpus, options.workers);
  return {totals.per_doc[0], totals.counters, std::move(totals.errors)};
}

AuditReport audit_documents(std::span<const Document> docs, const ShardManifest& corpus,
                            std::uint64_t tau, const SearchOptions& options) {
  if (tau < 1) throw InvalidArgument("tau must be >= 1");
  std::vector<Document> segmented;
  std::span<const Document> query = docs;
  if (std::any_of(docs.begin(), docs.end(), [](const Document& d) { return d.sentences.empty(); })) {
    segmented.assign(docs.begin(), docs.end());
    for (auto& d : segmented) {
      if (d.sentences.empty()) d.sentences = segment_sentences(d.text);
    }
    query = segmented;
  }

  SentenceMatcher matcher(query, options);
  ScanTotals totals = scan_corpus(matcher, corpus, options.workers);

  AuditReport report;
  report.counters = totals.counters;
  report.shard_errors = std::move(totals.errors);
  report.audits.reserve(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const std::uint64_t m = totals.per_doc[d];
    report.audits.push_back(
        {docs[d].doc_id, m, m >= tau ? AuditLabel::kSeen : AuditLabel::kUnseen, totals.counters});
  }
  std::stable_sort(report.audits.begin(), report.audits.end(),
                   [](const MatchAudit& a, const MatchAudit& b) { return a.doc_id < b.doc_id; });
  return report;
}

std::string to_jsonl(const MatchAudit& audit) {
  nlohmann::ordered_json j;
  j["doc_id"] = audit.doc_id;
  j["match_count"] = audit.match_count;
  j["label"] = to_string(audit.label);
  j["tries"] = audit.counters.tries;
  j["excepts"] = audit.counters.excepts;
  return j.dump();
}

}  // namespace lacuna
