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

// Sentence-level contamination audit: every sentence of an archive document
// is searched, byte-exactly, in every training-corpus record with a
// bad-character Boyer-Moore matcher. A (record, sentence) pair contributes at
// most one match; a document with at least `tau` matches is SEEN.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lacuna/corpus.hpp"

namespace lacuna {

// shift[b] = last index of byte b in the pattern, or -1.
struct BadCharTable {
  std::array<int, 256> shift;

  int operator[](unsigned char byte) const { return shift[byte]; }
};

// Throws InvalidPattern on an empty pattern.
BadCharTable bm_preprocess(std::string_view pattern);

// True iff `pattern` occurs contiguously in `text`. Bad-character rule only:
// after a mismatch at pattern index j the window advances by
// max(1, j - T[text[s + j]]).
bool bm_contains(std::string_view text, std::string_view pattern, const BadCharTable& table);
bool bm_contains(std::string_view text, std::string_view pattern);

inline constexpr std::uint64_t kDefaultSeenThreshold = 100;
inline constexpr std::size_t kDefaultMinSentenceBytes = 20;

enum class AuditLabel { kSeen, kUnseen };
std::string_view to_string(AuditLabel label);
AuditLabel audit_label_from_string(std::string_view s);

struct MatchAudit {
  std::string doc_id;
  std::uint64_t match_count = 0;
  AuditLabel label = AuditLabel::kUnseen;
  ScanCounters counters;

  friend bool operator==(const MatchAudit&, const MatchAudit&) = default;
};

struct SearchOptions {
  enum class Strategy {
    // Every record is checked against every sentence (the literal double loop).
    kExhaustive,
    // An 8-byte anchor index over sentence prefixes nominates candidate
    // sentences; each candidate is then decided by bm_contains. Same counts
    // as kExhaustive, much less work per record.
    kAnchored,
  };

  Strategy strategy = Strategy::kAnchored;
  // Skip sentences shorter than min_sentence_bytes (off by default).
  bool skip_short_sentences = false;
  std::size_t min_sentence_bytes = kDefaultMinSentenceBytes;
  // Strip whitespace and ASCII punctuation from sentence edges before search.
  bool trim_edges = false;
  unsigned workers = 1;  // 0 = hardware concurrency
};

// Query side of the audit: the sentences of one or more documents, deduplicated
// into unique patterns. Immutable once built and shareable across threads; each
// thread scans with its own Scratch.
class SentenceMatcher {
 public:
  SentenceMatcher(std::span<const Document> docs, const SearchOptions& options);

  struct Scratch {
    std::vector<std::uint32_t> stamp;
    std::uint32_t epoch = 0;
  };
  Scratch make_scratch() const;

  // Adds to per_doc[d] the number of document d's sentences found in `text`.
  void accumulate(std::string_view text, Scratch& scratch,
                  std::span<std::uint64_t> per_doc) const;

  std::size_t document_count() const { return doc_count_; }
  std::size_t pattern_count() const { return patterns_.size(); }

 private:
  struct Owner {
    std::uint32_t doc;
    std::uint32_t multiplicity;
  };
  struct Pattern {
    std::string text;
    BadCharTable table;
    std::vector<Owner> owners;
  };
  static constexpr std::size_t kAnchorBytes = 8;
  static constexpr unsigned kFilterBits = 20;

  void credit(const Pattern& p, std::span<std::uint64_t> per_doc) const;
  void accumulate_exhaustive(std::string_view text, std::span<std::uint64_t> per_doc) const;

  SearchOptions::Strategy strategy_;
  std::size_t doc_count_;
  std::vector<Pattern> patterns_;
  std::vector<std::uint32_t> short_patterns_;                       // shorter than an anchor
  std::vector<std::pair<std::uint64_t, std::uint32_t>> anchors_;    // sorted (anchor, pattern)
  std::vector<std::uint64_t> filter_;                               // bitmap over anchor hashes
};

struct AuditReport {
  std::vector<MatchAudit> audits;  // sorted by doc_id
  ScanCounters counters;
  std::vector<ShardError> shard_errors;
};

// matches(d) for a single document. Requires doc.sentences to be nonempty.
struct MatchCountResult {
  std::uint64_t match_count = 0;
  ScanCounters counters;
  std::vector<ShardError> shard_errors;
};
MatchCountResult match_count(const Document& doc, const ShardManifest& corpus,
                             const SearchOptions& options = {});

// Audits all documents in one pass over the corpus. Documents whose sentences
// are empty are segmented from their text first. Requires tau >= 1.
AuditReport audit_documents(std::span<const Document> docs, const ShardManifest& corpus,
                            std::uint64_t tau = kDefaultSeenThreshold,
                            const SearchOptions& options = {});

// {"doc_id":..,"match_count":..,"label":..,"tries":..,"excepts":..}
std::string to_jsonl(const MatchAudit& audit);

}  // namespace lacuna
