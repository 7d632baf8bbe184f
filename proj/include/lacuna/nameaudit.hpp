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

// Hidden-figure discovery: long-tail PERSON names from the archive, then a
// single Aho-Corasick pass over the training corpus counting every
// occurrence of every name.

#include <cstdint>
#include <functional>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lacuna/corpus.hpp"

namespace lacuna {

// Named-entity provider: one list of PERSON surface strings per input text.
class NerProvider {
 public:
  virtual ~NerProvider() = default;
  virtual std::vector<std::vector<std::string>> person_spans(
      std::span<const std::string> texts) = 0;
};

// Deterministic fallback tagger: maximal runs of capitalised words (joined by
// single spaces, "O'Brien" and "Smith-Jones" allowed, inner initials like
// "J." kept), leading titles stripped, runs made only of stopwords rejected.
// Runs of more than four tokens are dropped as headings.
class HeuristicNer final : public NerProvider {
 public:
  std::vector<std::vector<std::string>> person_spans(std::span<const std::string> texts) override;
  std::vector<std::string> person_spans(std::string_view text) const;
};

struct NameCandidate {
  std::string name;
  std::uint64_t corpus_freq_in_archive = 0;
  std::uint64_t doc_freq = 0;
  friend bool operator==(const NameCandidate&, const NameCandidate&) = default;
};

enum class FrequencyMode {
  kOccurrences,  // total mentions across the archive
  kDocuments,    // number of documents mentioning the name
};

struct CandidateOptions {
  std::size_t max_names = 10000;
  std::uint64_t max_freq = 51;  // exclusive upper bound
  std::uint64_t min_docs = 3;
  FrequencyMode freq_mode = FrequencyMode::kOccurrences;
};

// Ranks names by descending frequency (ties by name), keeps the top
// max_names, then keeps those with frequency < max_freq and doc_freq >=
// min_docs. Names are normalize()d before counting.
std::vector<NameCandidate> extract_name_candidates(std::span<const Document> docs,
                                                   NerProvider& ner,
                                                   const CandidateOptions& options = {});

// Multi-pattern automaton over bytes. Patterns are normalize()d and
// deduplicated; pattern ids follow first appearance.
class AhoCorasick {
 public:
  explicit AhoCorasick(std::span<const std::string> patterns);

  struct Match {
    std::size_t end;  // one past the last byte
    std::uint32_t pattern;
  };

  std::size_t state_count() const { return nodes_.size(); }
  std::size_t pattern_count() const { return patterns_.size(); }
  const std::string& pattern(std::uint32_t id) const { return patterns_[id]; }
  const std::vector<std::string>& patterns() const { return patterns_; }

  // Structural accessors (tests and diagnostics).
  std::int32_t failure(std::int32_t state) const { return nodes_[state].fail; }
  std::int32_t child(std::int32_t state, unsigned char byte) const;
  std::int32_t state_for(std::string_view prefix) const;  // -1 if not a trie node
  // Patterns ending at `state`, including those inherited through failure links.
  std::vector<std::uint32_t> outputs(std::int32_t state) const;

  // Calls on_match for every occurrence, in order of end position.
  void scan(std::string_view text, const std::function<void(const Match&)>& on_match) const;
  std::vector<Match> find_all(std::string_view text) const;

 private:
  struct Node {
    std::vector<std::pair<unsigned char, std::int32_t>> edges;  // sorted by byte
    std::int32_t fail = 0;
    std::int32_t output_link = -1;  // nearest proper suffix state with a pattern
    std::int32_t pattern = -1;      // pattern ending exactly here
    std::uint32_t depth = 0;
  };
  std::int32_t next_state(std::int32_t state, unsigned char byte) const;

  std::vector<Node> nodes_;
  std::vector<std::string> patterns_;
};

// True when [begin, end) is delimited by non-letters (or text edges).
bool is_word_delimited(std::string_view text, std::size_t begin, std::size_t end);

enum class NameLabel { kSeenInCorpus, kUnseen };
std::string_view to_string(NameLabel label);

struct NameAttestation {
  std::string name;
  std::uint64_t count = 0;
  NameLabel label = NameLabel::kUnseen;
  std::vector<std::string> snippets;
};

struct NameScanOptions {
  std::uint64_t tau_seen = 100;
  std::size_t snippet_cap = 5;
  std::size_t snippet_context = 40;  // normalized bytes on each side
  bool word_boundaries = true;
  unsigned workers = 1;
};

struct NameScanReport {
  std::vector<NameAttestation> attestations;  // in automaton pattern order
  ScanCounters counters;
  std::vector<ShardError> shard_errors;
};

// c(n): every occurrence in every normalize()d record counts. Snippets are
// captured while a name's running count is below snippet_cap, in (shard,
// offset) order.
NameScanReport scan_names(const AhoCorasick& automaton, const ShardManifest& corpus,
                          const NameScanOptions& options = {});

// Same counting over in-memory texts (one "record" each).
std::vector<NameAttestation> scan_texts(const AhoCorasick& automaton,
                                        std::span<const std::string> texts,
                                        const NameScanOptions& options = {});

std::vector<NameAttestation> apply_exclusion_list(std::vector<NameAttestation> attestations,
                                                  const std::set<std::string>& exclusions);

// Newline-delimited UTF-8, one name per line; blank lines and lines starting
// with '#' are ignored. Names are normalize()d.
std::set<std::string> load_exclusion_list(const std::string& path);

std::string to_jsonl(const NameAttestation& attestation);

}  // namespace lacuna
