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

#include "lacuna/nameaudit.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>
#include <mutex>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "lacuna/error.hpp"

namespace lacuna {

// ---------------------------------------------------------------------------
// Heuristic NER

namespace {

const std::unordered_set<std::string_view>& ner_stopwords() {
  static const std::unordered_set<std::string_view> kStop = {
      "A", "An", "The", "He", "She", "It", "They", "We", "I", "You", "His", "Her", "Hers",
      "Its", "Their", "Our", "My", "Your", "Him", "Them", "Us", "Me", "In", "On", "At", "Of",
      "And", "But", "Or", "Nor", "For", "To", "From", "With", "By", "About", "Into", "Upon",
      "This", "That", "These", "Those", "There", "Here", "Then", "Thus", "When", "Where",
      "What", "Who", "Whom", "Why", "How", "If", "As", "After", "Before", "While", "During",
      "Since", "Until", "Although", "Though", "So", "Yet", "Not", "No", "Yes", "All", "Some",
      "Many", "Most", "One", "Two", "Three", "First", "Second", "Last", "Every", "Each",
      "Chapter", "Part", "Section", "Page", "Volume", "January", "February", "March",
      "April", "May", "June", "July", "August", "September", "October", "November",
      "December", "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday",
      "Sunday", "God", "Lord", "Sir", "Madam", "Miss"};
  return kStop;
}

const std::unordered_set<std::string_view>& ner_titles() {
  static const std::unordered_set<std::string_view> kTitles = {
      "Mr", "Mrs", "Ms", "Miss", "Dr", "Prof", "Professor", "Rev", "Reverend", "Capt",
      "Captain", "Col", "Colonel", "Gen", "General", "Lt", "Lieutenant", "Sgt", "Sergeant",
      "Gov", "Governor", "Sen", "Senator", "Judge", "Hon", "Sir", "Lady", "Lord", "Madam",
      "Mme", "Mlle", "Aunt", "Uncle", "Brother", "Sister", "Father", "Mother", "Deacon",
      "Elder", "Bishop", "President", "Major", "Private", "Corporal", "Mister", "Master"};
  return kTitles;
}

bool starts_upper(std::string_view token) {
  if (token.empty()) return false;
  const auto c = static_cast<unsigned char>(token[0]);
  if (c < 0x80) return c >= 'A' && c <= 'Z';
  UChar32 cp;
  int32_t i = 0;
  U8_NEXT(reinterpret_cast<const uint8_t*>(token.data()), i, static_cast<int32_t>(token.size()),
          cp);
  return cp >= 0 && u_isupper(cp);
}

struct Token {
  std::string_view core;   // punctuation stripped
  bool initial = false;    // "J."
  bool breaks_after = false;  // trailing , ; : . ! ? or closing bracket
  bool sentence_start = false;
};

std::vector<Token> tokenize_for_ner(std::string_view text) {
  std::vector<Token> tokens;
  bool next_starts_sentence = true;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j == i) break;
    std::string_view raw = text.substr(i, j - i);
    i = j;
    Token tok;
    tok.sentence_start = next_starts_sentence;
    std::string_view core = raw;
    while (!core.empty() && std::string_view("\"'([{").find(core.front()) != std::string_view::npos) {
      core.remove_prefix(1);
    }
    bool terminal = false;
    bool breaks = false;
    while (!core.empty() &&
           std::string_view(".,;:!?\"')]}").find(core.back()) != std::string_view::npos) {
      const char c = core.back();
      if (c == '.' || c == '!' || c == '?') terminal = true;
      breaks = true;
      core.remove_suffix(1);
    }
    tok.initial = core.size() == 1 && starts_upper(core) && raw.size() >= 2 &&
                  raw[raw.size() - 1] == '.';
    if (tok.initial) terminal = false, breaks = false;
    tok.core = core;
    tok.breaks_after = breaks;
    next_starts_sentence = terminal;
    tokens.push_back(tok);
  }
  return tokens;
}

}  // namespace

std::vector<std::string> HeuristicNer::person_spans(std::string_view text) const {
  std::vector<std::string> names;
  const std::vector<Token> tokens = tokenize_for_ner(text);
  std::size_t i = 0;
  while (i < tokens.size()) {
    if (!starts_upper(tokens[i].core)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < tokens.size() && starts_upper(tokens[j].core)) {
      if (tokens[j].breaks_after) {
        ++j;
        break;
      }
      ++j;
    }
    // tokens [i, j) form a capitalised run.
    std::size_t b = i;
    const bool run_at_sentence_start = tokens[i].sentence_start;
    while (b < j && (ner_titles().count(tokens[b].core) || ner_stopwords().count(tokens[b].core))) {
      ++b;
    }
    std::size_t e = j;
    while (e > b && (ner_stopwords().count(tokens[e - 1].core) || tokens[e - 1].initial)) --e;
    const std::size_t len = e - b;
    const bool sentence_initial_single = len == 1 && b == i && run_at_sentence_start;
    if (len >= 1 && len <= 4 && !sentence_initial_single) {
      std::string name;
      for (std::size_t k = b; k < e; ++k) {
        if (!name.empty()) name.push_back(' ');
        name.append(tokens[k].core);
        if (tokens[k].initial) name.push_back('.');
      }
      names.push_back(std::move(name));
    }
    i = j;
  }
  return names;
}

std::vector<std::vector<std::string>> HeuristicNer::person_spans(
    std::span<const std::string> texts) {
  std::vector<std::vector<std::string>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(person_spans(std::string_view(t)));
  return out;
}

std::vector<NameCandidate> extract_name_candidates(std::span<const Document> docs,
                                                   NerProvider& ner,
                                                   const CandidateOptions& options) {
  if (options.max_names < 1) throw InvalidArgument("max_names must be >= 1");
  if (docs.empty()) return {};
  std::vector<std::string> texts;
  texts.reserve(docs.size());
  for (const auto& d : docs) texts.push_back(d.text);
  const auto spans = ner.person_spans(texts);
  if (spans.size() != docs.size()) throw Error("NER provider returned wrong number of results");

  std::map<std::string, NameCandidate> tally;
  for (std::size_t d = 0; d < spans.size(); ++d) {
    std::unordered_set<std::string> in_doc;
    for (const auto& raw : spans[d]) {
      std::string name = normalize(raw);
      if (name.empty()) continue;
      auto& c = tally[name];
      c.name = name;
      ++c.corpus_freq_in_archive;
      if (in_doc.insert(name).second) ++c.doc_freq;
    }
  }
  auto freq = [&](const NameCandidate& c) {
    return options.freq_mode == FrequencyMode::kOccurrences ? c.corpus_freq_in_archive
                                                            : c.doc_freq;
  };
  std::vector<NameCandidate> ranked;
  ranked.reserve(tally.size());
  for (auto& [_, c] : tally) ranked.push_back(std::move(c));
  std::stable_sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
    return freq(a) > freq(b);
  });
  if (ranked.size() > options.max_names) ranked.resize(options.max_names);

  std::vector<NameCandidate> kept;
  for (auto& c : ranked) {
    if (freq(c) < options.max_freq && c.doc_freq >= options.min_docs) kept.push_back(std::move(c));
  }
  return kept;
}

// ---------------------------------------------------------------------------
// Aho-Corasick

AhoCorasick::AhoCorasick(std::span<const std::string> patterns) {
  if (patterns.empty()) throw InvalidPattern("Aho-Corasick needs at least one pattern");
  nodes_.emplace_back();
  std::unordered_set<std::string> seen;
  for (const auto& raw : patterns) {
    std::string p = normalize(raw);
    if (p.empty()) throw InvalidPattern("pattern is empty after normalization");
    if (!seen.insert(p).second) continue;
    std::int32_t state = 0;
    for (unsigned char byte : p) {
      std::int32_t next = child(state, byte);
      if (next < 0) {
        next = static_cast<std::int32_t>(nodes_.size());
        Node node;
        node.depth = nodes_[state].depth + 1;
        nodes_.push_back(std::move(node));
        auto& edges = nodes_[state].edges;
        edges.insert(std::upper_bound(edges.begin(), edges.end(),
                                      std::pair<unsigned char, std::int32_t>{byte, -1}),
                     {byte, next});
      }
      state = next;
    }
    nodes_[state].pattern = static_cast<std::int32_t>(patterns_.size());
    patterns_.push_back(std::move(p));
  }

  // Breadth-first failure links.
  std::deque<std::int32_t> queue;
  for (const auto& [byte, c] : nodes_[0].edges) {
    nodes_[c].fail = 0;
    queue.push_back(c);
  }
  while (!queue.empty()) {
    const std::int32_t s = queue.front();
    queue.pop_front();
    for (const auto& [byte, c] : nodes_[s].edges) {
      std::int32_t f = nodes_[s].fail;
      while (f != 0 && child(f, byte) < 0) f = nodes_[f].fail;
      const std::int32_t target = child(f, byte);
      nodes_[c].fail = (target >= 0 && target != c) ? target : 0;
      const Node& fail_node = nodes_[nodes_[c].fail];
      nodes_[c].output_link = fail_node.pattern >= 0 ? nodes_[c].fail : fail_node.output_link;
      queue.push_back(c);
    }
  }
}

std::int32_t AhoCorasick::child(std::int32_t state, unsigned char byte) const {
  const auto& edges = nodes_[state].edges;
  auto it = std::lower_bound(edges.begin(), edges.end(),
                             std::pair<unsigned char, std::int32_t>{byte, -1});
  return (it != edges.end() && it->first == byte) ? it->second : -1;
}

std::int32_t AhoCorasick::state_for(std::string_view prefix) const {
  std::int32_t state = 0;
  for (unsigned char byte : prefix) {
    state = child(state, byte);
    if (state < 0) return -1;
  }
  return state;
}

std::vector<std::uint32_t> AhoCorasick::outputs(std::int32_t state) const {
  std::vector<std::uint32_t> out;
  if (nodes_[state].pattern >= 0) out.push_back(static_cast<std::uint32_t>(nodes_[state].pattern));
  for (std::int32_t s = nodes_[state].output_link; s >= 0; s = nodes_[s].output_link) {
    out.push_back(static_cast<std::uint32_t>(nodes_[s].pattern));
  }
  return out;
}

std::int32_t AhoCorasick::next_state(std::int32_t state, unsigned char byte) const {
  for (;;) {
    const std::int32_t c = child(state, byte);
    if (c >= 0) return c;
    if (state == 0) return 0;
    state = nodes_[state].fail;
  }
}

void AhoCorasick::scan(std::string_view text,
                       const std::function<void(const Match&)>& on_match) const {
  std::int32_t state = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    state = next_state(state, static_cast<unsigned char>(text[i]));
    if (nodes_[state].pattern >= 0) {
      on_match({i + 1, static_cast<std::uint32_t>(nodes_[state].pattern)});
    }
    for (std::int32_t s = nodes_[state].output_link; s >= 0; s = nodes_[s].output_link) {
      on_match({i + 1, static_cast<std::uint32_t>(nodes_[s].pattern)});
    }
  }
}

std::vector<AhoCorasick::Match> AhoCorasick::find_all(std::string_view text) const {
  std::vector<Match> out;
  scan(text, [&](const Match& m) { out.push_back(m); });
  return out;
}

bool is_word_delimited(std::string_view text, std::size_t begin, std::size_t end) {
  const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
  const auto n = static_cast<int32_t>(text.size());
  if (begin > 0) {
    int32_t i = static_cast<int32_t>(begin);
    UChar32 cp;
    U8_PREV(bytes, 0, i, cp);
    if (cp >= 0 && u_isalpha(cp)) return false;
  }
  if (end < text.size()) {
    int32_t i = static_cast<int32_t>(end);
    UChar32 cp;
    U8_NEXT(bytes, i, n, cp);
    if (cp >= 0 && u_isalpha(cp)) return false;
  }
  return true;
}

std::string_view to_string(NameLabel label) {
  return label == NameLabel::kSeenInCorpus ? "SEEN_IN_O" : "UNSEEN";
}

namespace {

std::string snippet_around(std::string_view text, std::size_t begin, std::size_t end,
                           std::size_t context) {
  std::size_t lo = begin > context ? begin - context : 0;
  std::size_t hi = std::min(text.size(), end + context);
  while (lo > 0 && lo < text.size() && (static_cast<unsigned char>(text[lo]) & 0xC0) == 0x80) ++lo;
  while (hi < text.size() && hi > end && (static_cast<unsigned char>(text[hi]) & 0xC0) == 0x80) --hi;
  return std::string(text.substr(lo, hi - lo));
}

struct NameTally {
  std::vector<std::uint64_t> counts;
  std::vector<std::vector<std::string>> snippets;

  explicit NameTally(std::size_t patterns) : counts(patterns, 0), snippets(patterns) {}

  void scan_record(const AhoCorasick& automaton, std::string_view raw,
                   const NameScanOptions& options) {
    const std::string text = normalize(raw);
    automaton.scan(text, [&](const AhoCorasick::Match& m) {
      const std::size_t begin = m.end - automaton.pattern(m.pattern).size();
      if (options.word_boundaries && !is_word_delimited(text, begin, m.end)) return;
      if (counts[m.pattern] < options.snippet_cap) {
        snippets[m.pattern].push_back(snippet_around(text, begin, m.end, options.snippet_context));
      }
      ++counts[m.pattern];
    });
  }
};

std::vector<NameAttestation> to_attestations(const AhoCorasick& automaton, NameTally& tally,
                                             const NameScanOptions& options) {
  std::vector<NameAttestation> out;
  out.reserve(automaton.pattern_count());
  for (std::uint32_t id = 0; id < automaton.pattern_count(); ++id) {
    NameAttestation a;
    a.name = automaton.pattern(id);
    a.count = tally.counts[id];
    a.label = a.count >= options.tau_seen ? NameLabel::kSeenInCorpus : NameLabel::kUnseen;
    a.snippets = std::move(tally.snippets[id]);
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace

NameScanReport scan_names(const AhoCorasick& automaton, const ShardManifest& corpus,
                          const NameScanOptions& options) {
  const std::size_t shards = corpus.shard_paths.size();
  std::vector<std::unique_ptr<NameTally>> per_shard(shards);
  std::vector<ScanCounters> counters(shards);
  std::vector<std::vector<ShardError>> errors(shards);
  for_each_shard(corpus, options.workers, [&](std::size_t index, RecordStream& stream) {
    auto tally = std::make_unique<NameTally>(automaton.pattern_count());
    while (stream.next()) tally->scan_record(automaton, stream.document().text, options);
    counters[index] = stream.counters();
    errors[index] = stream.shard_errors();
    per_shard[index] = std::move(tally);
  });

  // Merge in shard order so snippets keep (shard, offset) order.
  NameTally merged(automaton.pattern_count());
  NameScanReport report;
  for (std::size_t s = 0; s < shards; ++s) {
    report.counters += counters[s];
    report.shard_errors.insert(report.shard_errors.end(), errors[s].begin(), errors[s].end());
    if (!per_shard[s]) continue;
    for (std::size_t id = 0; id < automaton.pattern_count(); ++id) {
      merged.counts[id] += per_shard[s]->counts[id];
      auto& dst = merged.snippets[id];
      for (auto& snip : per_shard[s]->snippets[id]) {
        if (dst.size() >= options.snippet_cap) break;
        dst.push_back(std::move(snip));
      }
    }
  }
  report.attestations = to_attestations(automaton, merged, options);
  return report;
}

std::vector<NameAttestation> scan_texts(const AhoCorasick& automaton,
                                        std::span<const std::string> texts,
                                        const NameScanOptions& options) {
  NameTally tally(automaton.pattern_count());
  for (const auto& t : texts) tally.scan_record(automaton, t, options);
  return to_attestations(automaton, tally, options);
}

std::vector<NameAttestation> apply_exclusion_list(std::vector<NameAttestation> attestations,
                                                  const std::set<std::string>& exclusions) {
  if (exclusions.empty()) return attestations;
  std::set<std::string> normalized;
  for (const auto& e : exclusions) normalized.insert(normalize(e));
  std::erase_if(attestations, [&](const NameAttestation& a) {
    return normalized.count(normalize(a.name)) > 0;
  });
  return attestations;
}

std::set<std::string> load_exclusion_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingInput(path);
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    std::string name = normalize(line);
    if (name.empty() || name[0] == '#') continue;
    out.insert(std::move(name));
  }
  return out;
}

std::string to_jsonl(const NameAttestation& a) {
  nlohmann::ordered_json j;
  j["name"] = a.name;
  j["count"] = a.count;
  j["label"] = to_string(a.label);
  j["snippets"] = a.snippets;
  return j.dump();
}

}  // namespace lacuna
