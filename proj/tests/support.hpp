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

// Shared fixtures: temporary directories and deterministic synthetic corpora.

#include <zlib.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lacuna/timeline.hpp"

namespace lacuna::testing {

class TempDir {
 public:
  TempDir() {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("lacuna-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_gzip(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  gzFile f = gzopen(p.string().c_str(), "wb");
  gzwrite(f, content.data(), static_cast<unsigned>(content.size()));
  gzclose(f);
}

// Pronounceable nonsense words; no word collides with an abbreviation the
// segmenter knows about (all are 6+ letters).
class Lexicon {
 public:
  explicit Lexicon(std::uint64_t seed) : rng_(seed) {}

  std::string word() {
    static const char* consonants = "bdfgklmnprstvz";
    static const char* vowels = "aeiou";
    std::string w;
    const int syllables = 3 + static_cast<int>(rng_() % 2);
    for (int i = 0; i < syllables; ++i) {
      w += consonants[rng_() % 14];
      w += vowels[rng_() % 5];
    }
    return w;
  }

  std::string sentence(int min_words = 6, int max_words = 14) {
    const int n = min_words + static_cast<int>(rng_() % static_cast<unsigned>(max_words - min_words + 1));
    std::string s;
    for (int i = 0; i < n; ++i) {
      std::string w = word();
      if (i == 0) w[0] = static_cast<char>(w[0] - 'a' + 'A');
      if (i) s += ' ';
      s += w;
    }
    return s + ".";
  }

  std::vector<std::string> sentences(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(sentence());
    return out;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline std::string join(const std::vector<std::string>& parts, const std::string& sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::string jsonl_record(const std::string& id, const std::string& text,
                                const std::string& title = "") {
  nlohmann::ordered_json j;
  j["id"] = id;
  if (!title.empty()) j["title"] = title;
  j["text"] = text;
  return j.dump();
}

// 20 archive documents of 10 sentences; the training corpus (two shards, one
// gzipped) copies every sentence of the planted documents into 12 records
// (120 matches each) and up to 40 sentence hits of other documents.
struct PlantedFixture {
  std::filesystem::path archive;
  std::filesystem::path corpus_dir;
  std::set<std::string> planted;
  std::vector<std::vector<std::string>> doc_sentences;
};

inline PlantedFixture make_planted_fixture(const std::filesystem::path& dir, std::uint64_t seed = 7) {
  Lexicon lex(seed);
  PlantedFixture f;
  f.archive = dir / "archive.jsonl";
  f.corpus_dir = dir / "corpus";
  std::string archive;
  for (int d = 0; d < 20; ++d) {
    auto s = lex.sentences(10);
    const std::string id = "doc" + std::string(d < 10 ? "0" : "") + std::to_string(d);
    archive += jsonl_record(id, join(s), "Title " + std::to_string(d)) + "\n";
    f.doc_sentences.push_back(s);
  }
  write_text(f.archive, archive);
  const int planted[] = {2, 7, 11, 16, 19};
  std::vector<std::string> shard0, shard1;
  int rec = 0;
  auto filler = [&] { return join(lex.sentences(3)); };
  for (int d : planted) {
    f.planted.insert(d < 10 ? "doc0" + std::to_string(d) : "doc" + std::to_string(d));
    for (int r = 0; r < 12; ++r) {
      std::string text = filler() + " " + join(f.doc_sentences[d]) + " " + filler();
      (rec % 2 ? shard1 : shard0).push_back(jsonl_record("r" + std::to_string(rec), text));
      ++rec;
    }
  }
  // Near misses: every other document gets 4 records with up to 10 sentences.
  for (int d = 0; d < 20; ++d) {
    if (f.planted.count(d < 10 ? "doc0" + std::to_string(d) : "doc" + std::to_string(d))) continue;
    for (int r = 0; r < 4; ++r) {
      std::vector<std::string> part(f.doc_sentences[d].begin() + r,
                                    f.doc_sentences[d].begin() + r + 1 + (d % 7));
      std::string text = filler() + " " + join(part) + " " + filler();
      (rec % 2 ? shard1 : shard0).push_back(jsonl_record("r" + std::to_string(rec), text));
      ++rec;
    }
  }
  for (int r = 0; r < 50; ++r) shard0.push_back(jsonl_record("n" + std::to_string(r), filler()));
  write_text(f.corpus_dir / "shard-000.jsonl", join(shard0, "\n") + "\n");
  write_gzip(f.corpus_dir / "shard-001.jsonl.gz", join(shard1, "\n") + "\n");
  return f;
}

// Valid, sorted timeline of 1..max_events events with mixed date precisions.
inline lacuna::Timeline random_timeline(Lexicon& lex, std::size_t max_events = 12) {
  auto& rng = lex.rng();
  lacuna::Timeline t;
  t.character = "Person " + lex.word();
  const std::size_t n = 1 + rng() % max_events;
  static const lacuna::EventType types[] = {
      lacuna::EventType::kAgentive, lacuna::EventType::kRelational,
      lacuna::EventType::kObservational, lacuna::EventType::kCognitive, lacuna::EventType::kRole};
  for (std::size_t i = 0; i < n; ++i) {
    lacuna::Event e;
    const int year = 1840 + static_cast<int>(rng() % 60);
    switch (rng() % 5) {
      case 0: e.start_date = lacuna::PartialDate{year, 1 + static_cast<int>(rng() % 12), 1 + static_cast<int>(rng() % 28)};
              e.date_precision = lacuna::DatePrecision::kDay; break;
      case 1: e.start_date = lacuna::PartialDate{year, 1 + static_cast<int>(rng() % 12), std::nullopt};
              e.date_precision = lacuna::DatePrecision::kMonth; break;
      case 2: e.start_date = lacuna::PartialDate{year, std::nullopt, std::nullopt};
              e.date_precision = lacuna::DatePrecision::kYear; break;
      case 3: e.start_date = lacuna::PartialDate{year - year % 10, std::nullopt, std::nullopt};
              e.date_precision = lacuna::DatePrecision::kDecade; break;
      default: e.date_precision = lacuna::DatePrecision::kUnknown; break;
    }
    e.summary = lex.sentence(1, 27);
    if (rng() % 4 == 0) e.summary += " \"quoted, with comma\"";
    e.event_type = types[rng() % 5];
    e.evidence = lex.sentence(1, 20);
    e.confidence = static_cast<lacuna::Confidence>(rng() % 3);
    e.sources = {"D" + std::to_string(1 + rng() % 3)};
    if (rng() % 3 == 0) e.notes = "line one\nline two";
    t.events.push_back(std::move(e));
  }
  return lacuna::sort_events(std::move(t));
}

}  // namespace lacuna::testing
