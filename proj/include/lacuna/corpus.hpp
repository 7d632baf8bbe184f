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

// Corpus ingestion: sharded JSONL (optionally gzip-compressed) and plain-text
// directories, sentence segmentation, and text normalization for name scans.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace lacuna {

struct Document {
  std::string doc_id;
  std::string title;
  std::string author;
  std::string collection_title;
  std::string pub_place;
  std::optional<int> pub_year;
  std::optional<std::string> genre;
  std::optional<std::string> language;
  std::string text;
  std::vector<std::string> sentences;  // filled by segment_sentences on demand
};

enum class RecordFormat { kJsonlGz, kJsonl, kPlainTextDir };

std::string_view to_string(RecordFormat format);
RecordFormat record_format_from_string(std::string_view name);

struct ShardManifest {
  std::vector<std::filesystem::path> shard_paths;
  RecordFormat record_format = RecordFormat::kJsonl;

  // Builds a manifest from files and/or directories. A directory contributes
  // every *.jsonl / *.jsonl.gz / *.json.gz below it (recursively, sorted by
  // path). With kPlainTextDir each path must itself be a directory.
  static ShardManifest from_paths(const std::vector<std::filesystem::path>& paths,
                                  std::optional<RecordFormat> format = std::nullopt);

  // Throws MissingInput for the first path that does not exist.
  void validate() const;
};

// tries + excepts == non-blank lines encountered.
struct ScanCounters {
  std::uint64_t tries = 0;
  std::uint64_t excepts = 0;

  ScanCounters& operator+=(const ScanCounters& other) {
    tries += other.tries;
    excepts += other.excepts;
    return *this;
  }
  friend bool operator==(const ScanCounters&, const ScanCounters&) = default;
};

struct ShardError {
  std::filesystem::path path;
  std::string message;
};

// Parses one JSONL record. Recognised keys: id (or doc_id), text, title,
// author, collection_title, pub_place, pub_year, genre, language; metadata
// keys may also sit under a nested "metadata" object. An absent id becomes
// `fallback_id`.
// Throws DecodeError for malformed JSON and SchemaError for a missing "text".
Document parse_record(std::string_view raw_line, RecordFormat format,
                      std::string_view fallback_id = {});

// Single pass over every record of a manifest, in shard order then line
// order. Lines that fail to parse are counted as excepts and skipped;
// unreadable shards are logged in shard_errors() and skipped.
class RecordStream {
 public:
  explicit RecordStream(ShardManifest manifest);
  ~RecordStream();
  RecordStream(RecordStream&&) noexcept;
  RecordStream& operator=(RecordStream&&) noexcept;

  // Advances to the next parseable record. Returns false when exhausted.
  bool next();

  const Document& document() const { return current_; }
  std::string_view raw_line() const { return raw_line_; }
  std::size_t shard_index() const { return shard_index_; }
  std::uint64_t line_number() const { return line_number_; }
  const ScanCounters& counters() const { return counters_; }
  const std::vector<ShardError>& shard_errors() const { return errors_; }

  class LineSource;

 private:
  bool open_next_shard();

  ShardManifest manifest_;
  std::size_t next_shard_ = 0;
  std::size_t shard_index_ = 0;
  std::uint64_t line_number_ = 0;
  std::unique_ptr<LineSource> source_;
  Document current_;
  std::string raw_line_;
  ScanCounters counters_;
  std::vector<ShardError> errors_;
};

// Reads every record of the manifest into memory and segments sentences.
std::vector<Document> load_documents(const ShardManifest& manifest,
                                     ScanCounters* counters = nullptr,
                                     std::vector<ShardError>* errors = nullptr);

// Rule-based segmentation: a sentence ends at . ! ? (plus any trailing
// closing quotes/brackets) followed by whitespace or end of text, unless the
// word before the period is a title abbreviation or a single initial. General
// abbreviations (etc., vs., Jan., U.S.) end a sentence only when the next
// word is capitalised, and no terminal ends a sentence when the next word
// starts lowercase. Blank lines always end a sentence. Returned sentences
// are verbatim substrings of `text` with edge whitespace removed.
std::vector<std::string> segment_sentences(std::string_view text);

// NFC composition, Unicode whitespace runs collapsed to one space, edges
// trimmed. Case is preserved.
std::string normalize(std::string_view text);

// Runs `fn(shard_index, stream)` for each shard of `manifest` on up to
// `workers` threads, one shard per task. `stream` covers exactly that shard.
// The first exception thrown by any task is rethrown after all threads join.
template <typename Fn>
void for_each_shard(const ShardManifest& manifest, unsigned workers, Fn&& fn) {
  const std::size_t shard_count = manifest.shard_paths.size();
  if (shard_count == 0) return;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, shard_count));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= shard_count) return;
      try {
        ShardManifest one{{manifest.shard_paths[i]}, manifest.record_format};
        RecordStream stream(std::move(one));
        fn(i, stream);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace lacuna
