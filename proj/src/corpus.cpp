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

#include "lacuna/corpus.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>
#include <zlib.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "lacuna/error.hpp"

namespace lacuna {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string_view to_string(RecordFormat format) {
  switch (format) {
    case RecordFormat::kJsonlGz: return "jsonl.gz";
    case RecordFormat::kJsonl: return "jsonl";
    case RecordFormat::kPlainTextDir: return "text-dir";
  }
  return "jsonl";
}

RecordFormat record_format_from_string(std::string_view name) {
  if (name == "jsonl.gz" || name == "jsonl_gz" || name == "gz") return RecordFormat::kJsonlGz;
  if (name == "jsonl") return RecordFormat::kJsonl;
  if (name == "text-dir" || name == "plain_text_dir" || name == "text") {
    return RecordFormat::kPlainTextDir;
  }
  throw InvalidArgument("unknown record format: " + std::string(name));
}

namespace {

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool is_shard_file(const fs::path& p) {
  const std::string name = p.filename().string();
  return ends_with(name, ".jsonl") || ends_with(name, ".jsonl.gz") ||
         ends_with(name, ".json.gz") || ends_with(name, ".gz");
}

}  // namespace

ShardManifest ShardManifest::from_paths(const std::vector<fs::path>& paths,
                                        std::optional<RecordFormat> format) {
  ShardManifest manifest;
  if (format) manifest.record_format = *format;
  bool any_gz = false;
  for (const auto& path : paths) {
    if (!fs::exists(path)) throw MissingInput(path.string());
    if (manifest.record_format == RecordFormat::kPlainTextDir) {
      if (!fs::is_directory(path)) {
        throw InvalidArgument("text-dir shard is not a directory: " + path.string());
      }
      manifest.shard_paths.push_back(path);
      continue;
    }
    if (fs::is_directory(path)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::recursive_directory_iterator(path)) {
        if (entry.is_regular_file() && is_shard_file(entry.path())) found.push_back(entry.path());
      }
      std::sort(found.begin(), found.end());
      for (auto& f : found) {
        any_gz |= ends_with(f.string(), ".gz");
        manifest.shard_paths.push_back(std::move(f));
      }
    } else {
      any_gz |= ends_with(path.string(), ".gz");
      manifest.shard_paths.push_back(path);
    }
  }
  if (!format && any_gz) manifest.record_format = RecordFormat::kJsonlGz;
  return manifest;
}

void ShardManifest::validate() const {
  for (const auto& p : shard_paths) {
    if (!fs::exists(p)) throw MissingInput(p.string());
  }
}

// ---------------------------------------------------------------------------
// Record parsing

namespace {

std::string string_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (it->is_string()) return it->get<std::string>();
  return it->dump();
}

const json* lookup(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it != obj.end() && !it->is_null()) return &*it;
  auto meta = obj.find("metadata");
  if (meta != obj.end() && meta->is_object()) {
    auto inner = meta->find(key);
    if (inner != meta->end() && !inner->is_null()) return &*inner;
  }
  return nullptr;
}

std::optional<int> year_field(const json& value) {
  if (value.is_number_integer()) return value.get<int>();
  if (value.is_number()) return static_cast<int>(value.get<double>());
  if (value.is_string()) {
    const std::string s = value.get<std::string>();
    if (s.size() >= 4 && std::all_of(s.begin(), s.begin() + 4, [](char c) {
          return c >= '0' && c <= '9';
        })) {
      return std::stoi(s.substr(0, 4));
    }
  }
  return std::nullopt;
}

void apply_metadata(const json& obj, Document& doc) {
  auto text_of = [&](const char* key) -> std::string {
    const json* v = lookup(obj, key);
    if (!v) return {};
    return v->is_string() ? v->get<std::string>() : v->dump();
  };
  doc.title = text_of("title");
  doc.author = text_of("author");
  doc.collection_title = text_of("collection_title");
  doc.pub_place = text_of("pub_place");
  if (const json* y = lookup(obj, "pub_year")) doc.pub_year = year_field(*y);
  if (const json* g = lookup(obj, "genre"); g && g->is_string()) doc.genre = g->get<std::string>();
  if (const json* l = lookup(obj, "language"); l && l->is_string()) {
    doc.language = l->get<std::string>();
  }
}

}  // namespace

Document parse_record(std::string_view raw_line, RecordFormat format,
                      std::string_view fallback_id) {
  Document doc;
  if (format == RecordFormat::kPlainTextDir) {
    doc.doc_id = std::string(fallback_id);
    doc.text = std::string(raw_line);
    return doc;
  }
  if (raw_line.empty()) throw DecodeError("empty record");
  json obj = json::parse(raw_line.begin(), raw_line.end(), nullptr, /*allow_exceptions=*/false);
  if (obj.is_discarded()) throw DecodeError("malformed JSON record");
  if (!obj.is_object()) throw SchemaError("record is not a JSON object");
  auto text = obj.find("text");
  if (text == obj.end() || !text->is_string()) throw SchemaError("record has no string \"text\" field");
  doc.text = text->get<std::string>();
  doc.doc_id = string_field(obj, "id");
  if (doc.doc_id.empty()) doc.doc_id = string_field(obj, "doc_id");
  if (doc.doc_id.empty()) doc.doc_id = std::string(fallback_id);
  apply_metadata(obj, doc);
  return doc;
}

// ---------------------------------------------------------------------------
// Streaming

class RecordStream::LineSource {
 public:
  virtual ~LineSource() = default;
  // False at end of shard. Throws std::runtime_error on read failure.
  virtual bool next_line(std::string& line) = 0;
  virtual std::string fallback_id(std::uint64_t line_number) const = 0;
  // Optional sidecar metadata for the record just returned.
  virtual const json* sidecar() const { return nullptr; }
};

namespace {

// Line reader over gzip or plain files (zlib reads uncompressed input
// transparently).
class GzLineSource final : public RecordStream::LineSource {
 public:
  explicit GzLineSource(const fs::path& path) : path_(path) {
    file_ = gzopen(path.c_str(), "rb");
    if (!file_) throw std::runtime_error("cannot open " + path.string());
    gzbuffer(file_, 1 << 18);
    buffer_.resize(1 << 18);
  }
  ~GzLineSource() override {
    if (file_) gzclose(file_);
  }

  bool next_line(std::string& line) override {
    line.clear();
    for (;;) {
      if (pos_ == end_) {
        if (eof_) return !line.empty();
        const int got = gzread(file_, buffer_.data(), static_cast<unsigned>(buffer_.size()));
        if (got < 0) {
          int code = 0;
          const char* msg = gzerror(file_, &code);
          eof_ = true;
          throw std::runtime_error(std::string("read error: ") + (msg ? msg : "unknown"));
        }
        if (got == 0) {
          eof_ = true;
          int code = Z_OK;
          const char* msg = gzerror(file_, &code);
          if (code != Z_OK && code != Z_STREAM_END) {
            throw std::runtime_error(std::string("read error: ") + (msg ? msg : "unknown"));
          }
          return !line.empty();
        }
        pos_ = 0;
        end_ = static_cast<std::size_t>(got);
      }
      const char* begin = buffer_.data() + pos_;
      const void* nl = std::memchr(begin, '\n', end_ - pos_);
      if (nl) {
        const std::size_t len = static_cast<const char*>(nl) - begin;
        line.append(begin, len);
        pos_ += len + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
      }
      line.append(begin, end_ - pos_);
      pos_ = end_;
    }
  }

  std::string fallback_id(std::uint64_t line_number) const override {
    return path_.filename().string() + ":" + std::to_string(line_number);
  }

 private:
  fs::path path_;
  gzFile file_ = nullptr;
  std::vector<char> buffer_;
  std::size_t pos_ = 0;
  std::size_t end_ = 0;
  bool eof_ = false;
};

// One record per regular file (sorted by name); `<file>.meta.json` sidecars
// carry metadata.
class TextDirSource final : public RecordStream::LineSource {
 public:
  explicit TextDirSource(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      if (ends_with(entry.path().filename().string(), ".meta.json")) continue;
      files_.push_back(entry.path());
    }
    std::sort(files_.begin(), files_.end());
  }

  bool next_line(std::string& line) override {
    if (index_ >= files_.size()) return false;
    const fs::path& file = files_[index_++];
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    line = ss.str();
    sidecar_ = json();
    fs::path meta = file;
    meta += ".meta.json";
    if (fs::exists(meta)) {
      std::ifstream m(meta);
      sidecar_ = json::parse(m, nullptr, false);
      if (sidecar_.is_discarded()) sidecar_ = json();
    }
    return true;
  }

  std::string fallback_id(std::uint64_t) const override {
    return files_[index_ - 1].stem().string();
  }

  const json* sidecar() const override { return sidecar_.is_object() ? &sidecar_ : nullptr; }

 private:
  std::vector<fs::path> files_;
  std::size_t index_ = 0;
  json sidecar_;
};

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

RecordStream::RecordStream(ShardManifest manifest) : manifest_(std::move(manifest)) {}
RecordStream::~RecordStream() = default;
RecordStream::RecordStream(RecordStream&&) noexcept = default;
RecordStream& RecordStream::operator=(RecordStream&&) noexcept = default;

bool RecordStream::open_next_shard() {
  source_.reset();
  while (next_shard_ < manifest_.shard_paths.size()) {
    shard_index_ = next_shard_++;
    line_number_ = 0;
    const fs::path& path = manifest_.shard_paths[shard_index_];
    try {
      if (manifest_.record_format == RecordFormat::kPlainTextDir) {
        source_ = std::make_unique<TextDirSource>(path);
      } else {
        source_ = std::make_unique<GzLineSource>(path);
      }
      return true;
    } catch (const std::exception& e) {
      errors_.push_back({path, e.what()});
    }
  }
  return false;
}

bool RecordStream::next() {
  for (;;) {
    if (!source_ && !open_next_shard()) return false;
    bool got = false;
    try {
      got = source_->next_line(raw_line_);
    } catch (const std::exception& e) {
      // Corrupt stream: count the failure and abandon the rest of the shard.
      ++counters_.excepts;
      errors_.push_back({manifest_.shard_paths[shard_index_], e.what()});
      source_.reset();
      continue;
    }
    if (!got) {
      source_.reset();
      continue;
    }
    ++line_number_;
    if (manifest_.record_format != RecordFormat::kPlainTextDir && is_blank(raw_line_)) continue;
    try {
      current_ = parse_record(raw_line_, manifest_.record_format,
                              source_->fallback_id(line_number_));
      if (const json* meta = source_->sidecar()) apply_metadata(*meta, current_);
    } catch (const Error&) {
      ++counters_.excepts;
      continue;
    }
    ++counters_.tries;
    return true;
  }
}

std::vector<Document> load_documents(const ShardManifest& manifest, ScanCounters* counters,
                                     std::vector<ShardError>* errors) {
  std::vector<Document> docs;
  RecordStream stream(manifest);
  while (stream.next()) {
    Document doc = stream.document();
    doc.sentences = segment_sentences(doc.text);
    docs.push_back(std::move(doc));
  }
  if (counters) *counters += stream.counters();
  if (errors) {
    errors->insert(errors->end(), stream.shard_errors().begin(), stream.shard_errors().end());
  }
  return docs;
}

// ---------------------------------------------------------------------------
// Sentence segmentation

namespace {

bool is_space(unsigned char c) { return c == ' ' || (c >= '\t' && c <= '\r'); }
bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_upper(unsigned char c) { return c >= 'A' && c <= 'Z'; }

// Titles precede a name and never end a sentence.
const std::unordered_set<std::string_view>& titles() {
  static const std::unordered_set<std::string_view> kTitles = {
      "Mr", "Mrs", "Ms", "Messrs", "Mme", "Mlle", "Dr", "Prof", "Rev", "Revd", "Fr", "St",
      "Ste", "Gen", "Col", "Lt", "Capt", "Cpt", "Maj", "Sgt", "Cpl", "Pvt", "Adm", "Cmdr",
      "Gov", "Sen", "Rep", "Hon", "Pres", "Supt", "Insp", "Mt", "Ft"};
  return kTitles;
}

// General abbreviations end a sentence only when a capitalised word follows.
const std::unordered_set<std::string_view>& abbreviations() {
  static const std::unordered_set<std::string_view> kAbbrev = {
      "etc", "vs", "viz", "cf", "al", "approx", "ca", "No", "no", "Nos", "Vol", "vol",
      "pp", "p", "ch", "Ch", "ed", "eds", "Jr", "Sr", "Esq", "Inc", "Ltd", "Co", "Corp",
      "Bros", "Ave", "Blvd", "Rd", "Jan", "Feb", "Mar", "Apr", "Jun", "Jul", "Aug", "Sep",
      "Sept", "Oct", "Nov", "Dec", "Mon", "Tue", "Tues", "Wed", "Thu", "Thurs", "Fri", "Sat",
      "Sun", "a.m", "p.m", "e.g", "i.e"};
  return kAbbrev;
}

// Byte length of a closing quote/bracket at `s[i]`, or 0.
std::size_t closer_length(std::string_view s, std::size_t i) {
  const char c = s[i];
  if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
  static constexpr std::array<std::string_view, 4> kUtf8Closers = {
      "\xE2\x80\x9D", "\xE2\x80\x99", "\xC2\xBB", "\xE2\x80\xBA"};  // ” ’ » ›
  for (auto closer : kUtf8Closers) {
    if (s.substr(i, closer.size()) == closer) return closer.size();
  }
  return 0;
}

std::string_view word_before(std::string_view text, std::size_t period) {
  std::size_t b = period;
  while (b > 0 && !is_space(static_cast<unsigned char>(text[b - 1]))) --b;
  std::string_view word = text.substr(b, period - b);
  while (!word.empty() && (word.front() == '(' || word.front() == '"' || word.front() == '\'' ||
                           word.front() == '[')) {
    word.remove_prefix(1);
  }
  return word;
}

bool ends_sentence_at_period(std::string_view text, std::size_t period, std::size_t after) {
  const std::string_view word = word_before(text, period);
  if (word.empty()) return true;
  if (word.size() == 1 && is_upper(static_cast<unsigned char>(word[0]))) return false;
  if (titles().count(word)) return false;
  const bool dotted = word.find('.') != std::string_view::npos;
  if (abbreviations().count(word) || dotted) {
    std::size_t k = after;
    while (k < text.size() && is_space(static_cast<unsigned char>(text[k]))) ++k;
    while (k < text.size() && (text[k] == '"' || text[k] == '\'' || text[k] == '(')) ++k;
    return k >= text.size() || is_upper(static_cast<unsigned char>(text[k]));
  }
  return true;
}

// A sentence never starts with a lowercase letter (`"Why?" he asked.`).
bool lowercase_follows(std::string_view text, std::size_t after) {
  std::size_t k = after;
  while (k < text.size() && is_space(static_cast<unsigned char>(text[k]))) ++k;
  return k < text.size() && text[k] >= 'a' && text[k] <= 'z';
}

void push_trimmed(std::string_view text, std::size_t begin, std::size_t end,
                  std::vector<std::string>& out) {
  while (begin < end && is_space(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && is_space(static_cast<unsigned char>(text[end - 1]))) --end;
  if (end > begin) out.emplace_back(text.substr(begin, end - begin));
}

}  // namespace

std::vector<std::string> segment_sentences(std::string_view text) {
  std::vector<std::string> out;
  const std::size_t n = text.size();
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < n) {
    const char c = text[i];
    if (c == '\n') {
      // Blank line: newline, optional horizontal space, newline.
      std::size_t j = i + 1;
      while (j < n && (text[j] == ' ' || text[j] == '\t' || text[j] == '\r')) ++j;
      if (j < n && text[j] == '\n') {
        push_trimmed(text, start, i, out);
        while (j < n && is_space(static_cast<unsigned char>(text[j]))) ++j;
        start = i = j;
        continue;
      }
      ++i;
      continue;
    }
    if (!is_terminal(c)) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < n && is_terminal(text[j])) ++j;
    const bool single_period = (c == '.' && j == i + 1);
    while (j < n) {
      const std::size_t len = closer_length(text, j);
      if (len == 0) break;
      j += len;
    }
    if (j < n && !is_space(static_cast<unsigned char>(text[j]))) {
      i = j;
      continue;
    }
    if (single_period && !ends_sentence_at_period(text, i, j)) {
      i = j;
      continue;
    }
    if (lowercase_follows(text, j)) {
      i = j;
      continue;
    }
    push_trimmed(text, start, j, out);
    start = i = j;
  }
  push_trimmed(text, start, n, out);
  return out;
}

// ---------------------------------------------------------------------------
// Normalization

namespace {

bool is_ascii_space(unsigned char c) { return c == ' ' || (c >= '\t' && c <= '\r'); }

std::string collapse_ascii(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (is_ascii_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(c));
  }
  return out;
}

}  // namespace

std::string normalize(std::string_view text) {
  const bool ascii = std::all_of(text.begin(), text.end(),
                                 [](char c) { return static_cast<unsigned char>(c) < 0x80; });
  if (ascii) return collapse_ascii(text);

  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
  const icu::UnicodeString source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  const icu::UnicodeString composed = nfc->normalize(source, status);
  if (U_FAILURE(status)) throw Error("NFC normalization failed");

  icu::UnicodeString collapsed;
  bool pending_space = false;
  for (int32_t i = 0; i < composed.length();) {
    const UChar32 cp = composed.char32At(i);
    i += U16_LENGTH(cp);
    if (u_isUWhiteSpace(cp)) {
      pending_space = !collapsed.isEmpty();
      continue;
    }
    if (pending_space) collapsed.append(static_cast<UChar>(' '));
    pending_space = false;
    collapsed.append(cp);
  }
  std::string out;
  collapsed.toUTF8String(out);
  return out;
}

}  // namespace lacuna
