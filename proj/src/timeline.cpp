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

#include "lacuna/timeline.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <cstdio>
#include <sstream>
#include <tuple>

#include "lacuna/error.hpp"
#include "prompt_text.hpp"

namespace lacuna {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

int days_in_month(int year, int month) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  return month == 2 && leap ? 29 : kDays[month - 1];
}

}  // namespace

std::string_view to_string(EventType type) {
  switch (type) {
    case EventType::kAgentive: return "agentive";
    case EventType::kRelational: return "relational";
    case EventType::kObservational: return "observational";
    case EventType::kCognitive: return "cognitive";
    case EventType::kRole: return "role";
  }
  return "agentive";
}

std::string_view to_string(DatePrecision precision) {
  switch (precision) {
    case DatePrecision::kDay: return "day";
    case DatePrecision::kMonth: return "month";
    case DatePrecision::kYear: return "year";
    case DatePrecision::kDecade: return "decade";
    case DatePrecision::kUnknown: return "unknown";
  }
  return "unknown";
}

std::string_view to_string(Confidence confidence) {
  switch (confidence) {
    case Confidence::kHigh: return "high";
    case Confidence::kMedium: return "medium";
    case Confidence::kLow: return "low";
  }
  return "medium";
}

EventType event_type_from_string(std::string_view s) {
  const std::string l = lower(trim(s));
  if (l == "agentive") return EventType::kAgentive;
  if (l == "relational") return EventType::kRelational;
  if (l == "observational") return EventType::kObservational;
  if (l == "cognitive") return EventType::kCognitive;
  if (l == "role") return EventType::kRole;
  throw InvalidArgument("unknown event type: " + std::string(s));
}

DatePrecision date_precision_from_string(std::string_view s) {
  const std::string l = lower(trim(s));
  if (l == "day") return DatePrecision::kDay;
  if (l == "month") return DatePrecision::kMonth;
  if (l == "year") return DatePrecision::kYear;
  if (l == "decade") return DatePrecision::kDecade;
  if (l == "unknown" || l.empty()) return DatePrecision::kUnknown;
  throw InvalidArgument("unknown date precision: " + std::string(s));
}

Confidence confidence_from_string(std::string_view s) {
  const std::string l = lower(trim(s));
  if (l == "high") return Confidence::kHigh;
  if (l == "medium") return Confidence::kMedium;
  if (l == "low") return Confidence::kLow;
  throw InvalidArgument("unknown confidence: " + std::string(s));
}

PartialDate PartialDate::parse(std::string_view iso) {
  const std::string_view s = trim(iso);
  PartialDate d;
  auto bad = [&] { return InvalidArgument("not an ISO partial date: " + std::string(iso)); };
  if (s.size() != 4 && s.size() != 7 && s.size() != 10) throw bad();
  if (!is_digits(s.substr(0, 4))) throw bad();
  d.year = std::stoi(std::string(s.substr(0, 4)));
  if (s.size() >= 7) {
    if (s[4] != '-' || !is_digits(s.substr(5, 2))) throw bad();
    d.month = std::stoi(std::string(s.substr(5, 2)));
    if (*d.month < 1 || *d.month > 12) throw bad();
  }
  if (s.size() == 10) {
    if (s[7] != '-' || !is_digits(s.substr(8, 2))) throw bad();
    d.day = std::stoi(std::string(s.substr(8, 2)));
    if (*d.day < 1 || *d.day > days_in_month(d.year, *d.month)) throw bad();
  }
  return d;
}

std::string PartialDate::to_string() const {
  char buf[16];
  if (day) {
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, *month, *day);
  } else if (month) {
    std::snprintf(buf, sizeof buf, "%04d-%02d", year, *month);
  } else {
    std::snprintf(buf, sizeof buf, "%04d", year);
  }
  return buf;
}

std::size_t word_count(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

void validate_event(const Event& e, std::size_t row) {
  if (trim(e.summary).empty()) throw ValidationError(row, "summary_nonempty", "empty event_summary");
  if (const auto w = word_count(e.summary); w > kMaxSummaryWords) {
    throw ValidationError(row, "summary_words",
                          "event_summary has " + std::to_string(w) + " words (max 30)");
  }
  if (const auto w = word_count(e.evidence); w > kMaxEvidenceWords) {
    throw ValidationError(row, "evidence_words",
                          "evidence has " + std::to_string(w) + " words (max 50)");
  }
  const std::string precision(to_string(e.date_precision));
  if (!e.start_date) {
    if (e.date_precision != DatePrecision::kUnknown) {
      throw ValidationError(row, "date_precision", "precision " + precision + " without a date");
    }
    return;
  }
  const PartialDate& d = *e.start_date;
  bool ok = false;
  switch (e.date_precision) {
    case DatePrecision::kDay: ok = d.day.has_value(); break;
    case DatePrecision::kMonth: ok = d.month.has_value() && !d.day; break;
    case DatePrecision::kYear:
    case DatePrecision::kDecade: ok = !d.month; break;
    case DatePrecision::kUnknown: ok = false; break;
  }
  if (!ok) {
    throw ValidationError(row, "date_precision",
                          "date " + d.to_string() + " inconsistent with precision " + precision);
  }
}

// ---------------------------------------------------------------------------
// CSV

std::vector<std::vector<std::string>> parse_csv(std::string_view data) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };
  for (std::size_t i = 0; i < data.size(); ++i) {
    const char c = data[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < data.size() && data[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started || field.empty()) {
          in_quotes = true;
          field_started = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < data.size() && data[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw FormatError("unterminated quoted CSV field");
  if (!field.empty() || !record.empty() || field_started) end_record();
  return records;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

namespace {

std::vector<std::string> split_sources(std::string_view field) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    std::string_view t = trim(current);
    if (!t.empty() && std::find(out.begin(), out.end(), t) == out.end()) out.emplace_back(t);
    current.clear();
  };
  for (char c : field) {
    if (c == ';' || c == ',' || c == '|' || std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      current.push_back(c);
    }
  }
  flush();
  return out;
}

}  // namespace

Timeline parse_timeline_csv(std::string_view data, std::vector<std::string>* warnings) {
  if (data.size() >= 3 && data.substr(0, 3) == "\xEF\xBB\xBF") data.remove_prefix(3);
  const auto records = parse_csv(data);
  if (records.empty()) throw FormatError("missing header: empty timeline file");

  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < records[0].size(); ++i) column[lower(trim(records[0][i]))] = i;
  for (auto name : kTimelineColumns) {
    if (!column.count(std::string(name))) {
      throw FormatError("missing header: first line lacks column \"" + std::string(name) + "\"");
    }
  }

  Timeline timeline;
  if (records.size() == 1) {
    if (warnings) warnings->push_back("timeline has a header but no events");
    return timeline;
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::size_t row = r + 1;
    if (rec.size() != records[0].size()) {
      throw ValidationError(row, "field_count",
                            std::to_string(rec.size()) + " fields, header has " +
                                std::to_string(records[0].size()));
    }
    auto get = [&](std::string_view name) -> const std::string& {
      return rec[column.at(std::string(name))];
    };
    const std::string character(trim(get("character")));
    if (r == 1) {
      timeline.character = character;
    } else if (character != timeline.character) {
      throw ValidationError(row, "character",
                            "\"" + character + "\" differs from \"" + timeline.character + "\"");
    }
    Event e;
    const std::string_view date = trim(get("start_date"));
    try {
      if (!date.empty()) e.start_date = PartialDate::parse(date);
    } catch (const InvalidArgument& ex) {
      throw ValidationError(row, "start_date", ex.what());
    }
    try {
      e.date_precision = date_precision_from_string(get("date_precision"));
    } catch (const InvalidArgument& ex) {
      throw ValidationError(row, "date_precision", ex.what());
    }
    try {
      e.event_type = event_type_from_string(get("event_type"));
    } catch (const InvalidArgument& ex) {
      throw ValidationError(row, "event_type", ex.what());
    }
    try {
      e.confidence = confidence_from_string(get("confidence"));
    } catch (const InvalidArgument& ex) {
      throw ValidationError(row, "confidence", ex.what());
    }
    e.summary = std::string(trim(get("event_summary")));
    e.evidence = get("evidence");
    e.sources = split_sources(get("sources"));
    e.notes = get("notes");
    validate_event(e, row);
    timeline.events.push_back(std::move(e));
  }
  return timeline;
}

Timeline read_timeline_csv(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInput(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_timeline_csv(ss.str(), warnings);
}

std::string serialize_timeline_csv(const Timeline& timeline) {
  std::string out;
  for (std::size_t i = 0; i < std::size(kTimelineColumns); ++i) {
    if (i) out.push_back(',');
    out.append(kTimelineColumns[i]);
  }
  out.push_back('\n');
  for (const Event& e : timeline.events) {
    std::string sources;
    for (const auto& s : e.sources) {
      if (!sources.empty()) sources.push_back(';');
      sources += s;
    }
    const std::string fields[] = {timeline.character,
                                  e.start_date ? e.start_date->to_string() : std::string(),
                                  std::string(to_string(e.date_precision)),
                                  e.summary,
                                  std::string(to_string(e.event_type)),
                                  e.evidence,
                                  std::string(to_string(e.confidence)),
                                  sources,
                                  e.notes};
    for (std::size_t i = 0; i < std::size(fields); ++i) {
      if (i) out.push_back(',');
      out += csv_escape(fields[i]);
    }
    out.push_back('\n');
  }
  return out;
}

Timeline sort_events(Timeline timeline) {
  auto key = [](const PartialDate& d) {
    return std::tuple(d.year, d.month.value_or(0), d.day.value_or(0));
  };
  std::stable_sort(timeline.events.begin(), timeline.events.end(),
                   [&](const Event& a, const Event& b) {
                     if (a.start_date.has_value() != b.start_date.has_value()) {
                       return a.start_date.has_value();
                     }
                     if (!a.start_date) return false;
                     return key(*a.start_date) < key(*b.start_date);
                   });
  return timeline;
}

// ---------------------------------------------------------------------------
// Extraction prompt

std::string_view extraction_prompt_template() { return prompt_text::kExtraction; }

namespace {

constexpr std::string_view kInputMarker = "INPUT\n";
constexpr std::string_view kConstraintsMarker = "CONSTRAINTS\n";

std::string escape_fences(std::string_view s, const std::string& where,
                          std::vector<std::string>* warnings) {
  std::string out(s);
  bool changed = false;
  for (std::string_view fence : {std::string_view("[["), std::string_view("]]")}) {
    std::size_t pos = 0;
    while ((pos = out.find(fence, pos)) != std::string::npos) {
      out.replace(pos, 2, fence[0] == '[' ? "[ [" : "] ]");
      pos += 2;
      changed = true;
    }
  }
  if (changed && warnings) warnings->push_back(where + ": fence characters escaped");
  return out;
}

}  // namespace

std::string render_extraction_prompt(std::string_view character, std::span<const Document> docs,
                                     std::vector<std::string>* warnings) {
  if (docs.empty()) throw InvalidArgument("extraction prompt needs at least one document");
  const std::string_view tmpl = prompt_text::kExtraction;
  const std::size_t head_end = tmpl.find(kInputMarker) + kInputMarker.size();
  const std::size_t tail_begin = tmpl.find(kConstraintsMarker);

  std::string out(tmpl.substr(0, head_end));
  out += "Character name: ";
  out += escape_fences(character, "character name", warnings);
  out += "\n\n";
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const Document& d = docs[i];
    const std::string label = "D" + std::to_string(i + 1);
    auto field = [&](std::string_view v) { return escape_fences(v, label + " metadata", warnings); };
    std::string_view text = d.text;
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.remove_suffix(1);
    out += "[[BEGIN DOC: " + label + "]]\nmeta:\n";
    out += "title=" + field(d.title) + "\n";
    out += "author=" + field(d.author) + "\n";
    out += "collection_title=" + field(d.collection_title) + "\n";
    out += "pub_place=" + field(d.pub_place) + "\n";
    out += "pub_year=" + (d.pub_year ? std::to_string(*d.pub_year) : std::string()) + "\n";
    out += "\ncontent:\n";
    out += escape_fences(text, label + " content", warnings);
    out += "\n[[END DOC: " + label + "]]\n\n";
  }
  out += tmpl.substr(tail_begin);
  return out;
}

}  // namespace lacuna
