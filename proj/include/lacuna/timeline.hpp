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

// Ground-truth character timelines: the event schema, RFC 4180 CSV I/O with
// per-row validation, chronological sorting, and the source-bounded
// extraction prompt used to produce them.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lacuna/corpus.hpp"

namespace lacuna {

enum class EventType { kAgentive, kRelational, kObservational, kCognitive, kRole };
enum class DatePrecision { kDay, kMonth, kYear, kDecade, kUnknown };
enum class Confidence { kHigh, kMedium, kLow };

std::string_view to_string(EventType type);
std::string_view to_string(DatePrecision precision);
std::string_view to_string(Confidence confidence);
// Case-insensitive; unknown labels throw InvalidArgument.
EventType event_type_from_string(std::string_view s);
DatePrecision date_precision_from_string(std::string_view s);
Confidence confidence_from_string(std::string_view s);

// ISO partial date: YYYY, YYYY-MM or YYYY-MM-DD.
struct PartialDate {
  int year = 0;
  std::optional<int> month;
  std::optional<int> day;

  static PartialDate parse(std::string_view iso);  // throws InvalidArgument
  std::string to_string() const;
  friend bool operator==(const PartialDate&, const PartialDate&) = default;
};

inline constexpr std::size_t kMaxSummaryWords = 30;
inline constexpr std::size_t kMaxEvidenceWords = 50;

struct Event {
  std::optional<PartialDate> start_date;
  DatePrecision date_precision = DatePrecision::kUnknown;
  std::string summary;
  EventType event_type = EventType::kAgentive;
  std::string evidence;
  Confidence confidence = Confidence::kMedium;
  std::vector<std::string> sources;  // D1, D2, ... in first-cited order, unique
  std::string notes;

  friend bool operator==(const Event&, const Event&) = default;
};

struct Timeline {
  std::string character;
  std::vector<Event> events;

  friend bool operator==(const Timeline&, const Timeline&) = default;
};

// Whitespace-delimited token count.
std::size_t word_count(std::string_view text);

// Checks the per-event rules; throws ValidationError naming `row` and the rule.
void validate_event(const Event& event, std::size_t row);

// Column order written by serialize_timeline_csv; the parser accepts any order.
inline constexpr std::string_view kTimelineColumns[] = {
    "character", "start_date", "date_precision", "event_summary", "event_type",
    "evidence",  "confidence", "sources",        "notes"};

// RFC 4180 record splitter (quoted fields, doubled quotes, CRLF or LF,
// newlines inside quotes). Throws FormatError on an unterminated quote.
std::vector<std::vector<std::string>> parse_csv(std::string_view data);
std::string csv_escape(std::string_view field);

// First record must be the header. A header-only file yields an empty
// timeline and a warning. Rows are validated; all rows must name the same
// character.
Timeline parse_timeline_csv(std::string_view data, std::vector<std::string>* warnings = nullptr);
Timeline read_timeline_csv(const std::string& path, std::vector<std::string>* warnings = nullptr);
std::string serialize_timeline_csv(const Timeline& timeline);

// Stable: dated events ascending by (year, month, day) with coarser dates
// first within a tie, undated events last in their original order.
Timeline sort_events(Timeline timeline);

// The extraction instruction with the input block filled from `docs`
// (fenced as D1..Dk in order). Occurrences of "[[" / "]]" inside metadata or
// text are rewritten to "[ [" / "] ]" and reported through `warnings`.
// Throws InvalidArgument if docs is empty.
std::string render_extraction_prompt(std::string_view character,
                                     std::span<const Document> docs,
                                     std::vector<std::string>* warnings = nullptr);

// The verbatim extraction instruction with its illustrative input block.
std::string_view extraction_prompt_template();

}  // namespace lacuna
