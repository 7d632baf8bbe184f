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

// Narrative cloze: mask one event (fully or a token suffix) or a window of
// consecutive events in a rendered timeline, and build generation prompts
// around the masked timeline.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lacuna/timeline.hpp"

namespace lacuna {

inline constexpr std::string_view kMaskToken = "[MASKED]";

enum class MaskKind { kFull, kPartial, kNgram };
std::string_view to_string(MaskKind kind);
MaskKind mask_kind_from_string(std::string_view s);

struct MaskSpec {
  MaskKind kind = MaskKind::kFull;
  std::size_t position = 1;       // 1-based index of the (first) masked event
  std::size_t k = 1;              // window size, kNgram only
  std::size_t masked_tokens = 0;  // trailing tokens masked, kPartial only

  friend bool operator==(const MaskSpec&, const MaskSpec&) = default;
};

// Document metadata used by the null-shot template.
struct SourceMetadata {
  std::string title;
  std::string collection_title;
  std::optional<int> pub_year;

  friend bool operator==(const SourceMetadata&, const SourceMetadata&) = default;
};

struct ClozeInstance {
  std::string character;
  MaskSpec spec;
  std::vector<std::string> lines;          // "i. <date>, <summary or slot>"
  std::vector<std::size_t> masked_lines;   // 0-based, ascending
  std::vector<std::size_t> slot_offsets;   // byte offset of the slot in each masked line
  std::vector<std::string> gold;           // full summaries of the masked events, in order
  std::vector<std::string> date_context;   // rendered dates of the masked events
  std::vector<EventType> masked_types;
  std::optional<SourceMetadata> source;

  std::string id() const;
  std::string rendered_timeline() const;  // lines joined with '\n'

  friend bool operator==(const ClozeInstance&, const ClozeInstance&) = default;
};

// "1867-04-12", "1871-08", "1869", "1870s" (decade), "undated".
std::string render_date(const Event& event);
std::string render_line(std::size_t number, const Event& event);
std::string render_timeline(const Timeline& timeline);

// All throw InvalidArgument for an out-of-range position or window.
ClozeInstance mask_full(const Timeline& timeline, std::size_t position);
ClozeInstance mask_partial(const Timeline& timeline, std::size_t position,
                           std::size_t masked_tokens);
// k == 1 is the same instance as mask_full(start).
ClozeInstance mask_ngram(const Timeline& timeline, std::size_t start, std::size_t k);

// masked_tokens = w, w-1, ..., 1 for event `position` (w = its word count).
std::vector<ClozeInstance> partial_sweep(const Timeline& timeline, std::size_t position);
// Every valid window start for size k.
std::vector<ClozeInstance> ngram_windows(const Timeline& timeline, std::size_t k);

// Restores the source timeline rendering by writing the gold back into the slots.
std::string unmask(const ClozeInstance& instance);

enum class TemplateId {
  kBase,
  kConfabulation,
  kNullShot,
  kEccentric,
  kLlmDiscussion,
  kHaluEval,
  kHumanHallucination,
};
inline constexpr TemplateId kAllTemplates[] = {
    TemplateId::kBase,          TemplateId::kConfabulation, TemplateId::kNullShot,
    TemplateId::kEccentric,     TemplateId::kLlmDiscussion, TemplateId::kHaluEval,
    TemplateId::kHumanHallucination};

std::string_view to_string(TemplateId id);
TemplateId template_id_from_string(std::string_view s);

struct PromptTemplate {
  TemplateId id;
  std::optional<std::string_view> system_text;
  std::optional<std::string_view> instruction_prefix;
};
const PromptTemplate& prompt_template(TemplateId id);

// The single-event instruction, with "{timeline}" where the lines go.
std::string_view base_instruction_template();

struct RenderedPrompt {
  std::optional<std::string> system;
  std::string user;

  friend bool operator==(const RenderedPrompt&, const RenderedPrompt&) = default;
};

// user = [instruction prefix + blank line] + base instruction over the masked
// timeline. With event_type_hint each masked line gets " (event type: <type>)".
// kNullShot needs title, collection_title and pub_year in `source` (or the
// instance's own source); otherwise InvalidArgument.
RenderedPrompt render_cloze_prompt(const ClozeInstance& instance, TemplateId id,
                                   bool event_type_hint,
                                   const SourceMetadata* source = nullptr);

struct ParsedOutput {
  std::vector<std::string> lines;
  bool unparseable = false;
};

// First `expected_lines` nonempty lines with list numbering, bullets and
// markdown emphasis markers stripped; heading lines ("#...") skipped. Fewer
// lines than expected sets `unparseable`.
ParsedOutput parse_model_output(std::string_view text, std::size_t expected_lines);

nlohmann::ordered_json to_json(const ClozeInstance& instance);
ClozeInstance cloze_from_json(const nlohmann::json& j);

}  // namespace lacuna
