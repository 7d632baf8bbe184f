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

#include "lacuna/cloze.hpp"

#include <algorithm>
#include <cctype>

#include "lacuna/error.hpp"
#include "prompt_text.hpp"

namespace lacuna {

namespace {

// The window variant of the base instruction; the published instruction
// covers a single masked event only.
constexpr std::string_view kWindowInstruction =
    R"PROMPT({k} consecutive event summaries in the timeline below have been replaced by the token
[MASKED]. The dates are shown as context. Supply the exact missing event
summaries, each in **one concise sentence** on its own line and in timeline
order, with no additional commentary.

### Timeline
{timeline}

### Missing events)PROMPT";

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

std::string line_prefix(std::size_t number, const Event& event) {
  return std::to_string(number) + ". " + render_date(event) + ", ";
}

void check_position(const Timeline& t, std::size_t position) {
  if (position < 1 || position > t.events.size()) {
    throw InvalidArgument("mask position " + std::to_string(position) + " outside 1.." +
                          std::to_string(t.events.size()));
  }
}

ClozeInstance base_instance(const Timeline& t, MaskSpec spec) {
  ClozeInstance inst;
  inst.character = t.character;
  inst.spec = spec;
  inst.lines.reserve(t.events.size());
  for (std::size_t i = 0; i < t.events.size(); ++i) inst.lines.push_back(render_line(i + 1, t.events[i]));
  return inst;
}

void mask_slot(ClozeInstance& inst, const Timeline& t, std::size_t index, std::string slot) {
  const Event& e = t.events[index];
  const std::string prefix = line_prefix(index + 1, e);
  inst.lines[index] = prefix + slot;
  inst.masked_lines.push_back(index);
  inst.slot_offsets.push_back(prefix.size());
  inst.gold.push_back(e.summary);
  inst.date_context.push_back(render_date(e));
  inst.masked_types.push_back(e.event_type);
}

}  // namespace

std::string_view to_string(MaskKind kind) {
  switch (kind) {
    case MaskKind::kFull: return "full";
    case MaskKind::kPartial: return "partial";
    case MaskKind::kNgram: return "ngram";
  }
  return "full";
}

MaskKind mask_kind_from_string(std::string_view s) {
  if (s == "full") return MaskKind::kFull;
  if (s == "partial") return MaskKind::kPartial;
  if (s == "ngram") return MaskKind::kNgram;
  throw InvalidArgument("unknown mask kind: " + std::string(s));
}

std::string ClozeInstance::id() const {
  std::string out = character + "#" + std::string(to_string(spec.kind)) + "@" +
                    std::to_string(spec.position);
  if (spec.kind == MaskKind::kPartial) out += "/" + std::to_string(spec.masked_tokens);
  if (spec.kind == MaskKind::kNgram) out += "x" + std::to_string(spec.k);
  return out;
}

std::string ClozeInstance::rendered_timeline() const {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out.push_back('\n');
    out += lines[i];
  }
  return out;
}

std::string render_date(const Event& event) {
  if (!event.start_date) return "undated";
  if (event.date_precision == DatePrecision::kDecade) {
    return std::to_string(event.start_date->year) + "s";
  }
  return event.start_date->to_string();
}

std::string render_line(std::size_t number, const Event& event) {
  return line_prefix(number, event) + event.summary;
}

std::string render_timeline(const Timeline& timeline) {
  std::string out;
  for (std::size_t i = 0; i < timeline.events.size(); ++i) {
    if (i) out.push_back('\n');
    out += render_line(i + 1, timeline.events[i]);
  }
  return out;
}

ClozeInstance mask_full(const Timeline& timeline, std::size_t position) {
  check_position(timeline, position);
  ClozeInstance inst = base_instance(timeline, {MaskKind::kFull, position, 1, 0});
  mask_slot(inst, timeline, position - 1, std::string(kMaskToken));
  return inst;
}

ClozeInstance mask_partial(const Timeline& timeline, std::size_t position,
                           std::size_t masked_tokens) {
  check_position(timeline, position);
  const std::string& summary = timeline.events[position - 1].summary;
  const std::size_t w = word_count(summary);
  if (masked_tokens < 1 || masked_tokens > w) {
    throw InvalidArgument("masked_tokens " + std::to_string(masked_tokens) + " outside 1.." +
                          std::to_string(w));
  }
  // Keep the original bytes of the first w - masked_tokens tokens.
  const std::size_t reveal = w - masked_tokens;
  std::size_t end = 0;
  std::size_t seen = 0;
  bool in_word = false;
  for (std::size_t i = 0; i < summary.size() && seen <= reveal; ++i) {
    const bool space = std::isspace(static_cast<unsigned char>(summary[i])) != 0;
    if (!space && !in_word) ++seen;
    if (!space && seen <= reveal) end = i + 1;
    in_word = !space;
  }
  std::string slot = reveal == 0 ? std::string(kMaskToken)
                                 : summary.substr(0, end) + " " + std::string(kMaskToken);
  ClozeInstance inst = base_instance(timeline, {MaskKind::kPartial, position, 1, masked_tokens});
  mask_slot(inst, timeline, position - 1, std::move(slot));
  return inst;
}

ClozeInstance mask_ngram(const Timeline& timeline, std::size_t start, std::size_t k) {
  if (k < 1) throw InvalidArgument("window size must be >= 1");
  if (k == 1) return mask_full(timeline, start);
  check_position(timeline, start);
  if (start + k - 1 > timeline.events.size()) {
    throw InvalidArgument("window " + std::to_string(start) + "+" + std::to_string(k) +
                          " overflows a timeline of " + std::to_string(timeline.events.size()));
  }
  ClozeInstance inst = base_instance(timeline, {MaskKind::kNgram, start, k, 0});
  for (std::size_t i = start - 1; i < start - 1 + k; ++i) {
    mask_slot(inst, timeline, i, std::string(kMaskToken));
  }
  return inst;
}

std::vector<ClozeInstance> partial_sweep(const Timeline& timeline, std::size_t position) {
  check_position(timeline, position);
  const std::size_t w = word_count(timeline.events[position - 1].summary);
  std::vector<ClozeInstance> out;
  for (std::size_t m = w; m >= 1; --m) out.push_back(mask_partial(timeline, position, m));
  return out;
}

std::vector<ClozeInstance> ngram_windows(const Timeline& timeline, std::size_t k) {
  std::vector<ClozeInstance> out;
  if (k < 1 || k > timeline.events.size()) return out;
  for (std::size_t s = 1; s + k - 1 <= timeline.events.size(); ++s) {
    out.push_back(mask_ngram(timeline, s, k));
  }
  return out;
}

std::string unmask(const ClozeInstance& instance) {
  std::vector<std::string> lines = instance.lines;
  for (std::size_t j = 0; j < instance.masked_lines.size(); ++j) {
    std::string& line = lines[instance.masked_lines[j]];
    line = line.substr(0, instance.slot_offsets[j]) + instance.gold[j];
  }
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out.push_back('\n');
    out += lines[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Templates

std::string_view to_string(TemplateId id) {
  switch (id) {
    case TemplateId::kBase: return "base";
    case TemplateId::kConfabulation: return "confabulation";
    case TemplateId::kNullShot: return "null_shot";
    case TemplateId::kEccentric: return "eccentric";
    case TemplateId::kLlmDiscussion: return "llm_discussion";
    case TemplateId::kHaluEval: return "halueval";
    case TemplateId::kHumanHallucination: return "human_hallucination";
  }
  return "base";
}

TemplateId template_id_from_string(std::string_view s) {
  for (TemplateId id : kAllTemplates) {
    if (to_string(id) == s) return id;
  }
  throw InvalidArgument("unknown prompt template: " + std::string(s));
}

const PromptTemplate& prompt_template(TemplateId id) {
  static const PromptTemplate kTemplates[] = {
      {TemplateId::kBase, std::nullopt, std::nullopt},
      {TemplateId::kConfabulation, prompt_text::kConfabulationSystem, std::nullopt},
      {TemplateId::kNullShot, std::nullopt, prompt_text::kNullShotPrefix},
      {TemplateId::kEccentric, prompt_text::kEccentricSystem, std::nullopt},
      {TemplateId::kLlmDiscussion, prompt_text::kLlmDiscussionSystem, std::nullopt},
      {TemplateId::kHaluEval, std::nullopt, prompt_text::kHaluEvalPrefix},
      {TemplateId::kHumanHallucination, prompt_text::kHumanHallucinationSystem, std::nullopt},
  };
  return kTemplates[static_cast<int>(id)];
}

std::string_view base_instruction_template() { return prompt_text::kBase; }

RenderedPrompt render_cloze_prompt(const ClozeInstance& instance, TemplateId id,
                                   bool event_type_hint, const SourceMetadata* source) {
  std::vector<std::string> lines = instance.lines;
  if (event_type_hint) {
    for (std::size_t j = 0; j < instance.masked_lines.size(); ++j) {
      lines[instance.masked_lines[j]] +=
          " (event type: " + std::string(to_string(instance.masked_types[j])) + ")";
    }
  }
  std::string timeline;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) timeline.push_back('\n');
    timeline += lines[i];
  }

  std::string user(instance.masked_lines.size() > 1 ? kWindowInstruction : prompt_text::kBase);
  replace_all(user, "{k}", std::to_string(instance.masked_lines.size()));
  const std::size_t at = user.find("{timeline}");
  user.replace(at, std::string_view("{timeline}").size(), timeline);
  user.push_back('\n');

  const PromptTemplate& tmpl = prompt_template(id);
  RenderedPrompt out;
  if (tmpl.system_text) out.system = std::string(*tmpl.system_text);
  if (tmpl.instruction_prefix) {
    std::string prefix(*tmpl.instruction_prefix);
    if (id == TemplateId::kNullShot) {
      const SourceMetadata* meta = source ? source : (instance.source ? &*instance.source : nullptr);
      if (!meta || meta->title.empty() || meta->collection_title.empty() || !meta->pub_year) {
        throw InvalidArgument("null_shot template needs title, collection_title and pub_year");
      }
      replace_all(prefix, "{title}", meta->title);
      replace_all(prefix, "{collection_title}", meta->collection_title);
      replace_all(prefix, "{pub_year}", std::to_string(*meta->pub_year));
    }
    user = prefix + "\n\n" + user;
  }
  out.user = std::move(user);
  return out;
}

// ---------------------------------------------------------------------------
// Output parsing

namespace {

std::string_view trim_view(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string_view strip_marker(std::string_view s) {
  s = trim_view(s);
  // Bullets.
  for (std::string_view bullet : {"- ", "* ", "+ ", "\xE2\x80\xA2 "}) {
    if (s.substr(0, bullet.size()) == bullet) {
      s.remove_prefix(bullet.size());
      s = trim_view(s);
      break;
    }
  }
  // "1." "1)" "(1)".
  std::size_t i = 0;
  const bool paren = !s.empty() && s[0] == '(';
  if (paren) ++i;
  std::size_t digits = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++digits;
  if (digits > 0 && i < s.size() && (s[i] == '.' || s[i] == ')') &&
      (i + 1 == s.size() || std::isspace(static_cast<unsigned char>(s[i + 1])))) {
    s.remove_prefix(i + 1);
    s = trim_view(s);
  }
  // Emphasis wrapping the whole line.
  while (s.size() >= 4 && s.substr(0, 2) == "**" && s.substr(s.size() - 2) == "**") {
    s = trim_view(s.substr(2, s.size() - 4));
  }
  return s;
}

}  // namespace

ParsedOutput parse_model_output(std::string_view text, std::size_t expected_lines) {
  if (expected_lines < 1) throw InvalidArgument("expected_lines must be >= 1");
  ParsedOutput out;
  std::size_t pos = 0;
  while (pos <= text.size() && out.lines.size() < expected_lines) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = trim_view(text.substr(pos, nl - pos));
    pos = nl + 1;
    if (line.empty() || line[0] == '#') continue;
    line = strip_marker(line);
    if (line.empty()) continue;
    out.lines.emplace_back(line);
  }
  out.unparseable = out.lines.size() < expected_lines;
  return out;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::ordered_json to_json(const ClozeInstance& inst) {
  nlohmann::ordered_json j;
  j["instance_id"] = inst.id();
  j["character"] = inst.character;
  j["spec"] = {{"kind", to_string(inst.spec.kind)},
               {"position", inst.spec.position},
               {"k", inst.spec.k},
               {"masked_tokens", inst.spec.masked_tokens}};
  j["rendered_timeline"] = inst.rendered_timeline();
  j["masked_lines"] = inst.masked_lines;
  j["slot_offsets"] = inst.slot_offsets;
  j["gold"] = inst.gold;
  j["date_context"] = inst.date_context;
  std::vector<std::string> types;
  for (auto t : inst.masked_types) types.emplace_back(to_string(t));
  j["event_types"] = types;
  if (inst.source) {
    nlohmann::ordered_json s;
    s["title"] = inst.source->title;
    s["collection_title"] = inst.source->collection_title;
    s["pub_year"] = inst.source->pub_year ? nlohmann::ordered_json(*inst.source->pub_year)
                                          : nlohmann::ordered_json(nullptr);
    j["source"] = s;
  }
  return j;
}

ClozeInstance cloze_from_json(const nlohmann::json& j) {
  ClozeInstance inst;
  try {
    inst.character = j.at("character").get<std::string>();
    const auto& spec = j.at("spec");
    inst.spec.kind = mask_kind_from_string(spec.at("kind").get<std::string>());
    inst.spec.position = spec.at("position").get<std::size_t>();
    inst.spec.k = spec.value("k", std::size_t{1});
    inst.spec.masked_tokens = spec.value("masked_tokens", std::size_t{0});
    const std::string rendered = j.at("rendered_timeline").get<std::string>();
    std::size_t pos = 0;
    while (pos <= rendered.size()) {
      std::size_t nl = rendered.find('\n', pos);
      if (nl == std::string::npos) nl = rendered.size();
      inst.lines.push_back(rendered.substr(pos, nl - pos));
      pos = nl + 1;
    }
    inst.masked_lines = j.at("masked_lines").get<std::vector<std::size_t>>();
    inst.slot_offsets = j.at("slot_offsets").get<std::vector<std::size_t>>();
    inst.gold = j.at("gold").get<std::vector<std::string>>();
    inst.date_context = j.value("date_context", std::vector<std::string>{});
    for (const auto& t : j.at("event_types")) {
      inst.masked_types.push_back(event_type_from_string(t.get<std::string>()));
    }
    if (j.contains("source") && j["source"].is_object()) {
      SourceMetadata s;
      s.title = j["source"].value("title", "");
      s.collection_title = j["source"].value("collection_title", "");
      if (j["source"].contains("pub_year") && j["source"]["pub_year"].is_number_integer()) {
        s.pub_year = j["source"]["pub_year"].get<int>();
      }
      inst.source = s;
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed cloze instance: ") + e.what());
  }
  if (inst.masked_lines.size() != inst.gold.size() ||
      inst.slot_offsets.size() != inst.gold.size() ||
      inst.masked_types.size() != inst.gold.size()) {
    throw FormatError("cloze instance has inconsistent slot arrays");
  }
  for (std::size_t idx : inst.masked_lines) {
    if (idx >= inst.lines.size()) throw FormatError("cloze instance slot index out of range");
  }
  return inst;
}

}  // namespace lacuna
