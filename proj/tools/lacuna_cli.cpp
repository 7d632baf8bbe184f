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

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "config.hpp"
#include "json.hpp"
#include "lacuna/cloze.hpp"
#include "lacuna/corpus.hpp"
#include "lacuna/digest.hpp"
#include "lacuna/error.hpp"
#include "lacuna/nameaudit.hpp"
#include "lacuna/providers.hpp"
#include "lacuna/scoring.hpp"
#include "lacuna/stats.hpp"
#include "lacuna/strsearch.hpp"
#include "lacuna/timeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace lacuna::cli {
namespace {

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kMissingInput = 3, kProviderFailure = 4 };

// Stream ids for seeds derived from the run seed.
enum SeedStream : std::uint64_t { kProbeSample = 1, kStatsResampling = 2 };

std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) { return derive_seed(seed, stream); }

struct Common {
  std::string out = "out";
  std::uint64_t seed = 0;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::string config;
};

// Provenance collected while a command runs.
struct Run {
  std::string command;
  CLI::App* app = nullptr;
  Common* common = nullptr;
  ordered_json inputs = ordered_json::object();

  void add_input(const fs::path& p) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::recursive_directory_iterator(p))
        if (e.is_regular_file()) files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) inputs[f.string()] = sha256_file(f);
    } else {
      inputs[p.string()] = sha256_file(p);
    }
  }

  void add_manifest(const ShardManifest& m) {
    for (const auto& p : m.shard_paths) add_input(p);
  }

  // Numbers become JSON numbers; list options become arrays.
  static ordered_json typed(const std::string& v) {
    if (!v.empty() && v.find_first_not_of("0123456789.-+eE") == std::string::npos) {
      ordered_json n = ordered_json::parse(v, nullptr, false);
      if (!n.is_discarded() && n.is_number()) return n;
    }
    return v;
  }

  ordered_json resolved_config() const {
    std::vector<std::pair<std::string, ordered_json>> entries;
    for (const CLI::Option* opt : app->get_options()) {
      const std::string name = opt->get_single_name();
      if (name.empty() || name == "help" || name == "config" || name == "out" || name == "workers")
        continue;
      std::vector<std::string> values;
      if (opt->count() > 0) {
        values = opt->results();
      } else {
        std::string d = opt->get_default_str();
        if (d.size() >= 2 && d.front() == '[' && d.back() == ']') d = d.substr(1, d.size() - 2);
        if (d == "{}") d.clear();
        std::size_t start = 0;
        while (!d.empty() && start <= d.size()) {
          const std::size_t comma = opt->get_items_expected_max() > 1 ? d.find(',', start) : std::string::npos;
          values.push_back(d.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
          if (comma == std::string::npos) break;
          start = comma + 1;
        }
      }
      ordered_json value;
      if (opt->get_items_expected_max() > 1) {
        value = ordered_json::array();
        for (const auto& v : values) value.push_back(typed(v));
      } else {
        value = values.empty() ? ordered_json(nullptr) : typed(values.back());
      }
      entries.emplace_back(name, std::move(value));
    }
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    ordered_json c = ordered_json::object();
    for (auto& [k, v] : entries) c[k] = std::move(v);
    return c;
  }

  void write(const std::vector<std::string>& jsonl, ordered_json summary,
             const std::string& text) const {
    const fs::path dir(common->out);
    fs::create_directories(dir);
    {
      std::ofstream out(dir / (command + ".jsonl"), std::ios::binary | std::ios::trunc);
      for (const auto& line : jsonl) out << line << '\n';
    }
    const ordered_json config = resolved_config();
    ordered_json report;
    report["command"] = command;
    report["version"] = LACUNA_VERSION;
    report["seed"] = common->seed;
    report["config_hash"] = sha256_hex(config.dump());
    report["config"] = config;
    report["inputs"] = inputs;
    report["summary"] = std::move(summary);
    {
      std::ofstream out(dir / (command + ".report.json"), std::ios::binary | std::ios::trunc);
      out << report.dump(2) << '\n';
    }
    {
      std::ofstream out(dir / (command + ".txt"), std::ios::binary | std::ios::trunc);
      out << text;
    }
  }
};

std::string pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", fraction * 100.0);
  return buf;
}

std::string num(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw MissingInput(p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<json> read_jsonl(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw MissingInput(p.string());
  std::vector<json> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw DecodeError(p.string() + ":" + std::to_string(number) + ": invalid JSON");
    out.push_back(std::move(j));
  }
  return out;
}

ShardManifest manifest_for(const std::vector<std::string>& paths, const std::string& format) {
  std::vector<fs::path> ps(paths.begin(), paths.end());
  for (const auto& p : ps)
    if (!fs::exists(p)) throw MissingInput(p.string());
  std::optional<RecordFormat> f;
  if (!format.empty() && format != "auto") f = record_format_from_string(format);
  auto m = ShardManifest::from_paths(ps, f);
  m.validate();
  return m;
}

std::optional<fs::path> cache_path(const std::string& dir) {
  if (dir.empty()) return std::nullopt;
  return fs::path(dir);
}

// Runs fn(i) for i in [0, n) on `workers` threads; the first exception wins.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned count = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), n));
  for (unsigned t = 1; t < count; ++t) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "Output directory")->capture_default_str();
  sub->add_option("--seed", c.seed, "Run seed")->capture_default_str();
  sub->add_option("--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--config", c.config, "Flat key=value config file");
}

// ---------------------------------------------------------------------------
// audit-strings

struct AuditStringsArgs {
  std::vector<std::string> archive, corpus;
  std::string archive_format = "auto", corpus_format = "auto";
  std::uint64_t tau = kDefaultSeenThreshold;
  std::string strategy = "anchored";
  bool skip_short = false;
  std::size_t min_sentence_bytes = kDefaultMinSentenceBytes;
  bool trim_edges = false;
};

void setup_audit_strings(CLI::App* sub, AuditStringsArgs& a) {
  sub->add_option("--archive", a.archive, "Archive documents (files or directories)")
      ->required()->delimiter(',');
  sub->add_option("--corpus", a.corpus, "Training corpus shards (files or directories)")
      ->required()->delimiter(',');
  sub->add_option("--archive-format", a.archive_format)->capture_default_str();
  sub->add_option("--corpus-format", a.corpus_format)->capture_default_str();
  sub->add_option("--tau", a.tau, "SEEN threshold on matches(d)")
      ->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--strategy", a.strategy)
      ->capture_default_str()->check(CLI::IsMember({"anchored", "exhaustive"}));
  sub->add_option("--skip-short", a.skip_short)->capture_default_str();
  sub->add_option("--min-sentence-bytes", a.min_sentence_bytes)->capture_default_str();
  sub->add_option("--trim-edges", a.trim_edges)->capture_default_str();
}

int run_audit_strings(Run& run, const AuditStringsArgs& a) {
  const auto archive = manifest_for(a.archive, a.archive_format);
  const auto corpus = manifest_for(a.corpus, a.corpus_format);
  run.add_manifest(archive);
  run.add_manifest(corpus);
  ScanCounters archive_counters;
  std::vector<ShardError> archive_errors;
  auto docs = load_documents(archive, &archive_counters, &archive_errors);
  SearchOptions opts;
  opts.strategy = a.strategy == "exhaustive" ? SearchOptions::Strategy::kExhaustive
                                             : SearchOptions::Strategy::kAnchored;
  opts.skip_short_sentences = a.skip_short;
  opts.min_sentence_bytes = a.min_sentence_bytes;
  opts.trim_edges = a.trim_edges;
  opts.workers = run.common->workers;
  auto report = audit_documents(docs, corpus, a.tau, opts);

  std::vector<std::string> lines;
  std::size_t seen = 0;
  for (const auto& m : report.audits) {
    lines.push_back(to_jsonl(m));
    if (m.label == AuditLabel::kSeen) ++seen;
  }
  const std::size_t n = report.audits.size();
  const double frac = n ? static_cast<double>(seen) / static_cast<double>(n) : 0.0;
  ordered_json summary;
  summary["documents"] = n;
  summary["seen"] = seen;
  summary["unseen"] = n - seen;
  summary["seen_fraction"] = frac;
  summary["tau"] = a.tau;
  summary["corpus_tries"] = report.counters.tries;
  summary["corpus_excepts"] = report.counters.excepts;
  summary["archive_excepts"] = archive_counters.excepts;
  auto errors = ordered_json::array();
  for (const auto& e : report.shard_errors) errors.push_back({{"path", e.path.string()}, {"message", e.message}});
  for (const auto& e : archive_errors) errors.push_back({{"path", e.path.string()}, {"message", e.message}});
  summary["shard_errors"] = errors;
  const std::string text = "SEEN " + std::to_string(seen) + "/" + std::to_string(n) + " (" +
                           pct(frac) + ") at tau=" + std::to_string(a.tau) + "\n";
  run.write(lines, summary, text);
  std::cout << text;
  return kOk;
}

// ---------------------------------------------------------------------------
// audit-names

struct AuditNamesArgs {
  std::vector<std::string> archive, corpus;
  std::string archive_format = "auto", corpus_format = "auto";
  std::string ner = "heuristic";
  std::string names_file, exclusions;
  std::size_t max_names = 10000;
  std::uint64_t max_freq = 51, min_docs = 3;
  std::string freq_mode = "occurrences";
  std::uint64_t tau = 100;
  std::size_t snippet_cap = 5;
  bool word_boundaries = true;
};

void setup_audit_names(CLI::App* sub, AuditNamesArgs& a) {
  sub->add_option("--archive", a.archive, "Archive documents (name source)")->delimiter(',');
  sub->add_option("--corpus", a.corpus, "Training corpus shards")->required()->delimiter(',');
  sub->add_option("--archive-format", a.archive_format)->capture_default_str();
  sub->add_option("--corpus-format", a.corpus_format)->capture_default_str();
  sub->add_option("--ner", a.ner, "heuristic | http:<NAME>")->capture_default_str();
  sub->add_option("--names", a.names_file, "Audit these names (one per line) instead of extracting");
  sub->add_option("--exclusions", a.exclusions, "Names to drop (one per line)");
  sub->add_option("--max-names", a.max_names)->capture_default_str();
  sub->add_option("--max-freq", a.max_freq, "Exclusive upper bound on archive frequency")->capture_default_str();
  sub->add_option("--min-docs", a.min_docs)->capture_default_str();
  sub->add_option("--freq-mode", a.freq_mode)
      ->capture_default_str()->check(CLI::IsMember({"occurrences", "documents"}));
  sub->add_option("--tau", a.tau, "SEEN_IN_O threshold on c(n)")
      ->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--snippet-cap", a.snippet_cap)->capture_default_str();
  sub->add_option("--word-boundaries", a.word_boundaries)->capture_default_str();
}

int run_audit_names(Run& run, const AuditNamesArgs& a) {
  const auto corpus = manifest_for(a.corpus, a.corpus_format);
  std::vector<std::string> names;
  ordered_json candidates = ordered_json::array();
  if (!a.names_file.empty()) {
    run.add_input(a.names_file);
    std::istringstream in(read_file(a.names_file));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      names.push_back(line);
    }
  } else {
    if (a.archive.empty()) throw InvalidArgument("--archive or --names is required");
    const auto archive = manifest_for(a.archive, a.archive_format);
    run.add_manifest(archive);
    auto docs = load_documents(archive);
    auto ner = make_ner_provider(a.ner);
    CandidateOptions copts;
    copts.max_names = a.max_names;
    copts.max_freq = a.max_freq;
    copts.min_docs = a.min_docs;
    copts.freq_mode = a.freq_mode == "documents" ? FrequencyMode::kDocuments : FrequencyMode::kOccurrences;
    for (const auto& c : extract_name_candidates(docs, *ner, copts)) {
      names.push_back(c.name);
      candidates.push_back({{"name", c.name}, {"archive_freq", c.corpus_freq_in_archive}, {"doc_freq", c.doc_freq}});
    }
  }
  run.add_manifest(corpus);
  if (names.empty()) throw InvalidArgument("no names to audit");
  AhoCorasick automaton(names);
  NameScanOptions sopts;
  sopts.tau_seen = a.tau;
  sopts.snippet_cap = a.snippet_cap;
  sopts.word_boundaries = a.word_boundaries;
  sopts.workers = run.common->workers;
  auto report = scan_names(automaton, corpus, sopts);
  auto attestations = std::move(report.attestations);
  if (!a.exclusions.empty()) {
    run.add_input(a.exclusions);
    attestations = apply_exclusion_list(std::move(attestations), load_exclusion_list(a.exclusions));
  }
  std::vector<std::string> lines;
  std::size_t seen = 0;
  for (const auto& at : attestations) {
    lines.push_back(to_jsonl(at));
    if (at.label == NameLabel::kSeenInCorpus) ++seen;
  }
  ordered_json summary;
  summary["names"] = attestations.size();
  summary["seen_in_corpus"] = seen;
  summary["tau"] = a.tau;
  summary["candidates"] = candidates;
  summary["corpus_tries"] = report.counters.tries;
  summary["corpus_excepts"] = report.counters.excepts;
  std::string text = "SEEN_IN_O " + std::to_string(seen) + "/" + std::to_string(attestations.size()) +
                     " names at tau=" + std::to_string(a.tau) + "\n";
  for (const auto& at : attestations)
    text += "  " + at.name + "\t" + std::to_string(at.count) + "\t" + std::string(to_string(at.label)) + "\n";
  run.write(lines, summary, text);
  std::cout << text;
  return kOk;
}

// ---------------------------------------------------------------------------
// extraction-prompt

struct ExtractionArgs {
  std::string character;
  std::vector<std::string> archive;
  std::string archive_format = "auto";
  std::vector<std::string> doc_ids;
};

void setup_extraction(CLI::App* sub, ExtractionArgs& a) {
  sub->add_option("--character", a.character, "Character name")->required();
  sub->add_option("--archive", a.archive, "Documents mentioning the character")->required()->delimiter(',');
  sub->add_option("--archive-format", a.archive_format)->capture_default_str();
  sub->add_option("--doc-id", a.doc_ids, "Restrict to these documents, in this order")->delimiter(',');
}

int run_extraction(Run& run, const ExtractionArgs& a) {
  const auto archive = manifest_for(a.archive, a.archive_format);
  run.add_manifest(archive);
  auto all = load_documents(archive);
  std::vector<Document> docs;
  if (a.doc_ids.empty()) {
    docs = std::move(all);
  } else {
    for (const auto& id : a.doc_ids) {
      auto it = std::find_if(all.begin(), all.end(), [&](const Document& d) { return d.doc_id == id; });
      if (it == all.end()) throw MissingInput("document " + id);
      docs.push_back(*it);
    }
  }
  std::vector<std::string> warnings;
  const std::string prompt = render_extraction_prompt(a.character, docs, &warnings);

  ordered_json sidecar;
  sidecar["character"] = a.character;
  auto arr = ordered_json::array();
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    ordered_json d;
    d["fence"] = "D" + std::to_string(i + 1);
    d["doc_id"] = docs[i].doc_id;
    d["title"] = docs[i].title;
    d["author"] = docs[i].author;
    d["collection_title"] = docs[i].collection_title;
    d["pub_place"] = docs[i].pub_place;
    d["pub_year"] = docs[i].pub_year ? ordered_json(*docs[i].pub_year) : ordered_json(nullptr);
    lines.push_back(d.dump());
    arr.push_back(std::move(d));
  }
  sidecar["documents"] = arr;
  fs::create_directories(run.common->out);
  {
    std::ofstream out(fs::path(run.common->out) / "docs.json", std::ios::binary | std::ios::trunc);
    out << sidecar.dump(2) << '\n';
  }
  ordered_json summary;
  summary["character"] = a.character;
  summary["documents"] = docs.size();
  summary["prompt_sha256"] = sha256_hex(prompt);
  summary["warnings"] = warnings;
  run.write(lines, summary, prompt);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "extraction prompt for " << a.character << " over " << docs.size() << " documents\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// make-cloze

struct ClozeArgs {
  std::vector<std::string> timelines;
  std::string mode = "full";
  std::size_t k = 1;
  std::size_t position = 0;
  std::string docs_json;
  bool sort = false;
};

void setup_cloze(CLI::App* sub, ClozeArgs& a) {
  sub->add_option("--timeline", a.timelines, "Timeline CSV files")->required()->delimiter(',');
  sub->add_option("--mode", a.mode)->capture_default_str()->check(CLI::IsMember({"full", "partial", "ngram"}));
  sub->add_option("--k", a.k, "Window size for ngram mode")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--position", a.position, "Only this 1-based event (0 = every event)")->capture_default_str();
  sub->add_option("--docs", a.docs_json, "docs.json written by extraction-prompt (source metadata)");
  sub->add_option("--sort", a.sort, "Sort events chronologically first")->capture_default_str();
}

std::map<std::string, SourceMetadata> load_sources(const std::string& path) {
  std::map<std::string, SourceMetadata> out;
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded() || !j.contains("documents")) throw SchemaError(path + ": not a docs.json sidecar");
  for (const auto& d : j.at("documents")) {
    SourceMetadata m;
    m.title = d.value("title", "");
    m.collection_title = d.value("collection_title", "");
    if (d.contains("pub_year") && d.at("pub_year").is_number_integer()) m.pub_year = d.at("pub_year").get<int>();
    out[d.at("fence").get<std::string>()] = m;
  }
  return out;
}

int run_cloze(Run& run, const ClozeArgs& a) {
  std::map<std::string, SourceMetadata> sources;
  if (!a.docs_json.empty()) {
    run.add_input(a.docs_json);
    sources = load_sources(a.docs_json);
  }
  std::vector<std::string> lines;
  std::size_t instances = 0;
  std::vector<std::string> warnings;
  for (const auto& path : a.timelines) {
    run.add_input(path);
    Timeline t = read_timeline_csv(path, &warnings);
    if (a.sort) t = sort_events(std::move(t));
    const std::size_t n = t.events.size();
    if (a.position > n) throw InvalidArgument(path + ": --position beyond the timeline");
    std::vector<ClozeInstance> made;
    for (std::size_t p = 1; p <= n; ++p) {
      if (a.position != 0 && p != a.position) continue;
      if (a.mode == "full") {
        made.push_back(mask_full(t, p));
      } else if (a.mode == "partial") {
        for (auto& c : partial_sweep(t, p)) made.push_back(std::move(c));
      } else if (p + a.k - 1 <= n) {
        made.push_back(mask_ngram(t, p, a.k));
      }
    }
    for (auto& c : made) {
      const auto& ev = t.events[c.spec.position - 1];
      const std::string fence = ev.sources.empty() ? "D1" : ev.sources.front();
      if (auto it = sources.find(fence); it != sources.end()) c.source = it->second;
      lines.push_back(to_json(c).dump());
      ++instances;
    }
  }
  ordered_json summary;
  summary["timelines"] = a.timelines.size();
  summary["instances"] = instances;
  summary["mode"] = a.mode;
  summary["warnings"] = warnings;
  const std::string text = std::to_string(instances) + " " + a.mode + " cloze instances from " +
                           std::to_string(a.timelines.size()) + " timelines\n";
  run.write(lines, summary, text);
  std::cout << text;
  return kOk;
}

// ---------------------------------------------------------------------------
// run-eval

struct EvalArgs {
  std::string instances;
  std::vector<std::string> generators{"mock:echo"};
  std::vector<std::string> templates{"base"};
  std::vector<std::string> hints{"off"};
  std::string embedder = "mock:bow";
  double epsilon = 73.13;
  int max_new_tokens = 128;
  std::string cache_dir;
};

void setup_eval(CLI::App* sub, EvalArgs& a) {
  sub->add_option("--instances", a.instances, "make-cloze.jsonl")->required();
  sub->add_option("--generator", a.generators, "Generation provider ids")->delimiter(',')->capture_default_str();
  sub->add_option("--template", a.templates, "Prompt templates")->delimiter(',')->capture_default_str()
      ->check(CLI::IsMember({"base", "confabulation", "null_shot", "eccentric", "llm_discussion",
                             "halueval", "human_hallucination"}));
  sub->add_option("--hint", a.hints, "Event-type hint settings (on/off)")->delimiter(',')->capture_default_str()
      ->check(CLI::IsMember({"on", "off"}));
  sub->add_option("--embedder", a.embedder)->capture_default_str();
  sub->add_option("--epsilon", a.epsilon, "Similarity threshold on the 0-100 scale")->capture_default_str();
  sub->add_option("--max-new-tokens", a.max_new_tokens)->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--cache-dir", a.cache_dir, "Provider response cache");
}

int run_eval(Run& run, const EvalArgs& a) {
  run.add_input(a.instances);
  std::vector<ClozeInstance> instances;
  for (const auto& j : read_jsonl(a.instances)) instances.push_back(cloze_from_json(j));
  if (instances.empty()) throw InvalidArgument(a.instances + ": no instances");
  auto embedder = make_embedding_provider(a.embedder, cache_path(a.cache_dir));

  std::vector<std::string> lines;
  std::vector<GridCell> cells;
  ordered_json breakdowns = ordered_json::array();
  std::string breakdown_text;
  for (const auto& gid : a.generators) {
    auto generator = make_generation_provider(gid, cache_path(a.cache_dir));
    for (const auto& tname : a.templates) {
      const TemplateId tid = template_id_from_string(tname);
      for (const auto& hname : a.hints) {
        const bool hint = hname == "on";
        std::vector<std::string> outputs(instances.size());
        parallel_for(instances.size(), run.common->workers, [&](std::size_t i) {
          const auto prompt = render_cloze_prompt(instances[i], tid, hint);
          GenerationRequest req;
          req.system = prompt.system;
          req.user = prompt.user;
          req.max_new_tokens = a.max_new_tokens * static_cast<int>(instances[i].gold.size());
          outputs[i] = generate(*generator, req).text;
        });
        std::vector<Prediction> preds;
        std::vector<std::string> golds;
        std::vector<InstanceMetadata> meta;
        for (std::size_t i = 0; i < instances.size(); ++i) {
          const auto& inst = instances[i];
          const auto parsed = parse_model_output(outputs[i], inst.gold.size());
          for (std::size_t s = 0; s < inst.gold.size(); ++s) {
            Prediction p;
            p.instance_id = inst.gold.size() > 1 ? inst.id() + "#" + std::to_string(s + 1) : inst.id();
            p.unparseable = parsed.unparseable;
            p.text = s < parsed.lines.size() ? parsed.lines[s] : "";
            preds.push_back(std::move(p));
            golds.push_back(inst.gold[s]);
            InstanceMetadata m;
            m.event_type = inst.masked_types[s];
            m.event_word_count = word_count(inst.gold[s]);
            m.timeline_length = inst.lines.size();
            m.position = position_bucket(inst.masked_lines[s] + 1, inst.lines.size());
            meta.push_back(m);
          }
        }
        auto scored = score_predictions(preds, golds, *embedder, a.epsilon);
        for (const auto& s : scored) {
          auto j = to_json(s);
          j["model"] = gid;
          j["template"] = tname;
          j["hint"] = hint;
          lines.push_back(j.dump());
        }
        GridCell cell{gid, tid, hint, scored.size(), accuracy(scored)};
        cells.push_back(cell);
        auto b = breakdown_report(scored, meta);
        auto bj = to_json(cell);
        bj["breakdown"] = to_json(b);
        breakdowns.push_back(std::move(bj));
        breakdown_text += "\n[" + gid + " / " + tname + " / hint " + hname + "]\n" + render_breakdown_text(b);
      }
    }
  }
  ordered_json summary;
  summary["epsilon"] = a.epsilon;
  summary["instances"] = instances.size();
  summary["cells"] = breakdowns;
  const std::string grid = render_accuracy_grid(cells);
  run.write(lines, summary, grid + breakdown_text);
  std::cout << grid;
  return kOk;
}

// ---------------------------------------------------------------------------
// tune-threshold

struct TuneArgs {
  std::string scores;
  std::string score_field = "similarity";
  std::string label_field = "label";
};

void setup_tune(CLI::App* sub, TuneArgs& a) {
  sub->add_option("--scores", a.scores, "JSONL validation set with a score and a 0/1 label")->required();
  sub->add_option("--score-field", a.score_field)->capture_default_str();
  sub->add_option("--label-field", a.label_field)->capture_default_str();
}

int run_tune(Run& run, const TuneArgs& a) {
  run.add_input(a.scores);
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& j : read_jsonl(a.scores)) {
    if (!j.contains(a.score_field) || !j.at(a.score_field).is_number())
      throw SchemaError("validation record without numeric '" + a.score_field + "'");
    if (!j.contains(a.label_field)) throw SchemaError("validation record without '" + a.label_field + "'");
    const auto& l = j.at(a.label_field);
    int label;
    if (l.is_boolean()) label = l.get<bool>() ? 1 : 0;
    else if (l.is_number_integer()) label = l.get<int>();
    else if (l.is_string() && (l == "similar" || l == "different")) label = l == "similar" ? 1 : 0;
    else throw SchemaError("label must be 0/1, a boolean, or similar/different");
    scores.push_back(j.at(a.score_field).get<double>());
    labels.push_back(label);
  }
  const auto t = tune_threshold(scores, labels);
  std::vector<std::string> lines;
  for (const auto& [c, m] : t.sweep) lines.push_back(ordered_json{{"candidate", c}, {"macro_f1", m}}.dump());
  ordered_json summary;
  summary["n"] = scores.size();
  summary["epsilon_star"] = t.epsilon_star;
  summary["macro_f1"] = t.macro_f1;
  summary["candidates"] = t.sweep.size();
  const std::string text = "epsilon* = " + num("%.4f", t.epsilon_star) + "  macro-F1 = " +
                           num("%.4f", t.macro_f1) + "  (n=" + std::to_string(scores.size()) + ")\n";
  run.write(lines, summary, text);
  std::cout << text;
  return kOk;
}

// ---------------------------------------------------------------------------
// probe

struct ProbeArgs {
  std::vector<std::string> archive;
  std::string archive_format = "auto";
  std::string audit;
  std::string generator = "mock:oracle";
  std::size_t per_class = 500;
  std::size_t context = 20, window = 5, windows = 5;
  int max_new_tokens = 256;
  std::string cache_dir;
};

void setup_probe(CLI::App* sub, ProbeArgs& a) {
  sub->add_option("--archive", a.archive, "Archive documents")->required()->delimiter(',');
  sub->add_option("--archive-format", a.archive_format)->capture_default_str();
  sub->add_option("--audit", a.audit, "audit-strings.jsonl with SEEN/UNSEEN labels")->required();
  sub->add_option("--generator", a.generator, "mock:oracle | mock:echo | mock:fixed:<text> | http:<NAME>")
      ->capture_default_str();
  sub->add_option("--per-class", a.per_class)->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--context", a.context)->capture_default_str();
  sub->add_option("--window", a.window)->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--windows", a.windows)->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--max-new-tokens", a.max_new_tokens)->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--cache-dir", a.cache_dir, "Provider response cache");
}

int run_probe_cmd(Run& run, const ProbeArgs& a) {
  const auto archive = manifest_for(a.archive, a.archive_format);
  run.add_manifest(archive);
  run.add_input(a.audit);
  std::map<std::string, AuditLabel> labels;
  for (const auto& j : read_jsonl(a.audit)) {
    try {
      labels[j.at("doc_id").get<std::string>()] = audit_label_from_string(j.at("label").get<std::string>());
    } catch (const json::exception& e) {
      throw SchemaError(a.audit + ": " + e.what());
    }
  }
  std::vector<ProbeDocument> docs;
  for (auto& d : load_documents(archive)) {
    auto it = labels.find(d.doc_id);
    if (it == labels.end()) continue;
    docs.push_back({d.doc_id, it->second, std::move(d.sentences)});
  }
  auto sample = sample_probe_set(docs, a.per_class, derive(run.common->seed, kProbeSample));
  std::unique_ptr<GenerationProvider> generator;
  if (a.generator == "mock:oracle") {
    std::vector<std::vector<std::string>> texts;
    for (const auto& d : sample) texts.push_back(d.sentences);
    generator = std::make_unique<ContinuationOracle>(std::move(texts), a.window);
  } else {
    generator = make_generation_provider(a.generator, cache_path(a.cache_dir));
  }
  ProbeOptions opts;
  opts.context = a.context;
  opts.window = a.window;
  opts.window_count = a.windows;
  opts.max_new_tokens = a.max_new_tokens;

  std::vector<ProbeReport> parts(sample.size());
  parallel_for(sample.size(), run.common->workers, [&](std::size_t i) {
    parts[i] = run_probe(std::span<const ProbeDocument>(&sample[i], 1), *generator, opts);
  });
  ProbeReport report;
  for (auto& p : parts) {
    for (auto& r : p.results) report.results.push_back(std::move(r));
    for (auto& s : p.skipped) report.skipped.push_back(std::move(s));
  }
  std::vector<std::string> lines;
  std::map<AuditLabel, std::vector<double>> by_label;
  for (const auto& r : report.results) {
    lines.push_back(to_json(r).dump());
    by_label[r.label].push_back(r.mean_sim);
  }
  ordered_json summary;
  summary["sampled"] = sample.size();
  summary["probed"] = report.results.size();
  auto skipped = ordered_json::array();
  for (const auto& s : report.skipped) skipped.push_back({{"doc_id", s.doc_id}, {"reason", s.reason}});
  summary["skipped"] = skipped;
  std::string text = "probed " + std::to_string(report.results.size()) + " documents (" +
                     std::to_string(report.skipped.size()) + " skipped)\n";
  for (auto label : {AuditLabel::kSeen, AuditLabel::kUnseen}) {
    const auto& v = by_label[label];
    const std::string name(to_string(label));
    summary["n_" + name] = v.size();
    if (!v.empty()) {
      summary["mean_sim_" + name] = mean(v);
      text += "  " + name + ": n=" + std::to_string(v.size()) + " mean_sim=" + num("%.4f", mean(v)) + "\n";
    }
  }
  run.write(lines, summary, text);
  std::cout << text;
  return kOk;
}

// ---------------------------------------------------------------------------
// stats-report

struct StatsArgs {
  std::string probe;
  std::string eval_report;
  std::string audited;
  std::vector<std::string> comparators;
  std::string paired_mode = "pair";
  std::size_t permutations = 10000;
  std::size_t bootstrap = 10000;
  double level = 0.95;
};

void setup_stats(CLI::App* sub, StatsArgs& a) {
  sub->add_option("--probe", a.probe, "probe.jsonl");
  sub->add_option("--eval-report", a.eval_report, "run-eval.report.json for prompt-level tests");
  sub->add_option("--audited", a.audited, "Model compared against --comparator");
  sub->add_option("--comparator", a.comparators, "Comparison models")->delimiter(',');
  sub->add_option("--paired-mode", a.paired_mode)
      ->capture_default_str()->check(CLI::IsMember({"pair", "grp-mean", "pooled"}));
  sub->add_option("--permutations", a.permutations)->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--bootstrap", a.bootstrap)->capture_default_str()->check(CLI::Range(100, 100000000));
  sub->add_option("--level", a.level)->capture_default_str()->check(CLI::Range(0.5, 0.9999));
}

std::string test_row(const TestResult& t, double holm) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "  %-22s %12.4f  %-17s p=%.3g  p_holm=%.3g%s\n", t.test.c_str(),
                t.statistic, std::string(to_string(t.sidedness)).c_str(), t.p_value, holm,
                t.exact ? "  (exact)" : "");
  return buf;
}

std::string interval(const IntervalEstimate& ci) {
  return "[" + num("%.4f", ci.lower) + ", " + num("%.4f", ci.upper) + "] (" +
         num("%.0f", ci.level * 100) + "% " + std::string(to_string(ci.method)) + ")";
}

int run_stats(Run& run, const StatsArgs& a) {
  if (a.probe.empty() && a.eval_report.empty())
    throw InvalidArgument("--probe and/or --eval-report is required");
  const std::uint64_t seed = derive(run.common->seed, kStatsResampling);
  std::vector<std::string> lines;
  ordered_json summary;
  std::string text;

  if (!a.probe.empty()) {
    run.add_input(a.probe);
    std::vector<ProbeResult> results;
    for (const auto& j : read_jsonl(a.probe)) results.push_back(probe_result_from_json(j));
    std::vector<double> seen, unseen;
    std::size_t positions = 0;
    for (const auto& r : results) {
      (r.label == AuditLabel::kSeen ? seen : unseen).push_back(r.mean_sim);
      positions = std::max(positions, r.position_sims.size());
    }
    if (seen.size() < 2 || unseen.size() < 2)
      throw InvalidArgument("probe results need at least 2 SEEN and 2 UNSEEN documents");
    ComparisonOptions opts;
    opts.level = a.level;
    opts.permutation_iterations = a.permutations;
    opts.bootstrap_iterations = a.bootstrap;
    opts.seed = seed;
    const auto agg = compare_samples("mean_sim", seen, unseen, opts);
    lines.push_back(to_json(agg).dump());
    ordered_json probe;
    probe["aggregate"] = to_json(agg);
    probe["holm_family"] = "aggregate: welch_t, mann_whitney_u, ks_right, permutation_mean";

    text += "SEEN vs UNSEEN mean continuation similarity\n";
    text += "  SEEN " + num("%.4f", agg.mean_a) + " (n=" + std::to_string(agg.n1) + ")  UNSEEN " +
            num("%.4f", agg.mean_b) + " (n=" + std::to_string(agg.n2) + ")\n";
    text += "  mean difference " + num("%+.4f", agg.mean_difference) + " " + interval(agg.mean_difference_ci) + "\n";
    text += "  median difference " + num("%+.4f", agg.median_difference) + " " + interval(agg.median_difference_ci) + "\n";
    text += "  Hedges' g " + num("%.3f", agg.hedges.value) + "  Cliff's delta " + num("%.3f", agg.cliffs.value) +
            " (AUC " + num("%.3f", *agg.cliffs.auc) + ")\n";
    for (const auto& w : {agg.mean_difference_ci.warning, agg.median_difference_ci.warning})
      if (w) text += "  warning: " + *w + "\n";
    text += "  tests (Holm over the four tests below)\n";
    for (std::size_t i = 0; i < agg.tests.size(); ++i) text += test_row(agg.tests[i], agg.holm_p_values[i]);

    // Position-wise: each test family is Holm-adjusted across positions.
    std::vector<TestResult> welch, mwu, ks;
    auto rows = ordered_json::array();
    text += "\nposition-wise (Holm across positions within each test)\n";
    text += "  pos   mean_seen  mean_unseen   p_welch(holm)   p_mwu(holm)   p_ks(holm)\n";
    std::vector<std::pair<double, double>> means;
    for (std::size_t p = 0; p < positions; ++p) {
      std::vector<double> s, u;
      for (const auto& r : results) {
        if (p >= r.position_sims.size()) continue;
        (r.label == AuditLabel::kSeen ? s : u).push_back(r.position_sims[p]);
      }
      welch.push_back(welch_t(s, u, Sidedness::kGreater));
      mwu.push_back(mann_whitney_u(s, u, Sidedness::kGreater));
      ks.push_back(ks_test_right(s, u));
      means.emplace_back(mean(s), mean(u));
    }
    auto holm_of = [](const std::vector<TestResult>& ts) {
      std::vector<double> ps;
      for (const auto& t : ts) ps.push_back(t.p_value);
      return holm_adjust(ps);
    };
    const auto hw = holm_of(welch), hm = holm_of(mwu), hk = holm_of(ks);
    for (std::size_t p = 0; p < positions; ++p) {
      ordered_json row;
      row["position"] = p + 1;
      row["mean_seen"] = means[p].first;
      row["mean_unseen"] = means[p].second;
      auto tw = to_json(welch[p]);
      tw["p_holm"] = hw[p];
      auto tm = to_json(mwu[p]);
      tm["p_holm"] = hm[p];
      auto tk = to_json(ks[p]);
      tk["p_holm"] = hk[p];
      row["tests"] = ordered_json::array({tw, tm, tk});
      lines.push_back(row.dump());
      rows.push_back(row);
      char buf[200];
      std::snprintf(buf, sizeof buf, "  p%-3zu %10.4f  %11.4f   %.3g(%.3g)   %.3g(%.3g)   %.3g(%.3g)\n", p + 1,
                    means[p].first, means[p].second, welch[p].p_value, hw[p], mwu[p].p_value, hm[p],
                    ks[p].p_value, hk[p]);
      text += buf;
    }
    probe["positions"] = rows;
    summary["probe"] = probe;
  }

  if (!a.eval_report.empty()) {
    run.add_input(a.eval_report);
    json rep = json::parse(read_file(a.eval_report), nullptr, false);
    if (rep.is_discarded() || !rep.contains("summary") || !rep["summary"].contains("cells"))
      throw SchemaError(a.eval_report + ": not a run-eval report");
    // accuracy[model][(template, hint)]
    std::map<std::string, std::map<std::pair<std::string, bool>, double>> acc;
    std::vector<std::string> models;
    for (const auto& c : rep["summary"]["cells"]) {
      const auto model = c.at("model").get<std::string>();
      if (!acc.count(model)) models.push_back(model);
      acc[model][{c.at("template").get<std::string>(), c.at("hint").get<bool>()}] =
          c.at("accuracy").get<double>() * 100.0;
    }
    ordered_json eval;
    if (models.size() >= 2) {
      std::vector<std::pair<std::string, bool>> conds;
      for (const auto& [cond, v] : acc[models.front()]) {
        bool everywhere = std::all_of(models.begin(), models.end(),
                                      [&](const std::string& m) { return acc[m].count(cond) > 0; });
        if (everywhere) conds.push_back(cond);
      }
      if (conds.size() >= 2) {
        std::vector<std::vector<double>> rankings;
        for (const auto& m : models) {
          std::vector<double> row;
          for (const auto& c : conds) row.push_back(acc[m][c]);
          rankings.push_back(row);
        }
        const double w = kendall_w(rankings);
        eval["kendall_w"] = w;
        text += "\nprompt-ordering concordance across " + std::to_string(models.size()) +
                " models: Kendall's W = " + num("%.3f", w) + "\n";
      }
    }
    if (!a.audited.empty()) {
      if (!acc.count(a.audited)) throw InvalidArgument("no cells for model " + a.audited);
      if (a.comparators.empty()) throw InvalidArgument("--comparator is required with --audited");
      std::vector<double> x, y;
      const auto& base = acc[a.audited];
      for (const auto& m : a.comparators)
        if (!acc.count(m)) throw InvalidArgument("no cells for model " + m);
      for (const auto& [cond, v] : base) {
        std::vector<double> comp;
        for (const auto& m : a.comparators) {
          auto it = acc[m].find(cond);
          if (it != acc[m].end()) comp.push_back(it->second);
        }
        if (comp.size() != a.comparators.size()) continue;
        if (a.paired_mode == "pooled") {
          for (double c : comp) {
            x.push_back(v);
            y.push_back(c);
          }
        } else {
          x.push_back(v);
          y.push_back(mean(comp));
        }
      }
      PairedOptions popts;
      popts.level = a.level;
      popts.bootstrap_iterations = a.bootstrap;
      popts.seed = seed;
      const auto suite = paired_suite(x, y, popts);
      auto sj = to_json(suite);
      sj["audited"] = a.audited;
      sj["comparators"] = a.comparators;
      sj["mode"] = a.paired_mode;
      lines.push_back(sj.dump());
      eval["paired"] = sj;
      std::string comps;
      for (const auto& c : a.comparators) comps += (comps.empty() ? "" : "+") + c;
      text += "\naudited    comparator    mode    n   mean_delta   CI   p_t   p_W   sign_p / +frac\n";
      char buf[400];
      std::snprintf(buf, sizeof buf, "%s  %s  %s  %zu  %+.2f  [%.2f, %.2f]  %.3f  %.3f  %.3f / %.2f\n",
                    a.audited.c_str(), comps.c_str(), a.paired_mode.c_str(), suite.n,
                    suite.mean_difference, suite.mean_difference_ci.lower,
                    suite.mean_difference_ci.upper, suite.paired_t.p_value, suite.wilcoxon.p_value,
                    suite.sign.p_value, suite.positive_fraction);
      text += buf;
    }
    summary["eval"] = eval;
  }
  run.write(lines, summary, text);
  std::cout << text;
  return kOk;
}

// ---------------------------------------------------------------------------

int main_impl(int argc, char** argv) {
  CLI::App app{"lacuna: archival contamination audits and narrative cloze evaluation"};
  app.set_version_flag("--version", std::string(LACUNA_VERSION));
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  Common common;
  AuditStringsArgs as;
  AuditNamesArgs an;
  ExtractionArgs ex;
  ClozeArgs cz;
  EvalArgs ev;
  TuneArgs tu;
  ProbeArgs pr;
  StatsArgs st;

  struct Entry {
    CLI::App* app;
    std::function<int(Run&)> fn;
  };
  std::vector<Entry> entries;
  auto add = [&](const char* name, const char* help, auto setup, auto& args, auto fn) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, common);
    setup(sub, args);
    entries.push_back({sub, [fn, &args](Run& r) { return fn(r, args); }});
  };
  add("audit-strings", "Sentence-level exact-match audit of archive documents", setup_audit_strings, as,
      run_audit_strings);
  add("audit-names", "Person-name attestation counts in the training corpus", setup_audit_names, an,
      run_audit_names);
  add("extraction-prompt", "Render the timeline extraction prompt for a character", setup_extraction, ex,
      run_extraction);
  add("make-cloze", "Build cloze instances from timeline CSVs", setup_cloze, cz, run_cloze);
  add("run-eval", "Generate, parse and score cloze predictions", setup_eval, ev, run_eval);
  add("tune-threshold", "Pick the similarity threshold maximising macro-F1", setup_tune, tu, run_tune);
  add("probe", "Continuation probe over SEEN and UNSEEN documents", setup_probe, pr, run_probe_cmd);
  add("stats-report", "Significance tests and effect sizes", setup_stats, st, run_stats);

  std::vector<std::string> args(argv, argv + argc);
  std::size_t sub_index = 0;
  CLI::App* chosen = nullptr;
  for (std::size_t i = 1; i < args.size() && !chosen; ++i) {
    for (auto& e : entries) {
      if (e.app->get_name() == args[i]) {
        chosen = e.app;
        sub_index = i;
        break;
      }
    }
  }
  if (chosen) {
    std::optional<std::string> config_path;
    for (std::size_t i = sub_index + 1; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
      else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (config_path) {
      const auto config = read_config(*config_path);
      args = merge_config(args, sub_index, config, [&](const std::string& key) {
        return key != "config" && chosen->get_option_no_throw("--" + key) != nullptr;
      });
    }
  }
  std::vector<const char*> cargs;
  for (const auto& s : args) cargs.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  for (auto& e : entries) {
    if (!e.app->parsed()) continue;
    Run run{e.app->get_name(), e.app, &common};
    if (!common.config.empty()) run.add_input(common.config);
    return e.fn(run);
  }
  return kUsage;
}

}  // namespace
}  // namespace lacuna::cli

int main(int argc, char** argv) {
  using namespace lacuna;
  try {
    return cli::main_impl(argc, argv);
  } catch (const MissingInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kMissingInput;
  } catch (const ProviderError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kProviderFailure;
  } catch (const InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return cli::kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kFailure;
  }
}
