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

#include <sys/wait.h>

#include <cstdio>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

using lacuna::testing::read_text;
using lacuna::testing::TempDir;
using lacuna::testing::write_text;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string output;
};

Run lacuna_cli(const std::string& args) {
  const std::string cmd = std::string(LACUNA_CLI) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::vector<json> read_jsonl(const std::filesystem::path& p) {
  std::vector<json> out;
  std::istringstream in(read_text(p));
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

const std::string kTimelineCsv =
    "character,start_date,date_precision,event_summary,event_type,evidence,confidence,sources,notes\n"
    "Ann Lee,1861,year,Ann Lee opened a school for freed children.,role,\"e\",high,D1,\n"
    "Ann Lee,1863-05,month,She wrote to the Freedmen's Bureau about supplies.,agentive,e,high,D1,\n"
    "Ann Lee,1865-04-02,day,She nursed wounded soldiers in Richmond.,agentive,e,medium,D2,\n"
    "Ann Lee,,unknown,Her students remembered her kindness.,observational,e,low,D2,\n";

}  // namespace

TEST_CASE("audit-strings labels exactly the planted documents, reproducibly") {
  TempDir tmp;
  auto f = lacuna::testing::make_planted_fixture(tmp.path());
  const std::string base = "audit-strings --archive " + f.archive.string() + " --corpus " +
                           f.corpus_dir.string() + " --seed 3 --out ";
  auto r1 = lacuna_cli(base + (tmp / "o1").string() + " --workers 2");
  REQUIRE(r1.code == 0);
  auto r2 = lacuna_cli(base + (tmp / "o2").string());
  REQUIRE(r2.code == 0);

  auto rows = read_jsonl(tmp / "o1/audit-strings.jsonl");
  REQUIRE(rows.size() == 20);
  std::set<std::string> seen;
  for (const auto& row : rows)
    if (row["label"] == "SEEN") seen.insert(row["doc_id"]);
  CHECK(seen == f.planted);
  CHECK(read_text(tmp / "o1/audit-strings.jsonl") == read_text(tmp / "o2/audit-strings.jsonl"));
  CHECK(read_text(tmp / "o1/audit-strings.report.json") == read_text(tmp / "o2/audit-strings.report.json"));
  CHECK(read_text(tmp / "o1/audit-strings.txt").find("SEEN 5/20") != std::string::npos);

  auto report = json::parse(read_text(tmp / "o1/audit-strings.report.json"));
  CHECK(report["command"] == "audit-strings");
  CHECK(report["seed"] == 3);
  CHECK(report["config_hash"].get<std::string>().size() == 64);
  CHECK(report["inputs"].size() == 3);

  auto ex = lacuna_cli(base + (tmp / "o3").string() + " --strategy exhaustive --workers 1");
  REQUIRE(ex.code == 0);
  CHECK(read_text(tmp / "o1/audit-strings.jsonl") == read_text(tmp / "o3/audit-strings.jsonl"));
}

TEST_CASE("exit codes") {
  TempDir tmp;
  CHECK(lacuna_cli("audit-strings --bogus").code == 2);
  CHECK(lacuna_cli("audit-strings --archive a.jsonl").code == 2);
  CHECK(lacuna_cli("nonsense-command").code == 2);
  CHECK(lacuna_cli("audit-strings --archive /nonexistent/a.jsonl --corpus /nonexistent/c --out " +
                   (tmp / "o").string())
            .code == 3);
  CHECK(lacuna_cli("tune-threshold --scores /nonexistent/s.jsonl --out " + (tmp / "o").string()).code == 3);
  CHECK(lacuna_cli("--version").code == 0);
}

TEST_CASE("config file supplies defaults; command line wins") {
  TempDir tmp;
  auto f = lacuna::testing::make_planted_fixture(tmp.path());
  write_text(tmp / "run.cfg", "# audit settings\ntau = 121\nstrategy=\"exhaustive\"\n");
  const std::string base = "audit-strings --archive " + f.archive.string() + " --corpus " +
                           f.corpus_dir.string() + " --config " + (tmp / "run.cfg").string();
  REQUIRE(lacuna_cli(base + " --out " + (tmp / "a").string()).code == 0);
  auto cfg = json::parse(read_text(tmp / "a/audit-strings.report.json"))["config"];
  CHECK(cfg["tau"] == 121);
  CHECK(cfg["strategy"] == "exhaustive");
  CHECK(read_text(tmp / "a/audit-strings.txt").find("SEEN 0/20") != std::string::npos);
  REQUIRE(lacuna_cli(base + " --tau 100 --out " + (tmp / "b").string()).code == 0);
  CHECK(json::parse(read_text(tmp / "b/audit-strings.report.json"))["config"]["tau"] == 100);
  write_text(tmp / "bad.cfg", "no equals sign here\n");
  CHECK(lacuna_cli("audit-strings --archive x --corpus y --config " + (tmp / "bad.cfg").string()).code != 0);
}

TEST_CASE("audit-names over the planted corpus") {
  TempDir tmp;
  auto f = lacuna::testing::make_planted_fixture(tmp.path());
  write_text(tmp / "names.txt", "Zorabel Quint\n# comment\n");
  std::string c;
  for (int i = 0; i < 100; ++i) c += lacuna::testing::jsonl_record("z" + std::to_string(i), "Met Zorabel Quint today.") + "\n";
  write_text(tmp / "names-corpus/a.jsonl", c);
  auto r = lacuna_cli("audit-names --names " + (tmp / "names.txt").string() + " --corpus " +
                      (tmp / "names-corpus").string() + " --out " + (tmp / "o").string());
  REQUIRE(r.code == 0);
  auto rows = read_jsonl(tmp / "o/audit-names.jsonl");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0]["count"] == 100);
  CHECK(rows[0]["label"] == "SEEN_IN_O");
}

TEST_CASE("extraction prompt, cloze, evaluation and threshold tuning") {
  TempDir tmp;
  write_text(tmp / "archive.jsonl",
             R"({"id":"a1","title":"School Report","collection_title":"Freedmen Papers","pub_year":1866,"text":"Ann Lee taught."})" "\n"
             R"({"id":"a2","title":"Hospital Notes","text":"Ann Lee nursed."})" "\n");
  auto ep = lacuna_cli("extraction-prompt --character \"Ann Lee\" --archive " + (tmp / "archive.jsonl").string() +
                       " --out " + (tmp / "x").string());
  REQUIRE(ep.code == 0);
  const auto prompt = read_text(tmp / "x/extraction-prompt.txt");
  CHECK(prompt.find("Character name: Ann Lee") != std::string::npos);
  CHECK(prompt.find("[[BEGIN DOC: D2]]") != std::string::npos);
  CHECK(std::filesystem::exists(tmp / "x/docs.json"));

  write_text(tmp / "t.csv", kTimelineCsv);
  auto mc = lacuna_cli("make-cloze --timeline " + (tmp / "t.csv").string() + " --docs " +
                       (tmp / "x/docs.json").string() + " --out " + (tmp / "c").string());
  REQUIRE(mc.code == 0);
  auto instances = read_jsonl(tmp / "c/make-cloze.jsonl");
  CHECK(instances.size() == 4);

  auto ev = lacuna_cli("run-eval --instances " + (tmp / "c/make-cloze.jsonl").string() +
                       " --generator mock:echo,mock:fixed:nothing --template base --hint off,on --out " +
                       (tmp / "e").string());
  REQUIRE(ev.code == 0);
  auto report = json::parse(read_text(tmp / "e/run-eval.report.json"));
  CHECK(report["summary"]["cells"].size() == 4);
  CHECK(read_jsonl(tmp / "e/run-eval.jsonl").size() == 16);
  CHECK(read_text(tmp / "e/run-eval.txt").find("mock:echo") != std::string::npos);

  // Events 3 and 4 cite a document without collection metadata.
  auto ns = lacuna_cli("run-eval --instances " + (tmp / "c/make-cloze.jsonl").string() +
                       " --template null_shot --out " + (tmp / "n").string());
  CHECK(ns.code == 2);
  REQUIRE(lacuna_cli("make-cloze --timeline " + (tmp / "t.csv").string() + " --position 2 --docs " +
                     (tmp / "x/docs.json").string() + " --out " + (tmp / "c2").string())
              .code == 0);
  auto ns2 = lacuna_cli("run-eval --instances " + (tmp / "c2/make-cloze.jsonl").string() +
                        " --template null_shot --out " + (tmp / "n2").string());
  CHECK(ns2.code == 0);

  std::string scores;
  const double s[] = {90, 80, 20, 10};
  const int y[] = {1, 1, 0, 0};
  for (int i = 0; i < 4; ++i) scores += json{{"similarity", s[i]}, {"label", y[i]}}.dump() + "\n";
  write_text(tmp / "scores.jsonl", scores);
  auto tt = lacuna_cli("tune-threshold --scores " + (tmp / "scores.jsonl").string() + " --out " + (tmp / "t").string());
  REQUIRE(tt.code == 0);
  auto tr = json::parse(read_text(tmp / "t/tune-threshold.report.json"));
  CHECK(tr["summary"]["epsilon_star"] == 50.0);
  CHECK(tr["summary"]["macro_f1"] == 1.0);
  write_text(tmp / "one.jsonl", R"({"similarity":1,"label":1})" "\n");
  CHECK(lacuna_cli("tune-threshold --scores " + (tmp / "one.jsonl").string() + " --out " + (tmp / "t2").string()).code == 1);
}

TEST_CASE("probe and stats-report") {
  TempDir tmp;
  lacuna::testing::Lexicon lex(17);
  std::string archive, audit;
  for (int d = 0; d < 8; ++d) {
    const std::string id = "p" + std::to_string(d);
    archive += lacuna::testing::jsonl_record(id, lacuna::testing::join(lex.sentences(46))) + "\n";
    audit += json{{"doc_id", id}, {"match_count", d < 4 ? 150 : 0}, {"label", d < 4 ? "SEEN" : "UNSEEN"}}.dump() + "\n";
  }
  write_text(tmp / "archive.jsonl", archive);
  write_text(tmp / "audit.jsonl", audit);
  const std::string args = "probe --archive " + (tmp / "archive.jsonl").string() + " --audit " +
                           (tmp / "audit.jsonl").string() + " --per-class 3 --seed 5 --out ";
  REQUIRE(lacuna_cli(args + (tmp / "p1").string()).code == 0);
  REQUIRE(lacuna_cli(args + (tmp / "p2").string()).code == 0);
  CHECK(read_text(tmp / "p1/probe.jsonl") == read_text(tmp / "p2/probe.jsonl"));
  auto rows = read_jsonl(tmp / "p1/probe.jsonl");
  REQUIRE(rows.size() == 6);
  for (const auto& r : rows)
    for (double s : r["position_sims"]) CHECK(std::abs(s - 1.0) < 1e-12);

  auto st = lacuna_cli("stats-report --probe " + (tmp / "p1/probe.jsonl").string() +
                       " --permutations 200 --bootstrap 200 --out " + (tmp / "s").string());
  CHECK(st.code == 1);  // identical samples: Welch is undefined
  CHECK(st.output.find("variance") != std::string::npos);
}
