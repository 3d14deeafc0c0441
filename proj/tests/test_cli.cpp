#include <doctest.h>

#include <cstdio>
#include <json.hpp>

#include "subqrag/domain.hpp"
#include "subqrag/quality.hpp"
#include "subqrag/report.hpp"
#include "support.hpp"

using namespace subqrag;
using namespace testsupport;
using nlohmann::json;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

CliResult run_cli(const std::string& args) {
  const std::string command = std::string(SUBQRAG_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult result;
  char buffer[4096];
  while (fgets(buffer, sizeof(buffer), pipe) != nullptr) result.output += buffer;
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string fixture_flags(const TempDir& dir) {
  return "--config " + (fixtures_dir() / "config.cfg").string() + " --mock-script " +
         (fixtures_dir() / "mock_script.jsonl").string() + " --cache-dir " +
         dir.file("cache").string() + " ";
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("decompose/judge/evaluate chain produces schema-valid files") {
  TempDir dir;
  const std::string base = fixture_flags(dir);

  auto decompose = run_cli(base + "decompose --questions " +
                           (fixtures_dir() / "questions.jsonl").string() + " --out " +
                           dir.file("subquestions.jsonl").string());
  CHECK(decompose.exit_code == 0);
  const auto subquestions = read_subquestions_jsonl(dir.file("subquestions.jsonl"));
  CHECK(subquestions.size() == 12);

  auto judge = run_cli(base + "judge --subquestions " + dir.file("subquestions.jsonl").string() +
                       " --answers " + (fixtures_dir() / "answers.jsonl").string() +
                       " --chunks " + (fixtures_dir() / "chunks.jsonl").string() + " --out " +
                       dir.file("judgments.jsonl").string());
  CHECK(judge.exit_code == 0);
  const auto judgments = read_judgments_jsonl(dir.file("judgments.jsonl"));
  CHECK(judgments.size() == 84);
  for (const auto& j : judgments) CHECK(j.covered == j.fragment.has_value());

  auto evaluate = run_cli(base + "evaluate --judgments " + dir.file("judgments.jsonl").string() +
                          " --subquestions " + dir.file("subquestions.jsonl").string() +
                          " --answers " + (fixtures_dir() / "answers.jsonl").string() +
                          " --out " + dir.file("report.json").string());
  CHECK(evaluate.exit_code == 0);
  CHECK(evaluate.output.find("Metric #1 (core)") != std::string::npos);

  auto rendered = run_cli("report --report " + dir.file("report.json").string());
  CHECK(rendered.exit_code == 0);
  CHECK(rendered.output.find("Metric #6") != std::string::npos);
}

TEST_CASE("rag-run writes answers whose system ids name the strategy") {
  TempDir dir;
  const std::string base = fixture_flags(dir);
  auto subq = run_cli(base + "decompose --questions " +
                      (fixtures_dir() / "questions.jsonl").string() + " --out " +
                      dir.file("subquestions.jsonl").string());
  REQUIRE(subq.exit_code == 0);

  auto rag = run_cli(base + "rag-run --strategy m2 --questions " +
                     (fixtures_dir() / "questions.jsonl").string() + " --subquestions " +
                     dir.file("subquestions.jsonl").string() + " --chunks " +
                     (fixtures_dir() / "chunks.jsonl").string() + " --out " +
                     dir.file("m2.jsonl").string());
  CHECK(rag.exit_code == 0);
  const auto answers = read_answers_jsonl(dir.file("m2.jsonl"));
  REQUIRE(answers.size() == 3);
  for (const auto& a : answers) CHECK(a.system_id == "m2");
}

TEST_CASE("compare assembles a win-rate matrix from per-method answer files") {
  TempDir dir;
  const std::string base = fixture_flags(dir);
  auto subq = run_cli(base + "decompose --questions " +
                      (fixtures_dir() / "questions.jsonl").string() + " --out " +
                      dir.file("subquestions.jsonl").string());
  REQUIRE(subq.exit_code == 0);
  std::filesystem::create_directories(dir.file("runs"));
  for (const std::string method : {"baseline", "m2"}) {
    auto rag = run_cli(base + "rag-run --strategy " + method + " --questions " +
                       (fixtures_dir() / "questions.jsonl").string() + " --subquestions " +
                       dir.file("subquestions.jsonl").string() + " --chunks " +
                       (fixtures_dir() / "chunks.jsonl").string() + " --out " +
                       (dir.file("runs") / (method + ".jsonl")).string());
    REQUIRE(rag.exit_code == 0);
  }
  auto compare = run_cli(base + "compare --answers-dir " + dir.file("runs").string() +
                         " --methods baseline,m2 --questions " +
                         (fixtures_dir() / "questions.jsonl").string() + " --out " +
                         dir.file("winrates.json").string());
  CHECK(compare.exit_code == 0);
  std::ifstream in(dir.file("winrates.json"));
  json body;
  in >> body;
  const auto matrix = report::win_rate_from_json(body);
  CHECK(matrix.methods == std::vector<std::string>{"baseline", "m2"});
  CHECK(*matrix.cells[1][0] == 100.0);  // the scripted judge prefers the m2 text
  CHECK(*matrix.cells[0][1] == 0.0);
}

TEST_CASE("compare can judge with the coverage-rating metric instead of the llm") {
  TempDir dir;
  const std::string base = fixture_flags(dir);
  auto subq = run_cli(base + "decompose --questions " +
                      (fixtures_dir() / "questions.jsonl").string() + " --out " +
                      dir.file("subquestions.jsonl").string());
  REQUIRE(subq.exit_code == 0);

  // Treat the two fixture systems as two "methods" by splitting answers.jsonl.
  std::filesystem::create_directories(dir.file("runs"));
  const auto answers = read_answers_jsonl(fixtures_dir() / "answers.jsonl");
  std::vector<LongFormAnswer> alpha, beta;
  for (const auto& a : answers) (a.system_id == "alpha" ? alpha : beta).push_back(a);
  write_answers_jsonl(dir.file("runs") / "baseline.jsonl", alpha);
  write_answers_jsonl(dir.file("runs") / "m1.jsonl", beta);

  auto compare = run_cli(base + "compare --answers-dir " + dir.file("runs").string() +
                         " --methods baseline,m1 --judge coverage-rating --subquestions " +
                         dir.file("subquestions.jsonl").string() + " --questions " +
                         (fixtures_dir() / "questions.jsonl").string() + " --out " +
                         dir.file("winrates.json").string());
  CHECK(compare.exit_code == 0);
  std::ifstream in(dir.file("winrates.json"));
  json body;
  in >> body;
  const auto matrix = report::win_rate_from_json(body);
  // Ratings under (1, 0.5, -1): the sides tie on two questions (splits) and
  // the first method wins the third decisively: (1 + 0.5 * 2) / 3.
  CHECK(*matrix.cells[0][1] == doctest::Approx(200.0 / 3.0).epsilon(1e-9));
  CHECK(*matrix.cells[1][0] == doctest::Approx(100.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("ingest-preferences, rate and grid-search close the quality loop") {
  TempDir dir;
  // Raw preference records: two kept, one non-why/how, one tie.
  std::string raw;
  raw += json{{"question", {{"id", "w1"}, {"full_text", "Why is rust red?"}}},
              {"answer_0", "iron oxide pigments look red"},
              {"answer_1", "it just is"},
              {"score_0", 1.0},
              {"score_1", -1.0}}
             .dump() +
         "\n";
  raw += json{{"question", {{"id", "w2"}, {"full_text", "How do magnets work?"}}},
              {"answer_0", "poles attract"},
              {"answer_1", "fields from aligned electron spins"},
              {"score_0", -0.5},
              {"score_1", 0.5}}
             .dump() +
         "\n";
  raw += json{{"question", {{"id", "w3"}, {"full_text", "When was steel invented?"}}},
              {"answer_0", "a"},
              {"answer_1", "b"},
              {"score_0", 1.0},
              {"score_1", 0.0}}
             .dump() +
         "\n";
  dir.write("raw.jsonl", raw);

  auto ingest = run_cli("ingest-preferences --format webgpt --in " + dir.file("raw.jsonl").string() +
                        " --out " + dir.file("pairs.jsonl").string());
  CHECK(ingest.exit_code == 0);
  const auto pairs = quality::read_pairs_jsonl(dir.file("pairs.jsonl"));
  CHECK(pairs.size() == 2);

  // Coverage vectors with a planted core-only signal matching the labels.
  std::string vectors;
  vectors += json{{"question_id", "w1"}, {"system_id", "a"}, {"c_core", 0.9},
                  {"c_background", 0.1}, {"c_follow_up", 0.0}}.dump() + "\n";
  vectors += json{{"question_id", "w1"}, {"system_id", "b"}, {"c_core", 0.2},
                  {"c_background", 0.1}, {"c_follow_up", 0.0}}.dump() + "\n";
  vectors += json{{"question_id", "w2"}, {"system_id", "a"}, {"c_core", 0.1},
                  {"c_background", 0.5}, {"c_follow_up", 0.5}}.dump() + "\n";
  vectors += json{{"question_id", "w2"}, {"system_id", "b"}, {"c_core", 0.8},
                  {"c_background", 0.5}, {"c_follow_up", 0.5}}.dump() + "\n";
  dir.write("vectors.jsonl", vectors);

  auto grid = run_cli("--seed 11 grid-search --pairs " + dir.file("pairs.jsonl").string() +
                      " --vectors " + dir.file("vectors.jsonl").string() +
                      " --validation-size 2 --out " + dir.file("weights.json").string());
  CHECK(grid.exit_code == 0);
  std::ifstream in(dir.file("weights.json"));
  json weights;
  in >> weights;
  CHECK(weights.at("validation_accuracy").get<double>() == 1.0);
}

TEST_CASE("rate emits a rating per answer") {
  TempDir dir;
  dir.write("subquestions.jsonl",
            json{{"id", "w1/sq1"}, {"parent_id", "w1"}, {"text", "Core?"}, {"qtype", "core"}}
                .dump() +
            "\n");
  dir.write("answers.jsonl",
            json{{"question_id", "w1"}, {"system_id", "a"}, {"text", "an answer"}}.dump() + "\n");
  dir.write("judgments.jsonl",
            json{{"subquestion_id", "w1/sq1"},
                 {"target_kind", "answer"},
                 {"target_id", "a"},
                 {"covered", true},
                 {"fragment", {{"start_word", 0}, {"end_word", 1}, {"quote", "an"}}}}
                .dump() +
            "\n");
  auto rate = run_cli("rate --subquestions " + dir.file("subquestions.jsonl").string() +
                      " --judgments " + dir.file("judgments.jsonl").string() + " --answers " +
                      dir.file("answers.jsonl").string() + " --weights 1,0.5,-1 --out " +
                      dir.file("ratings.jsonl").string());
  CHECK(rate.exit_code == 0);
  const std::string body = slurp(dir.file("ratings.jsonl"));
  const auto row = json::parse(body);
  CHECK(row.at("rating").get<double>() == 1.0);
  CHECK(row.at("c_core").get<double>() == 1.0);
  CHECK(row.at("c_background").is_null());
}

TEST_CASE("bad invocations exit non-zero") {
  CHECK(run_cli("no-such-command").exit_code != 0);
  CHECK(run_cli("decompose").exit_code != 0);  // missing required flags
  TempDir dir;
  auto bad_config = run_cli("--config /nonexistent.cfg decompose --questions x --out y");
  CHECK(bad_config.exit_code != 0);
}

}  // TEST_SUITE
