#include "subqrag/app.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "subqrag/compare.hpp"
#include "subqrag/coverage.hpp"
#include "subqrag/report.hpp"

namespace subqrag::app {

using nlohmann::json;

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return gateway::sha256_hex(buf.str());
}

namespace {

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%FT%TZ", &tm);
  return buf;
}

RunManifest start_manifest(const Config& config,
                           const std::vector<std::filesystem::path>& inputs) {
  RunManifest manifest;
  manifest.config_snapshot = config.snapshot();
  manifest.started_at = now_iso8601();
  std::string id_material = manifest.config_snapshot;
  for (const auto& input : inputs) {
    const std::string digest = sha256_file(input);
    manifest.input_digests[input.string()] = digest;
    id_material += digest;
  }
  manifest.run_id = gateway::sha256_hex(id_material).substr(0, 16);
  return manifest;
}

void record_output(RunManifest& manifest, const std::string& stage,
                   const std::filesystem::path& path) {
  manifest.outputs[stage] = path.string();
  manifest.output_digests[stage] = sha256_file(path);
}

}  // namespace

void RunManifest::write(const std::filesystem::path& path) const {
  json body{{"run_id", run_id},
            {"config", config_snapshot},
            {"input_digests", input_digests},
            {"output_digests", output_digests},
            {"outputs", outputs},
            {"started_at", started_at},
            {"finished_at", finished_at},
            {"errors", errors}};
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << body.dump(2) << "\n";
}

EvaluateResult pipeline_evaluate(const std::filesystem::path& questions_path,
                                 const std::filesystem::path& answers_path,
                                 const std::filesystem::path& chunks_path, const Config& config,
                                 const std::filesystem::path& out_dir, gateway::Gateway* gw) {
  std::filesystem::create_directories(out_dir);
  EvaluateResult result;
  result.manifest = start_manifest(config, {questions_path, answers_path, chunks_path});
  auto fail_stage = [&](const std::string& stage, const std::string& what) {
    result.manifest.errors.push_back(stage + ": " + what);
    result.manifest.finished_at = now_iso8601();
    result.manifest.write(out_dir / "manifest.json");
  };

  std::optional<gateway::Gateway> own_gateway;
  if (gw == nullptr) {
    own_gateway.emplace(make_gateway(config));
    gw = &*own_gateway;
  }

  try {
    const auto questions = read_questions_jsonl(questions_path);
    if (questions.empty()) {
      throw Error(ErrorKind::Ingestion, "question file " + questions_path.string() + " is empty");
    }
    const auto answers = read_answers_jsonl(answers_path);
    const auto chunks = read_chunks_jsonl(chunks_path);

    // Stage 1: decomposition.
    const auto decomps = decompose::decompose_all(*gw, questions, config.decompose);
    std::vector<SubQuestion> flat;
    for (const auto& d : decomps) {
      flat.insert(flat.end(), d.subquestions.begin(), d.subquestions.end());
    }
    result.subquestions_path = out_dir / "subquestions.jsonl";
    write_subquestions_jsonl(result.subquestions_path, flat);
    record_output(result.manifest, "subquestions", result.subquestions_path);

    // Stage 2: coverage judging, question-major then answer-major.
    std::vector<coverage::CoverageRun> runs;
    std::vector<CoverageJudgment> all_judgments;
    std::vector<std::string> system_order;
    for (std::size_t qi = 0; qi < questions.size(); ++qi) {
      std::vector<Chunk> question_chunks;
      for (const auto& c : chunks) {
        if (c.question_id == questions[qi].id) question_chunks.push_back(c);
      }
      for (const auto& answer : answers) {
        if (answer.question_id != questions[qi].id) continue;
        if (std::find(system_order.begin(), system_order.end(), answer.system_id) ==
            system_order.end()) {
          system_order.push_back(answer.system_id);
        }
        auto run = coverage::judge_question(*gw, questions[qi], answer, question_chunks,
                                            decomps[qi], config.judge);
        // Chunk judgments repeat identically across systems; persist one copy.
        const bool question_seen =
            std::any_of(runs.begin(), runs.end(),
                        [&](const auto& r) { return r.question_id == questions[qi].id; });
        for (const auto& j : run.judgments) {
          if (j.target_kind == TargetKind::Answer || !question_seen) {
            all_judgments.push_back(j);
          }
        }
        runs.push_back(std::move(run));
      }
    }
    result.judgments_path = out_dir / "judgments.jsonl";
    write_judgments_jsonl(result.judgments_path, all_judgments);
    record_output(result.manifest, "judgments", result.judgments_path);

    // Stage 3: metrics per system.
    std::vector<metrics::MetricReport> reports;
    for (const auto& system : system_order) {
      std::vector<coverage::CoverageRun> system_runs;
      for (const auto& run : runs) {
        if (run.system_id == system) system_runs.push_back(run);
      }
      reports.push_back(
          metrics::compute_report(system, system_runs, decomps, config.metrics.aggregation));
    }
    result.report_path = out_dir / "report.json";
    report::write_report_json(result.report_path, reports, config.metrics.aggregation);
    record_output(result.manifest, "report", result.report_path);

    result.report_text_path = out_dir / "report.txt";
    {
      std::ofstream text(result.report_text_path);
      text << report::render_reports(reports);
    }
    record_output(result.manifest, "report_text", result.report_text_path);
  } catch (const std::exception& e) {
    fail_stage("evaluate", e.what());
    throw;
  }

  result.manifest.finished_at = now_iso8601();
  result.manifest.write(out_dir / "manifest.json");
  return result;
}

ImproveResult pipeline_improve(const std::filesystem::path& questions_path,
                               const std::filesystem::path& chunks_path, const Config& config,
                               const std::filesystem::path& out_dir,
                               const std::vector<rag::Strategy>& methods, gateway::Gateway* gw) {
  std::filesystem::create_directories(out_dir / "runs");
  ImproveResult result;
  result.manifest = start_manifest(config, {questions_path, chunks_path});

  std::optional<gateway::Gateway> own_gateway;
  if (gw == nullptr) {
    own_gateway.emplace(make_gateway(config));
    gw = &*own_gateway;
  }

  try {
    const auto questions = read_questions_jsonl(questions_path);
    if (questions.empty()) {
      throw Error(ErrorKind::Ingestion, "question file " + questions_path.string() + " is empty");
    }
    const auto chunks = read_chunks_jsonl(chunks_path);

    const auto decomps = decompose::decompose_all(*gw, questions, config.decompose);
    std::vector<SubQuestion> flat;
    for (const auto& d : decomps) {
      flat.insert(flat.end(), d.subquestions.begin(), d.subquestions.end());
    }
    result.subquestions_path = out_dir / "subquestions.jsonl";
    write_subquestions_jsonl(result.subquestions_path, flat);
    record_output(result.manifest, "subquestions", result.subquestions_path);

    // Per-question retrieval pools and indexes; oversized sources are split
    // into overlapping word windows first.
    std::vector<std::vector<Chunk>> pools(questions.size());
    std::vector<rag::VectorIndex> indexes;
    indexes.reserve(questions.size());
    for (std::size_t qi = 0; qi < questions.size(); ++qi) {
      std::vector<Chunk> question_chunks;
      for (const auto& c : chunks) {
        if (c.question_id == questions[qi].id) question_chunks.push_back(c);
      }
      pools[qi] = rag::window_chunks(question_chunks);
      indexes.push_back(rag::VectorIndex::build(*gw, pools[qi]));
    }

    // One answer file per strategy.
    std::map<std::string, std::vector<LongFormAnswer>> answers_by_method;
    for (rag::Strategy strategy : methods) {
      std::vector<LongFormAnswer> answers;
      for (std::size_t qi = 0; qi < questions.size(); ++qi) {
        answers.push_back(rag::run_strategy(*gw, strategy, questions[qi], &decomps[qi],
                                            indexes[qi], pools[qi], config.rag));
      }
      const std::string method(rag::to_string(strategy));
      const std::filesystem::path path = out_dir / "runs" / (method + ".jsonl");
      write_answers_jsonl(path, answers);
      record_output(result.manifest, "answers_" + method, path);
      result.answer_paths[method] = path;
      answers_by_method[method] = std::move(answers);
    }

    // Double-swap pairwise judging across every unordered method pair.
    std::vector<std::string> method_names;
    for (rag::Strategy s : methods) method_names.emplace_back(rag::to_string(s));
    compare::LlmJudge judge(*gw);
    std::vector<compare::PairVerdict> verdicts;
    for (std::size_t qi = 0; qi < questions.size(); ++qi) {
      for (std::size_t i = 0; i < method_names.size(); ++i) {
        for (std::size_t j = i + 1; j < method_names.size(); ++j) {
          const auto& answer_a = answers_by_method[method_names[i]][qi];
          const auto& answer_b = answers_by_method[method_names[j]][qi];
          verdicts.push_back(compare::judge_pair_debiased(judge, questions[qi], method_names[i],
                                                          answer_a.text, method_names[j],
                                                          answer_b.text));
        }
      }
    }
    const auto matrix = compare::win_rate_matrix(verdicts, method_names);
    result.winrates_path = out_dir / "winrates.json";
    report::write_win_rate_json(result.winrates_path, matrix);
    record_output(result.manifest, "winrates", result.winrates_path);
  } catch (const std::exception& e) {
    result.manifest.errors.push_back(std::string("improve: ") + e.what());
    result.manifest.finished_at = now_iso8601();
    result.manifest.write(out_dir / "manifest.json");
    throw;
  }

  result.manifest.finished_at = now_iso8601();
  result.manifest.write(out_dir / "manifest.json");
  return result;
}

}  // namespace subqrag::app
