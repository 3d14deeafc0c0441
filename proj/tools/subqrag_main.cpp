#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "subqrag/app.hpp"
#include "subqrag/compare.hpp"
#include "subqrag/config.hpp"
#include "subqrag/coverage.hpp"
#include "subqrag/decompose.hpp"
#include "subqrag/jsonl.hpp"
#include "subqrag/metrics.hpp"
#include "subqrag/quality.hpp"
#include "subqrag/rag.hpp"
#include "subqrag/report.hpp"

namespace {

using namespace subqrag;

struct GlobalArgs {
  std::string config_path;
  std::string cache_dir;
  std::string mock_script;
  std::optional<std::uint64_t> seed;
};

Config load_config(const GlobalArgs& args) {
  Config config = args.config_path.empty() ? Config{} : Config::load(args.config_path);
  if (!args.cache_dir.empty()) config.cache.dir = args.cache_dir;
  if (!args.mock_script.empty()) {
    config.provider.mock_script = args.mock_script;
    config.provider.kind = "mock";
  }
  if (args.seed) config.quality.seed = *args.seed;
  return config;
}

std::vector<rag::Strategy> parse_methods(const std::string& joined) {
  std::vector<rag::Strategy> out;
  std::stringstream ss(joined);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (!token.empty()) out.push_back(rag::strategy_from_string(token));
  }
  if (out.empty()) throw Error(ErrorKind::Configuration, "--methods lists no strategies");
  return out;
}

quality::RatingWeights parse_weights(const std::string& joined) {
  std::vector<double> values;
  std::stringstream ss(joined);
  std::string token;
  while (std::getline(ss, token, ',')) values.push_back(std::stod(token));
  if (values.size() != 3) {
    throw Error(ErrorKind::Configuration, "--weights needs w_core,w_background,w_follow_up");
  }
  return {values[0], values[1], values[2]};
}

int run_decompose(const Config& config, const std::string& questions_path,
                  const std::string& out_path, int target_count) {
  Config effective = config;
  if (target_count > 0) effective.decompose.target_count = target_count;
  auto gw = make_gateway(effective);
  const auto questions = read_questions_jsonl(questions_path);
  const auto decomps = decompose::decompose_all(gw, questions, effective.decompose);
  std::vector<SubQuestion> flat;
  for (const auto& d : decomps) flat.insert(flat.end(), d.subquestions.begin(), d.subquestions.end());
  write_subquestions_jsonl(out_path, flat);
  std::cerr << "wrote " << flat.size() << " sub-questions for " << questions.size()
            << " questions to " << out_path << "\n";
  return 0;
}

int run_judge(const Config& config, const std::string& subquestions_path,
              const std::string& answers_path, const std::string& chunks_path,
              const std::string& questions_path, const std::string& out_path) {
  auto gw = make_gateway(config);
  const auto subquestions = read_subquestions_jsonl(subquestions_path);
  const auto answers = read_answers_jsonl(answers_path);
  const auto chunks = chunks_path.empty() ? std::vector<Chunk>{} : read_chunks_jsonl(chunks_path);

  // Question texts are not needed for judging; derive the set from the data
  // unless a questions file is supplied.
  std::vector<MainQuestion> questions;
  if (!questions_path.empty()) {
    questions = read_questions_jsonl(questions_path);
  } else {
    for (const auto& sq : subquestions) {
      if (std::none_of(questions.begin(), questions.end(),
                       [&](const auto& q) { return q.id == sq.parent_id; })) {
        questions.push_back({sq.parent_id, "(unavailable)"});
      }
    }
  }
  const auto decomps = decompose::group_subquestions(questions, subquestions);

  std::vector<CoverageJudgment> all;
  for (std::size_t qi = 0; qi < questions.size(); ++qi) {
    if (decomps[qi].subquestions.empty()) continue;
    std::vector<Chunk> question_chunks;
    for (const auto& c : chunks) {
      if (c.question_id == questions[qi].id) question_chunks.push_back(c);
    }
    bool chunks_done = false;
    for (const auto& answer : answers) {
      if (answer.question_id != questions[qi].id) continue;
      auto run = coverage::judge_question(gw, questions[qi], answer, question_chunks, decomps[qi],
                                          config.judge);
      for (const auto& j : run.judgments) {
        if (j.target_kind == TargetKind::Answer || !chunks_done) all.push_back(j);
      }
      chunks_done = true;
    }
  }
  write_judgments_jsonl(out_path, all);
  std::cerr << "wrote " << all.size() << " judgments to " << out_path << "\n";
  return 0;
}

int run_evaluate(const Config& config, const std::string& judgments_path,
                 const std::string& subquestions_path, const std::string& answers_path,
                 const std::string& out_path) {
  const auto judgments = read_judgments_jsonl(judgments_path);
  const auto subquestions = read_subquestions_jsonl(subquestions_path);
  const auto answers = read_answers_jsonl(answers_path);

  std::vector<MainQuestion> questions;
  for (const auto& sq : subquestions) {
    if (std::none_of(questions.begin(), questions.end(),
                     [&](const auto& q) { return q.id == sq.parent_id; })) {
      questions.push_back({sq.parent_id, "(unavailable)"});
    }
  }
  const auto decomps = decompose::group_subquestions(questions, subquestions);
  const auto runs = coverage::group_judgments(judgments, decomps, answers);

  std::vector<std::string> system_order;
  for (const auto& a : answers) {
    if (std::find(system_order.begin(), system_order.end(), a.system_id) == system_order.end()) {
      system_order.push_back(a.system_id);
    }
  }
  std::vector<metrics::MetricReport> reports;
  for (const auto& system : system_order) {
    std::vector<coverage::CoverageRun> system_runs;
    for (const auto& run : runs) {
      if (run.system_id == system) system_runs.push_back(run);
    }
    if (system_runs.empty()) continue;
    reports.push_back(
        metrics::compute_report(system, system_runs, decomps, config.metrics.aggregation));
  }
  report::write_report_json(out_path, reports, config.metrics.aggregation);
  std::cout << report::render_reports(reports);
  return 0;
}

int run_rate(const std::string& subquestions_path, const std::string& judgments_path,
             const std::string& answers_path, const quality::RatingWeights& weights,
             const std::string& out_path) {
  const auto subquestions = read_subquestions_jsonl(subquestions_path);
  const auto judgments = read_judgments_jsonl(judgments_path);
  const auto answers = read_answers_jsonl(answers_path);

  std::vector<MainQuestion> questions;
  for (const auto& sq : subquestions) {
    if (std::none_of(questions.begin(), questions.end(),
                     [&](const auto& q) { return q.id == sq.parent_id; })) {
      questions.push_back({sq.parent_id, "(unavailable)"});
    }
  }
  const auto decomps = decompose::group_subquestions(questions, subquestions);

  jsonl::Writer writer(out_path);
  for (const auto& answer : answers) {
    const auto decomp = std::find_if(decomps.begin(), decomps.end(), [&](const auto& d) {
      return d.question_id == answer.question_id;
    });
    if (decomp == decomps.end()) {
      throw Error(ErrorKind::Join, "no sub-questions for question " + answer.question_id);
    }
    const auto v = quality::coverage_vector(answer, *decomp, judgments);
    nlohmann::json row{{"question_id", answer.question_id},
                       {"system_id", answer.system_id},
                       {"rating", quality::rating(weights, v)}};
    row["c_core"] = v.core ? nlohmann::json(*v.core) : nlohmann::json(nullptr);
    row["c_background"] = v.background ? nlohmann::json(*v.background) : nlohmann::json(nullptr);
    row["c_follow_up"] = v.follow_up ? nlohmann::json(*v.follow_up) : nlohmann::json(nullptr);
    writer.write(row);
  }
  std::cerr << "wrote ratings to " << out_path << "\n";
  return 0;
}

quality::VectorSet read_vectors_jsonl(const std::string& path) {
  quality::VectorSet vectors;
  jsonl::for_each_record(path, [&](const nlohmann::json& record, std::size_t) {
    quality::CoverageVector v;
    auto grab = [&](const char* key) -> std::optional<double> {
      if (!record.contains(key) || record.at(key).is_null()) return std::nullopt;
      return record.at(key).get<double>();
    };
    v.core = grab("c_core");
    v.background = grab("c_background");
    v.follow_up = grab("c_follow_up");
    vectors[{record.at("question_id").get<std::string>(),
             record.at("system_id").get<std::string>()}] = v;
  });
  return vectors;
}

int run_grid_search(const Config& config, const std::string& pairs_path,
                    const std::string& vectors_path, std::size_t validation_size,
                    const std::string& out_path) {
  const auto pairs = quality::read_pairs_jsonl(pairs_path);
  const auto vectors = read_vectors_jsonl(vectors_path);
  const auto validation =
      quality::validation_split(pairs, validation_size, config.quality.seed);
  const auto grid = quality::default_grid();
  const auto best = quality::grid_search(grid, validation, vectors);
  const double validation_accuracy = quality::accuracy(best, validation, vectors);
  const double full_accuracy = quality::accuracy(best, pairs, vectors);
  nlohmann::json body{{"weights",
                       {{"core", best.core},
                        {"background", best.background},
                        {"follow_up", best.follow_up}}},
                      {"validation_accuracy", validation_accuracy},
                      {"full_accuracy", full_accuracy},
                      {"validation_size", validation.size()},
                      {"seed", config.quality.seed}};
  std::ofstream out(out_path);
  out << body.dump(2) << "\n";
  std::cout << "best weights (core, background, follow_up) = (" << best.core << ", "
            << best.background << ", " << best.follow_up << ")\n"
            << "validation accuracy = " << validation_accuracy << "\n";
  return 0;
}

int run_ingest_preferences(const std::string& format, const std::string& in_path,
                           const std::string& out_path, const std::string& answers_out) {
  if (format != "webgpt") {
    throw Error(ErrorKind::Configuration, "unsupported preference format \"" + format + "\"");
  }
  const auto pairs = quality::ingest_webgpt(in_path);
  quality::write_pairs_jsonl(out_path, pairs);
  if (!answers_out.empty()) {
    std::vector<LongFormAnswer> answers;
    for (const auto& pair : pairs) {
      answers.push_back(pair.answer_a);
      answers.push_back(pair.answer_b);
    }
    write_answers_jsonl(answers_out, answers);
  }
  std::cerr << "kept " << pairs.size() << " preference pairs\n";
  return 0;
}

int run_rag(const Config& config, const std::string& strategy_name,
            const std::string& questions_path, const std::string& subquestions_path,
            const std::string& chunks_path, const std::string& out_path, std::size_t top_k,
            std::size_t target_words) {
  Config effective = config;
  if (top_k > 0) effective.rag.top_k = top_k;
  if (target_words > 0) effective.rag.target_words = target_words;
  const rag::Strategy strategy = rag::strategy_from_string(strategy_name);
  auto gw = make_gateway(effective);

  const auto questions = read_questions_jsonl(questions_path);
  const auto chunks = read_chunks_jsonl(chunks_path);
  std::vector<decompose::Decomposition> decomps;
  if (!subquestions_path.empty()) {
    decomps = decompose::group_subquestions(questions, read_subquestions_jsonl(subquestions_path));
  }

  std::vector<LongFormAnswer> answers;
  for (std::size_t qi = 0; qi < questions.size(); ++qi) {
    std::vector<Chunk> question_chunks;
    for (const auto& c : chunks) {
      if (c.question_id == questions[qi].id) question_chunks.push_back(c);
    }
    const auto pool = rag::window_chunks(question_chunks);
    const auto index = rag::VectorIndex::build(gw, pool);
    const decompose::Decomposition* decomp = decomps.empty() ? nullptr : &decomps[qi];
    answers.push_back(
        rag::run_strategy(gw, strategy, questions[qi], decomp, index, pool, effective.rag));
  }
  write_answers_jsonl(out_path, answers);
  std::cerr << "wrote " << answers.size() << " answers to " << out_path << "\n";
  return 0;
}

int run_compare(const Config& config, const std::string& answers_dir,
                const std::string& methods_joined, const std::string& questions_path,
                const std::string& judge_kind, const std::string& subquestions_path,
                const std::string& out_path) {
  auto gw = make_gateway(config);
  const auto questions = read_questions_jsonl(questions_path);
  const auto strategies = parse_methods(methods_joined);
  std::vector<std::string> methods;
  for (auto s : strategies) methods.emplace_back(rag::to_string(s));

  std::map<std::string, std::vector<LongFormAnswer>> answers_by_method;
  for (const auto& method : methods) {
    const std::filesystem::path path = std::filesystem::path(answers_dir) / (method + ".jsonl");
    answers_by_method[method] = read_answers_jsonl(path);
  }
  auto answer_for = [&](const std::string& method, const std::string& question_id)
      -> const LongFormAnswer& {
    for (const auto& a : answers_by_method[method]) {
      if (a.question_id == question_id) return a;
    }
    throw Error(ErrorKind::IncompleteMatrix,
                "method " + method + " has no answer for question " + question_id);
  };

  std::unique_ptr<compare::PairJudge> judge;
  std::vector<decompose::Decomposition> decomps;
  if (judge_kind == "llm") {
    judge = std::make_unique<compare::LlmJudge>(gw);
  } else if (judge_kind == "coverage-rating") {
    if (subquestions_path.empty()) {
      throw Error(ErrorKind::Configuration,
                  "--judge coverage-rating needs --subquestions for the rating");
    }
    decomps = decompose::group_subquestions(questions, read_subquestions_jsonl(subquestions_path));
    judge = std::make_unique<compare::CoverageRatingJudge>(
        [&gw, &decomps, &config](const MainQuestion& question, const std::string& answer_text) {
          const auto decomp = std::find_if(decomps.begin(), decomps.end(), [&](const auto& d) {
            return d.question_id == question.id;
          });
          if (decomp == decomps.end()) {
            throw Error(ErrorKind::Join, "no sub-questions for question " + question.id);
          }
          auto answer = LongFormAnswer::make(question.id, "candidate", answer_text);
          auto run = coverage::judge_question(gw, question, answer, {}, *decomp, config.judge);
          const auto v = quality::coverage_vector(answer, *decomp, run.judgments);
          return quality::rating({}, v);
        });
  } else {
    throw Error(ErrorKind::Configuration, "--judge must be llm or coverage-rating");
  }

  std::vector<compare::PairVerdict> verdicts;
  for (const auto& question : questions) {
    for (std::size_t i = 0; i < methods.size(); ++i) {
      for (std::size_t j = i + 1; j < methods.size(); ++j) {
        const auto& a = answer_for(methods[i], question.id);
        const auto& b = answer_for(methods[j], question.id);
        verdicts.push_back(
            compare::judge_pair_debiased(*judge, question, methods[i], a.text, methods[j], b.text));
      }
    }
  }
  const auto matrix = compare::win_rate_matrix(verdicts, methods);
  report::write_win_rate_json(out_path, matrix);
  std::cout << report::render_win_rates(matrix);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Sub-question coverage evaluation and augmentation for RAG systems"};
  cli.require_subcommand(1);

  GlobalArgs global;
  std::uint64_t seed_value = 0;
  cli.add_option("--config", global.config_path, "configuration file (flat key = value)");
  cli.add_option("--cache-dir", global.cache_dir, "response cache directory");
  cli.add_option("--mock-script", global.mock_script,
                 "mock provider script (implies provider.kind = mock)");
  auto* seed_opt = cli.add_option("--seed", seed_value, "seed override for splits");

  // decompose
  auto* decompose_cmd = cli.add_subcommand("decompose", "decompose questions into typed sub-questions");
  std::string questions_path, out_path;
  int target_count = 0;
  decompose_cmd->add_option("--questions", questions_path, "questions.jsonl")->required();
  decompose_cmd->add_option("--out", out_path, "output subquestions.jsonl")->required();
  decompose_cmd->add_option("--target-count", target_count, "requested sub-question count");

  // judge
  auto* judge_cmd = cli.add_subcommand("judge", "judge sub-question coverage of answers and chunks");
  std::string subquestions_path, answers_path, chunks_path, judge_questions_path, judge_out;
  judge_cmd->add_option("--subquestions", subquestions_path, "subquestions.jsonl")->required();
  judge_cmd->add_option("--answers", answers_path, "answers.jsonl")->required();
  judge_cmd->add_option("--chunks", chunks_path, "chunks.jsonl");
  judge_cmd->add_option("--questions", judge_questions_path, "questions.jsonl (optional)");
  judge_cmd->add_option("--out", judge_out, "output judgments.jsonl")->required();

  // evaluate
  auto* evaluate_cmd = cli.add_subcommand("evaluate", "aggregate judgments into scenario tables and metrics");
  std::string eval_judgments, eval_subquestions, eval_answers, eval_out;
  evaluate_cmd->add_option("--judgments", eval_judgments, "judgments.jsonl")->required();
  evaluate_cmd->add_option("--subquestions", eval_subquestions, "subquestions.jsonl")->required();
  evaluate_cmd->add_option("--answers", eval_answers, "answers.jsonl (for word counts)")->required();
  evaluate_cmd->add_option("--out", eval_out, "output report.json")->required();

  // rate
  auto* rate_cmd = cli.add_subcommand("rate", "coverage vectors and weighted ratings per answer");
  std::string rate_subquestions, rate_judgments, rate_answers, rate_out;
  std::string weights_joined = "1,0.5,-1";
  rate_cmd->add_option("--subquestions", rate_subquestions, "subquestions.jsonl")->required();
  rate_cmd->add_option("--judgments", rate_judgments, "judgments.jsonl")->required();
  rate_cmd->add_option("--answers", rate_answers, "answers.jsonl")->required();
  rate_cmd->add_option("--weights", weights_joined, "w_core,w_background,w_follow_up");
  rate_cmd->add_option("--out", rate_out, "output ratings.jsonl")->required();

  // grid-search
  auto* grid_cmd = cli.add_subcommand("grid-search", "search rating weights on a validation split");
  std::string grid_pairs, grid_vectors, grid_out;
  std::size_t validation_size = 100;
  grid_cmd->add_option("--pairs", grid_pairs, "pairs.jsonl")->required();
  grid_cmd->add_option("--vectors", grid_vectors, "coverage vectors (rate output)")->required();
  grid_cmd->add_option("--validation-size", validation_size, "hold-out size");
  grid_cmd->add_option("--out", grid_out, "output weights.json")->required();

  // ingest-preferences
  auto* ingest_cmd = cli.add_subcommand("ingest-preferences", "convert a raw preference dataset");
  std::string ingest_format = "webgpt", ingest_in, ingest_out, ingest_answers_out;
  ingest_cmd->add_option("--format", ingest_format, "raw format (webgpt)");
  ingest_cmd->add_option("--in", ingest_in, "raw.jsonl")->required();
  ingest_cmd->add_option("--out", ingest_out, "output pairs.jsonl")->required();
  ingest_cmd->add_option("--answers-out", ingest_answers_out, "also emit answers.jsonl");

  // rag-run
  auto* rag_cmd = cli.add_subcommand("rag-run", "run a retrieval-augmented strategy");
  std::string rag_strategy = "baseline", rag_questions, rag_subquestions, rag_chunks, rag_out;
  std::size_t rag_top_k = 0, rag_target_words = 0;
  rag_cmd->add_option("--strategy", rag_strategy, "baseline|m1|m2|m3|m4")->required();
  rag_cmd->add_option("--questions", rag_questions, "questions.jsonl")->required();
  rag_cmd->add_option("--subquestions", rag_subquestions, "subquestions.jsonl");
  rag_cmd->add_option("--chunks", rag_chunks, "chunks.jsonl")->required();
  rag_cmd->add_option("--out", rag_out, "output answers.jsonl")->required();
  rag_cmd->add_option("--top-k", rag_top_k, "retrieval depth");
  rag_cmd->add_option("--target-words", rag_target_words, "answer length target");

  // compare
  auto* compare_cmd = cli.add_subcommand("compare", "pairwise win rates with order-swap debiasing");
  std::string cmp_answers_dir, cmp_methods = "baseline,m1,m2,m3,m4", cmp_questions, cmp_out;
  std::string cmp_judge = "llm", cmp_subquestions;
  compare_cmd->add_option("--answers-dir", cmp_answers_dir, "directory of <method>.jsonl")->required();
  compare_cmd->add_option("--methods", cmp_methods, "comma-separated method list");
  compare_cmd->add_option("--questions", cmp_questions, "questions.jsonl")->required();
  compare_cmd->add_option("--judge", cmp_judge, "llm | coverage-rating");
  compare_cmd->add_option("--subquestions", cmp_subquestions, "needed by coverage-rating");
  compare_cmd->add_option("--out", cmp_out, "output winrates.json")->required();

  // report
  auto* report_cmd = cli.add_subcommand("report", "render report.json / winrates.json as tables");
  std::string report_in, report_winrates;
  report_cmd->add_option("--report", report_in, "report.json");
  report_cmd->add_option("--winrates", report_winrates, "winrates.json");

  CLI11_PARSE(cli, argc, argv);
  if (seed_opt->count() > 0) global.seed = seed_value;

  try {
    const Config config = load_config(global);
    if (*decompose_cmd) return run_decompose(config, questions_path, out_path, target_count);
    if (*judge_cmd) {
      return run_judge(config, subquestions_path, answers_path, chunks_path, judge_questions_path,
                       judge_out);
    }
    if (*evaluate_cmd) {
      return run_evaluate(config, eval_judgments, eval_subquestions, eval_answers, eval_out);
    }
    if (*rate_cmd) {
      return run_rate(rate_subquestions, rate_judgments, rate_answers,
                      parse_weights(weights_joined), rate_out);
    }
    if (*grid_cmd) {
      return run_grid_search(config, grid_pairs, grid_vectors, validation_size, grid_out);
    }
    if (*ingest_cmd) {
      return run_ingest_preferences(ingest_format, ingest_in, ingest_out, ingest_answers_out);
    }
    if (*rag_cmd) {
      return run_rag(config, rag_strategy, rag_questions, rag_subquestions, rag_chunks, rag_out,
                     rag_top_k, rag_target_words);
    }
    if (*compare_cmd) {
      return run_compare(config, cmp_answers_dir, cmp_methods, cmp_questions, cmp_judge,
                         cmp_subquestions, cmp_out);
    }
    if (*report_cmd) {
      if (report_in.empty() && report_winrates.empty()) {
        throw Error(ErrorKind::Configuration, "report needs --report and/or --winrates");
      }
      if (!report_in.empty()) std::cout << report::render_report_file(report_in);
      if (!report_winrates.empty()) std::cout << report::render_win_rate_file(report_winrates);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
