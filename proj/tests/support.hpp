#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "subqrag/coverage.hpp"
#include "subqrag/decompose.hpp"
#include "subqrag/gateway.hpp"

namespace testsupport {

using subqrag::gateway::Gateway;
using subqrag::gateway::GatewayConfig;
using subqrag::gateway::MockProvider;

inline MockProvider::Rule rule(std::string match, std::string response, int fail_times = 0) {
  return {{std::move(match)}, std::move(response), fail_times};
}

inline MockProvider::Rule rule_all(std::vector<std::string> match_all, std::string response) {
  return {std::move(match_all), std::move(response), 0};
}

struct MockHarness {
  std::shared_ptr<MockProvider> provider;
  Gateway gateway;
};

inline MockHarness mock_gateway(std::vector<MockProvider::Rule> rules,
                                std::size_t fallback_embed_dim = 0,
                                const std::filesystem::path& cache_dir = {}) {
  auto provider = std::make_shared<MockProvider>(std::move(rules), fallback_embed_dim);
  GatewayConfig config;
  config.chat_model = "scripted-chat";
  config.embed_model = "scripted-embed";
  config.backoff_base = std::chrono::milliseconds(0);
  config.cache_dir = cache_dir;
  return {provider, Gateway(provider, config)};
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("subqrag_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

  void write(const std::string& name, const std::string& content) const {
    std::ofstream out(path_ / name);
    out << content;
  }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::filesystem::path fixtures_dir() { return SUBQRAG_FIXTURES_DIR; }

// --- synthetic coverage runs for metrics tests ---

struct SubqSpec {
  std::string id;
  subqrag::SubQuestionType type = subqrag::SubQuestionType::Core;
  bool answered = false;
  std::vector<bool> chunk_flags;           // one per chunk target
  std::size_t answer_start_word = 0;       // fragment start when answered
};

struct RunSpec {
  std::string question_id;
  std::string system_id = "sys";
  std::size_t answer_word_count = 100;
  std::vector<SubqSpec> subqs;
};

inline void build_run(const RunSpec& spec, std::vector<subqrag::coverage::CoverageRun>& runs,
                      std::vector<subqrag::decompose::Decomposition>& decomps) {
  subqrag::decompose::Decomposition decomp;
  decomp.question_id = spec.question_id;
  subqrag::coverage::CoverageRun run;
  run.question_id = spec.question_id;
  run.system_id = spec.system_id;
  run.answer_word_count = spec.answer_word_count;
  for (const auto& sq : spec.subqs) {
    decomp.subquestions.push_back({sq.id, spec.question_id, "text of " + sq.id, sq.type});
    subqrag::CoverageJudgment answer_judgment;
    answer_judgment.subquestion_id = sq.id;
    answer_judgment.target_kind = subqrag::TargetKind::Answer;
    answer_judgment.target_id = spec.system_id;
    answer_judgment.covered = sq.answered;
    if (sq.answered) {
      answer_judgment.fragment =
          subqrag::TextFragment{sq.answer_start_word, sq.answer_start_word + 1, "w"};
    }
    run.judgments.push_back(std::move(answer_judgment));
    for (std::size_t c = 0; c < sq.chunk_flags.size(); ++c) {
      subqrag::CoverageJudgment chunk_judgment;
      chunk_judgment.subquestion_id = sq.id;
      chunk_judgment.target_kind = subqrag::TargetKind::Chunk;
      chunk_judgment.target_id = "c" + std::to_string(c);
      chunk_judgment.covered = sq.chunk_flags[c];
      if (sq.chunk_flags[c]) {
        chunk_judgment.fragment = subqrag::TextFragment{0, 1, "w"};
      }
      run.judgments.push_back(std::move(chunk_judgment));
    }
  }
  decomps.push_back(std::move(decomp));
  runs.push_back(std::move(run));
}

/// Random run/decomposition population for property tests.
inline void random_population(std::mt19937_64& rng, std::size_t questions,
                              std::vector<subqrag::coverage::CoverageRun>& runs,
                              std::vector<subqrag::decompose::Decomposition>& decomps) {
  std::uniform_int_distribution<int> subq_count(1, 8);
  std::uniform_int_distribution<int> chunk_count(0, 6);
  std::uniform_int_distribution<int> type_pick(0, 2);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<std::size_t> start_word(0, 98);
  for (std::size_t q = 0; q < questions; ++q) {
    RunSpec spec;
    spec.question_id = "q" + std::to_string(q);
    const int n_subq = subq_count(rng);
    const int n_chunks = chunk_count(rng);
    for (int s = 0; s < n_subq; ++s) {
      SubqSpec sq;
      sq.id = spec.question_id + "/sq" + std::to_string(s + 1);
      sq.type = static_cast<subqrag::SubQuestionType>(type_pick(rng));
      sq.answered = coin(rng) == 1;
      sq.answer_start_word = start_word(rng);
      for (int c = 0; c < n_chunks; ++c) sq.chunk_flags.push_back(coin(rng) == 1);
      spec.subqs.push_back(std::move(sq));
    }
    build_run(spec, runs, decomps);
  }
}

}  // namespace testsupport
