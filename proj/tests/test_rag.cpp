#include <doctest.h>

#include <algorithm>
#include <json.hpp>
#include <map>
#include <random>
#include <unordered_map>

#include "subqrag/rag.hpp"
#include "subqrag/text.hpp"
#include "support.hpp"

using namespace subqrag;
using namespace testsupport;
using nlohmann::json;
using rag::RagConfig;
using rag::Strategy;
using rag::VectorIndex;

namespace {

std::vector<rag::Scored> oracle_top_k(const VectorIndex& index,
                                      const std::vector<double>& query, std::size_t k) {
  // Exhaustive scan written independently of the production kernel.
  auto norm = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  };
  const double qn = norm(query);
  std::vector<rag::Scored> all;
  for (const auto& entry : index.entries()) {
    double dot = 0;
    for (std::size_t i = 0; i < query.size(); ++i) dot += query[i] * entry.embedding[i];
    double en = norm(entry.embedding);
    all.push_back({entry.chunk_id, (qn > 0 && en > 0) ? dot / (qn * en) : 0.0});
  }
  std::stable_sort(all.begin(), all.end(), [](const rag::Scored& a, const rag::Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.chunk_id < b.chunk_id;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) / 9007199254740992.0);
}

decompose::Decomposition two_core_decomp() {
  return {"q",
          {{"q/sq1", "q", "What is the boiling point of water?", SubQuestionType::Core},
           {"q/sq2", "q", "Why does salt raise the boiling point?", SubQuestionType::Core},
           {"q/sq3", "q", "Who first measured temperature?", SubQuestionType::Background}}};
}

}  // namespace

TEST_SUITE("rag") {

TEST_CASE("build_index embeds one entry per chunk and caches embeddings") {
  TempDir dir;
  std::vector<Chunk> chunks{{"a", "q", std::nullopt, "first chunk"},
                            {"b", "q", std::nullopt, "second chunk"},
                            {"c", "q", std::nullopt, "third chunk"}};
  {
    auto harness = mock_gateway({}, 16, dir.path());
    const auto index = VectorIndex::build(harness.gateway, chunks);
    CHECK(index.size() == 3);
    CHECK(index.dimension() == 16);
    CHECK(harness.gateway.provider_embed_calls() == 3);
  }
  {
    auto harness = mock_gateway({}, 0, dir.path());  // any provider embed would fail
    const auto index = VectorIndex::build(harness.gateway, chunks);
    CHECK(index.size() == 3);
    CHECK(harness.gateway.provider_embed_calls() == 0);
  }
}

TEST_CASE("duplicate chunk ids and dimension mismatches are rejected") {
  std::vector<Chunk> dup{{"a", "q", std::nullopt, "one"}, {"a", "q", std::nullopt, "two"}};
  auto harness = mock_gateway({}, 8);
  try {
    VectorIndex::build(harness.gateway, dup);
    FAIL("expected ingestion error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Ingestion);
  }

  VectorIndex index;
  index.add("x", {1.0, 0.0});
  CHECK_THROWS_AS(index.add("y", {1.0, 0.0, 0.0}), Error);
}

TEST_CASE("retrieve ranks by cosine similarity with id tie-breaks") {
  auto harness = mock_gateway(
      {rule("the query", "[1, 0]"), rule("chunk a", "[1, 0]"), rule("chunk b", "[0, 1]")});
  std::vector<Chunk> chunks{{"a", "q", std::nullopt, "chunk a"}, {"b", "q", std::nullopt, "chunk b"}};
  const auto index = VectorIndex::build(harness.gateway, chunks);
  const auto hits = rag::retrieve(index, harness.gateway, "the query", 1);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].chunk_id == "a");
  CHECK(hits[0].score == doctest::Approx(1.0).epsilon(1e-12));

  const auto all = rag::retrieve(index, harness.gateway, "the query", 10);
  CHECK(all.size() == 2);  // saturation: never more than the index holds

  VectorIndex empty;
  try {
    rag::top_k_by_vector(empty, std::vector<double>{1.0}, 1);
    FAIL("expected retrieval error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Retrieval);
  }
}

TEST_CASE("retrieval equals the exhaustive cosine scan oracle, ties included") {
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng() % 60;
    const std::size_t dim = 2 + rng() % 6;
    VectorIndex index;
    std::vector<std::vector<double>> vectors;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> v(dim);
      if (i > 0 && rng() % 4 == 0) {
        v = vectors[rng() % vectors.size()];  // exact duplicate forces a tie
      } else {
        for (double& x : v) x = uniform(rng, -1, 1);
      }
      vectors.push_back(v);
      index.add("id" + std::to_string(i), v);
    }
    std::vector<double> query(dim);
    for (double& x : query) x = uniform(rng, -1, 1);
    const std::size_t k = 1 + rng() % n;
    const auto actual = rag::top_k_by_vector(index, query, k);
    const auto expected = oracle_top_k(index, query, k);
    REQUIRE(actual.size() == expected.size());
    for (std::size_t i = 0; i < actual.size(); ++i) {
      CHECK(actual[i].chunk_id == expected[i].chunk_id);
      CHECK(actual[i].score == expected[i].score);
    }
  }
}

TEST_CASE("the parallel cosine kernel is bit-identical to the serial reference") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng() % 300;
    const std::size_t dim = 1 + rng() % 64;
    VectorIndex index;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> v(dim);
      for (double& x : v) x = uniform(rng, -2, 2);
      index.add("id" + std::to_string(i), v);
    }
    std::vector<double> query(dim);
    for (double& x : query) x = uniform(rng, -2, 2);
    const auto parallel = rag::cosine_scores(index, query);
    const auto serial = rag::cosine_scores_serial(index, query);
    REQUIRE(parallel.size() == serial.size());
    for (std::size_t i = 0; i < parallel.size(); ++i) CHECK(parallel[i] == serial[i]);
  }
}

TEST_CASE("generation prompts carry contexts in rank order and the word target") {
  MainQuestion question{"q", "Why is the sea salty?"};
  std::vector<Chunk> chunks;
  std::vector<const Chunk*> refs;
  for (int i = 0; i < 10; ++i) {
    chunks.push_back({"c" + std::to_string(i), "q", std::nullopt,
                      "context passage number " + std::to_string(i)});
  }
  for (const auto& c : chunks) refs.push_back(&c);
  const std::string prompt = rag::build_generation_prompt(question, refs, 300, {});
  CHECK(prompt.find("around 300 words") != std::string::npos);
  CHECK(prompt.find("Question: Why is the sea salty?") != std::string::npos);
  std::size_t previous = 0;
  for (int i = 0; i < 10; ++i) {
    const auto at = prompt.find("context passage number " + std::to_string(i));
    REQUIRE(at != std::string::npos);
    CHECK(at > previous);
    previous = at;
  }

  auto harness = mock_gateway({rule("write a comprehensive answer", "ANSWER")});
  RagConfig config;
  const auto answer = rag::generate_answer(harness.gateway, question, refs, config);
  CHECK(answer.text == "ANSWER");
  CHECK(answer.system_id == "baseline");
  CHECK(answer.question_id == "q");
}

TEST_CASE("the baseline strategy is retrieve-then-generate") {
  auto harness = mock_gateway({rule("write a comprehensive answer", "BASE")}, 8);
  std::vector<Chunk> corpus{{"a", "q", std::nullopt, "alpha text"},
                            {"b", "q", std::nullopt, "beta text"}};
  MainQuestion question{"q", "Main?"};
  const auto index = VectorIndex::build(harness.gateway, corpus);
  RagConfig config;
  config.top_k = 1;
  const auto answer = rag::run_baseline(harness.gateway, question, index, corpus, config);
  CHECK(answer.text == "BASE");
  CHECK(harness.gateway.provider_chat_calls() == 1);  // one generation call
}

TEST_CASE("the definition-augmented strategy keeps baseline retrieval, changes the prompt") {
  std::vector<Chunk> corpus{{"a", "q", std::nullopt, "alpha text"},
                            {"b", "q", std::nullopt, "beta text"}};
  MainQuestion question{"q", "Main?"};
  RagConfig config;
  config.top_k = 1;

  auto base = mock_gateway({rule("write a comprehensive answer", "OUT")}, 8);
  const auto base_index = VectorIndex::build(base.gateway, corpus);
  rag::run_baseline(base.gateway, question, base_index, corpus, config);
  const std::string baseline_prompt = base.provider->chat_log().back();

  auto aug = mock_gateway({rule("write a comprehensive answer", "OUT")}, 8);
  const auto aug_index = VectorIndex::build(aug.gateway, corpus);
  rag::run_m1(aug.gateway, question, aug_index, corpus, config);
  const std::string augmented_prompt = aug.provider->chat_log().back();

  CHECK(augmented_prompt.find("central to the main topic") != std::string::npos);
  CHECK(augmented_prompt.find("cover as many core sub-questions as possible") !=
        std::string::npos);
  CHECK(baseline_prompt.find("central to the main topic") == std::string::npos);
  // Identical retrieval: the augmented prompt ends with the baseline's body.
  CHECK(augmented_prompt.find(baseline_prompt) != std::string::npos);
}

TEST_CASE("the sub-question-augmented strategy retrieves with the concatenated query") {
  std::vector<Chunk> corpus{{"a", "q", std::nullopt, "alpha text"}};
  MainQuestion question{"q", "Main?"};
  const auto decomp = two_core_decomp();
  RagConfig config;
  config.top_k = 1;
  auto harness = mock_gateway({rule("write a comprehensive answer", "OUT")}, 8);
  const auto index = VectorIndex::build(harness.gateway, corpus);
  rag::run_m2(harness.gateway, question, decomp, index, corpus, config);

  const std::string retrieval_query = harness.provider->embed_log().back();
  CHECK(retrieval_query.find("Main?") != std::string::npos);
  CHECK(retrieval_query.find("What is the boiling point of water?") != std::string::npos);
  CHECK(retrieval_query.find("Why does salt raise the boiling point?") != std::string::npos);
  CHECK(retrieval_query.find("Who first measured temperature?") == std::string::npos);

  const std::string prompt = harness.provider->chat_log().back();
  CHECK(prompt.find("Core sub-questions to address:") != std::string::npos);
  CHECK(prompt.find("1. What is the boiling point of water?") != std::string::npos);
}

TEST_CASE("a zero-core decomposition degrades the query augmentation to the baseline") {
  std::vector<Chunk> corpus{{"a", "q", std::nullopt, "alpha text"}};
  MainQuestion question{"q", "Main?"};
  decompose::Decomposition decomp{
      "q", {{"q/sq1", "q", "Background only?", SubQuestionType::Background}}};
  RagConfig config;
  config.top_k = 1;

  auto m2 = mock_gateway({rule("write a comprehensive answer", "OUT")}, 8);
  const auto index = VectorIndex::build(m2.gateway, corpus);
  const auto answer = rag::run_m2(m2.gateway, question, decomp, index, corpus, config);
  CHECK(answer.text == "OUT");
  CHECK(answer.system_id == "m2");

  auto base = mock_gateway({rule("write a comprehensive answer", "OUT")}, 8);
  const auto base_index = VectorIndex::build(base.gateway, corpus);
  rag::run_baseline(base.gateway, question, base_index, corpus, config);
  CHECK(m2.provider->chat_log().back() == base.provider->chat_log().back());
}

TEST_CASE("rerank orders the pool by coverage count, then score, then id") {
  std::vector<rag::PooledChunk> pool{
      {"z", 0.9, 0}, {"y", 0.5, 1}, {"x", 0.1, 2}, {"w", 0.5, 1}, {"v", 0.9, 0}};
  rag::rerank_pool(pool);
  CHECK(pool[0].chunk_id == "x");
  CHECK(pool[1].chunk_id == "w");  // same coverage as y, same score, id asc
  CHECK(pool[2].chunk_id == "y");
  CHECK(pool[3].chunk_id == "v");  // coverage 0: score 0.9 for both, id asc
  CHECK(pool[4].chunk_id == "z");
}

TEST_CASE("the rerank strategy feeds the generator the best-covering chunks") {
  // X covers both core sub-questions, Y one, Z none.
  std::vector<Chunk> corpus{
      {"x", "q", std::nullopt, "water boils at a fixed temperature and salt shifts that point"},
      {"y", "q", std::nullopt, "pure water boils at a known temperature at sea level"},
      {"z", "q", std::nullopt, "rivers carry minerals toward the ocean"}};
  MainQuestion question{"q", "Main?"};
  const auto decomp = two_core_decomp();
  auto harness = mock_gateway(
      {
          rule("write a comprehensive answer", "OUT"),
          rule_all({"Question: What is the boiling point of water?", "fixed temperature"},
                   json{{"covered", true}, {"quote", "water boils at a fixed temperature"}}.dump()),
          rule_all({"Question: What is the boiling point of water?", "known temperature"},
                   json{{"covered", true}, {"quote", "boils at a known temperature"}}.dump()),
          rule_all({"Question: Why does salt raise the boiling point?", "salt shifts"},
                   json{{"covered", true}, {"quote", "salt shifts that point"}}.dump()),
          rule("", "None"),
      },
      8);
  const auto index = VectorIndex::build(harness.gateway, corpus);
  RagConfig config;
  config.top_k = 3;
  config.rerank_top_k = 2;
  const auto answer = rag::run_m3(harness.gateway, question, decomp, index, corpus, config);
  CHECK(answer.system_id == "m3");

  const std::string prompt = harness.provider->chat_log().back();
  const auto x_at = prompt.find("salt shifts that point");
  const auto y_at = prompt.find("known temperature at sea level");
  REQUIRE(x_at != std::string::npos);
  REQUIRE(y_at != std::string::npos);
  CHECK(x_at < y_at);                                              // x (2 covered) before y (1)
  CHECK(prompt.find("rivers carry minerals") == std::string::npos);  // z dropped

  // Pool deduplication: each chunk appears exactly once in the prompt.
  CHECK(prompt.find("salt shifts that point", x_at + 1) == std::string::npos);
}

TEST_CASE("with no coverage signal the rerank falls back to retrieval order") {
  std::vector<Chunk> corpus{{"a", "q", std::nullopt, "first passage"},
                            {"b", "q", std::nullopt, "second passage"},
                            {"c", "q", std::nullopt, "third passage"}};
  MainQuestion question{"q", "Main?"};
  const auto decomp = two_core_decomp();
  auto harness = mock_gateway(
      {rule("write a comprehensive answer", "OUT"), rule("", "None")}, 8);
  const auto index = VectorIndex::build(harness.gateway, corpus);
  RagConfig config;
  config.top_k = 3;
  rag::run_m3(harness.gateway, question, decomp, index, corpus, config);

  // All coverage counts are zero, so the context order must follow the pooled
  // retrieval score: each chunk's best score over the question and core
  // sub-question queries.
  std::map<std::string, double> best;
  for (const std::string& query :
       {question.text, decomp.subquestions[0].text, decomp.subquestions[1].text}) {
    for (const auto& hit : rag::retrieve(index, harness.gateway, query, 3)) {
      auto [it, inserted] = best.emplace(hit.chunk_id, hit.score);
      if (!inserted && hit.score > it->second) it->second = hit.score;
    }
  }
  std::vector<std::pair<std::string, double>> expected(best.begin(), best.end());
  std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const std::string prompt = harness.provider->chat_log().back();
  std::size_t previous = 0;
  std::unordered_map<std::string, std::string> text_of{
      {"a", "first passage"}, {"b", "second passage"}, {"c", "third passage"}};
  for (const auto& [chunk_id, score] : expected) {
    const auto at = prompt.find(text_of.at(chunk_id));
    REQUIRE(at != std::string::npos);
    CHECK(at > previous);
    previous = at;
  }
}

TEST_CASE("the per-sub-question strategy makes one generation per core plus a synthesis") {
  std::vector<Chunk> corpus{{"a", "q", std::nullopt, "alpha text"},
                            {"b", "q", std::nullopt, "beta text"}};
  MainQuestion question{"q", "Main?"};
  decompose::Decomposition decomp{"q",
                                  {{"q/sq1", "q", "First core?", SubQuestionType::Core},
                                   {"q/sq2", "q", "Second core?", SubQuestionType::Core},
                                   {"q/sq3", "q", "Third core?", SubQuestionType::Core},
                                   {"q/sq4", "q", "Context?", SubQuestionType::Background}}};
  auto harness = mock_gateway(
      {
          rule_all({"write a comprehensive answer", "Question: First core?"}, "SUB1"),
          rule_all({"write a comprehensive answer", "Question: Second core?"}, "SUB2"),
          rule_all({"write a comprehensive answer", "Question: Third core?"}, "SUB3"),
          rule("Combine the sub-answers", "FINAL"),
      },
      8);
  const auto index = VectorIndex::build(harness.gateway, corpus);
  RagConfig config;
  config.top_k = 2;
  const auto answer = rag::run_m4(harness.gateway, question, decomp, index, corpus, config);
  CHECK(answer.text == "FINAL");
  CHECK(answer.system_id == "m4");
  CHECK(harness.gateway.provider_chat_calls() == 4);  // 3 sub-answers + 1 synthesis

  const std::string synthesis = harness.provider->chat_log().back();
  for (const char* sub : {"SUB1", "SUB2", "SUB3"}) {
    CHECK(synthesis.find(sub) != std::string::npos);
  }
  CHECK(synthesis.find("Question: Main?") != std::string::npos);

  decompose::Decomposition no_core{"q", {{"q/sq1", "q", "Bg?", SubQuestionType::Background}}};
  try {
    rag::run_m4(harness.gateway, question, no_core, index, corpus, config);
    FAIL("expected strategy error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Strategy);
  }
}

TEST_CASE("oversized sources split into overlapping word windows") {
  std::string long_text;
  for (int i = 0; i < 1000; ++i) long_text += (i ? " t" : "t") + std::to_string(i);
  std::vector<Chunk> chunks{{"short", "q", std::nullopt, "tiny text"},
                            {"long", "q", std::nullopt, long_text}};
  const auto windows = rag::window_chunks(chunks, 512, 64);
  REQUIRE(windows.size() == 4);  // untouched short chunk + three windows
  CHECK(windows[0].id == "short");
  CHECK(windows[0].text == "tiny text");
  CHECK(windows[1].id == "long#w1");
  CHECK(windows[2].id == "long#w2");
  CHECK(windows[3].id == "long#w3");

  const auto w1 = text::words(windows[1].text);
  const auto w2 = text::words(windows[2].text);
  const auto w3 = text::words(windows[3].text);
  CHECK(w1.size() == 512);
  CHECK(w2.size() == 512);
  CHECK(w3.size() == 1000 - 2 * (512 - 64));  // the tail window
  CHECK(w1.front() == "t0");
  CHECK(w2.front() == "t448");  // stride = window - overlap
  CHECK(w3.front() == "t896");
  CHECK(w3.back() == "t999");
  // Overlap: the last 64 words of one window open the next.
  CHECK(w1[448] == w2[0]);

  CHECK_THROWS_AS(rag::window_chunks(chunks, 64, 64), Error);
}

TEST_CASE("strategies replay deterministically from a warm cache") {
  TempDir dir;
  std::vector<Chunk> corpus{{"a", "q", std::nullopt, "alpha text"},
                            {"b", "q", std::nullopt, "beta text"}};
  MainQuestion question{"q", "Main?"};
  const auto decomp = two_core_decomp();
  RagConfig config;
  config.top_k = 2;
  auto rules = std::vector<gateway::MockProvider::Rule>{
      rule("Combine the sub-answers", "FINAL"),
      rule("write a comprehensive answer", "OUT"),
      rule("", "None"),
  };
  std::string first;
  {
    auto provider = std::make_shared<gateway::MockProvider>(rules, 8);
    gateway::GatewayConfig cfg;
    cfg.cache_dir = dir.path();
    gateway::Gateway gw(provider, cfg);
    const auto index = VectorIndex::build(gw, corpus);
    first = rag::run_m4(gw, question, decomp, index, corpus, config).text;
  }
  {
    auto provider =
        std::make_shared<gateway::MockProvider>(std::vector<gateway::MockProvider::Rule>{}, 0);
    gateway::GatewayConfig cfg;
    cfg.cache_dir = dir.path();
    gateway::Gateway gw(provider, cfg);
    const auto index = VectorIndex::build(gw, corpus);
    const auto replay = rag::run_m4(gw, question, decomp, index, corpus, config);
    CHECK(replay.text == first);
    CHECK(gw.provider_chat_calls() == 0);
    CHECK(gw.provider_embed_calls() == 0);
  }
}

}  // TEST_SUITE
