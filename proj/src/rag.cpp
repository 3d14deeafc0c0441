#include "subqrag/rag.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <set>
#include <unordered_map>

#include "subqrag/prompts.hpp"
#include "subqrag/text.hpp"

namespace subqrag::rag {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Baseline: return "baseline";
    case Strategy::M1: return "m1";
    case Strategy::M2: return "m2";
    case Strategy::M3: return "m3";
    case Strategy::M4: return "m4";
  }
  return "baseline";
}

Strategy strategy_from_string(std::string_view s) {
  std::string v = text::to_lower(s);
  if (v == "baseline" || v == "b") return Strategy::Baseline;
  if (v == "m1") return Strategy::M1;
  if (v == "m2") return Strategy::M2;
  if (v == "m3") return Strategy::M3;
  if (v == "m4") return Strategy::M4;
  throw Error(ErrorKind::Configuration, "unknown strategy \"" + std::string(s) + "\"");
}

std::vector<Chunk> window_chunks(const std::vector<Chunk>& chunks, std::size_t window_words,
                                 std::size_t overlap_words) {
  if (window_words == 0 || overlap_words >= window_words) {
    throw Error(ErrorKind::Configuration, "window must be positive and larger than the overlap");
  }
  const std::size_t stride = window_words - overlap_words;
  std::vector<Chunk> out;
  for (const auto& chunk : chunks) {
    const auto words = text::words(chunk.text);
    if (words.size() <= window_words) {
      out.push_back(chunk);
      continue;
    }
    std::size_t piece = 0;
    for (std::size_t start = 0; start < words.size(); start += stride) {
      const std::size_t end = std::min(start + window_words, words.size());
      Chunk window = chunk;
      window.id = chunk.id + "#w" + std::to_string(++piece);
      window.text = text::join(
          std::vector<std::string>(words.begin() + static_cast<std::ptrdiff_t>(start),
                                   words.begin() + static_cast<std::ptrdiff_t>(end)),
          " ");
      out.push_back(std::move(window));
      if (end == words.size()) break;
    }
  }
  return out;
}

void VectorIndex::add(std::string chunk_id, std::vector<double> embedding) {
  if (embedding.empty()) throw Error(ErrorKind::Configuration, "empty embedding");
  if (dimension_ == 0) {
    dimension_ = embedding.size();
  } else if (embedding.size() != dimension_) {
    throw Error(ErrorKind::Configuration,
                "embedding for chunk " + chunk_id + " has dimension " +
                    std::to_string(embedding.size()) + ", index has " +
                    std::to_string(dimension_));
  }
  for (const auto& e : entries_) {
    if (e.chunk_id == chunk_id) {
      throw Error(ErrorKind::Ingestion, "duplicate chunk id \"" + chunk_id + "\" in index");
    }
  }
  double sq = 0.0;
  for (double x : embedding) sq += x * x;
  entries_.push_back({std::move(chunk_id), std::move(embedding), std::sqrt(sq)});
}

VectorIndex VectorIndex::build(gateway::Gateway& gw, const std::vector<Chunk>& chunks) {
  if (chunks.empty()) throw Error(ErrorKind::IncompleteInput, "no chunks to index");
  VectorIndex index;
  for (const auto& chunk : chunks) index.add(chunk.id, gw.embed(chunk.text));
  return index;
}

namespace {

inline double cosine(const IndexEntry& entry, std::span<const double> query, double query_norm) {
  double dot = 0.0;
  const std::size_t d = entry.embedding.size();
  for (std::size_t i = 0; i < d; ++i) dot += entry.embedding[i] * query[i];
  const double denom = entry.norm * query_norm;
  return denom > 0.0 ? dot / denom : 0.0;
}

double norm_of(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  return std::sqrt(sq);
}

}  // namespace

std::vector<double> cosine_scores_serial(const VectorIndex& index, std::span<const double> query) {
  if (query.size() != index.dimension()) {
    throw Error(ErrorKind::Configuration, "query dimension " + std::to_string(query.size()) +
                                              " does not match index dimension " +
                                              std::to_string(index.dimension()));
  }
  const double query_norm = norm_of(query);
  const auto& entries = index.entries();
  std::vector<double> scores(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    scores[i] = cosine(entries[i], query, query_norm);
  }
  return scores;
}

std::vector<double> cosine_scores(const VectorIndex& index, std::span<const double> query) {
  if (query.size() != index.dimension()) {
    throw Error(ErrorKind::Configuration, "query dimension " + std::to_string(query.size()) +
                                              " does not match index dimension " +
                                              std::to_string(index.dimension()));
  }
  const double query_norm = norm_of(query);
  const auto& entries = index.entries();
  std::vector<double> scores(entries.size());
  const std::int64_t n = static_cast<std::int64_t>(entries.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    scores[static_cast<std::size_t>(i)] =
        cosine(entries[static_cast<std::size_t>(i)], query, query_norm);
  }
  return scores;
}

std::vector<Scored> top_k_by_vector(const VectorIndex& index, std::span<const double> query,
                                    std::size_t k) {
  if (index.size() == 0) throw Error(ErrorKind::Retrieval, "retrieval over an empty index");
  if (k == 0) throw Error(ErrorKind::Retrieval, "k must be at least 1");
  const std::vector<double> scores = cosine_scores(index, query);

  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto& entries = index.entries();
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return entries[a].chunk_id < entries[b].chunk_id;
  });
  const std::size_t take = std::min(k, order.size());
  std::vector<Scored> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.push_back({entries[order[i]].chunk_id, scores[order[i]]});
  }
  return out;
}

std::vector<Scored> retrieve(const VectorIndex& index, gateway::Gateway& gw,
                             const std::string& query, std::size_t k) {
  if (index.size() == 0) throw Error(ErrorKind::Retrieval, "retrieval over an empty index");
  return top_k_by_vector(index, gw.embed(query), k);
}

// --- generation ---

std::string build_generation_prompt(const MainQuestion& question,
                                    const std::vector<const Chunk*>& contexts,
                                    std::size_t target_words, const std::string& extra) {
  std::string prompt;
  if (!extra.empty()) {
    prompt += extra;
    prompt += "\n\n";
  }
  prompt += "Using only the numbered context passages below, write a comprehensive answer of "
            "around " +
            std::to_string(target_words) + " words to the question.\n\nContext passages:\n";
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    prompt += std::to_string(i + 1) + ". " + contexts[i]->text + "\n";
  }
  prompt += "\nQuestion: " + question.text + "\nAnswer:";
  return prompt;
}

std::string build_synthesis_prompt(
    const MainQuestion& question,
    const std::vector<std::pair<std::string, std::string>>& sub_answers,
    std::size_t target_words) {
  std::string prompt =
      "You are given a question and a set of sub-answers, each responding to one core "
      "sub-question of it. Combine the sub-answers into a final answer of around " +
      std::to_string(target_words) + " words to the original question.\n\nSub-answers:\n";
  for (std::size_t i = 0; i < sub_answers.size(); ++i) {
    prompt += std::to_string(i + 1) + ". Sub-question: " + sub_answers[i].first + "\n";
    prompt += "   Sub-answer: " + sub_answers[i].second + "\n";
  }
  prompt += "\nQuestion: " + question.text + "\nFinal answer:";
  return prompt;
}

std::string m1_instruction() {
  return "The definition of a core sub-question:\n" + prompts::core_definition() +
         "\n\nCome up with core sub-questions of the question below and try to cover as many "
         "core sub-questions as possible when writing the answer.";
}

std::string m2_instruction(const std::vector<const SubQuestion*>& core) {
  std::string block = "Core sub-questions to address:\n";
  for (std::size_t i = 0; i < core.size(); ++i) {
    block += std::to_string(i + 1) + ". " + core[i]->text + "\n";
  }
  block += "Address as many of the core sub-questions above as possible when writing the answer.";
  return block;
}

LongFormAnswer generate_answer(gateway::Gateway& gw, const MainQuestion& question,
                               const std::vector<const Chunk*>& contexts, const RagConfig& config,
                               const std::string& extra_instruction,
                               const std::string& system_id) {
  if (contexts.empty()) throw Error(ErrorKind::IncompleteInput, "generation without context");
  const std::string prompt =
      build_generation_prompt(question, contexts, config.target_words, extra_instruction);
  const std::string completion = gw.chat(gw.make_request(prompt));
  return LongFormAnswer::make(
      question.id, system_id.empty() ? std::string(to_string(config.strategy)) : system_id,
      completion);
}

namespace {

std::unordered_map<std::string, const Chunk*> chunk_lookup(const std::vector<Chunk>& corpus) {
  std::unordered_map<std::string, const Chunk*> map;
  for (const auto& c : corpus) map.emplace(c.id, &c);
  return map;
}

std::vector<const Chunk*> resolve(const std::vector<Scored>& hits,
                                  const std::unordered_map<std::string, const Chunk*>& chunks) {
  std::vector<const Chunk*> out;
  out.reserve(hits.size());
  for (const auto& hit : hits) {
    auto it = chunks.find(hit.chunk_id);
    if (it == chunks.end()) {
      throw Error(ErrorKind::Lookup, "retrieved chunk " + hit.chunk_id + " is not in the corpus");
    }
    out.push_back(it->second);
  }
  return out;
}

}  // namespace

LongFormAnswer run_baseline(gateway::Gateway& gw, const MainQuestion& question,
                            const VectorIndex& index, const std::vector<Chunk>& corpus,
                            const RagConfig& config) {
  const auto chunks = chunk_lookup(corpus);
  const auto hits = retrieve(index, gw, question.text, config.top_k);
  RagConfig cfg = config;
  cfg.strategy = Strategy::Baseline;
  return generate_answer(gw, question, resolve(hits, chunks), cfg);
}

LongFormAnswer run_m1(gateway::Gateway& gw, const MainQuestion& question,
                      const VectorIndex& index, const std::vector<Chunk>& corpus,
                      const RagConfig& config) {
  const auto chunks = chunk_lookup(corpus);
  const auto hits = retrieve(index, gw, question.text, config.top_k);
  RagConfig cfg = config;
  cfg.strategy = Strategy::M1;
  return generate_answer(gw, question, resolve(hits, chunks), cfg, m1_instruction());
}

LongFormAnswer run_m2(gateway::Gateway& gw, const MainQuestion& question,
                      const decompose::Decomposition& decomposition, const VectorIndex& index,
                      const std::vector<Chunk>& corpus, const RagConfig& config) {
  const auto core = decomposition.of_type(SubQuestionType::Core);
  if (core.empty()) {
    std::cerr << "[rag] question " << question.id
              << " has no core sub-questions; m2 degrades to the baseline retrieval\n";
    const auto chunks = chunk_lookup(corpus);
    const auto hits = retrieve(index, gw, question.text, config.top_k);
    RagConfig cfg = config;
    cfg.strategy = Strategy::M2;
    return generate_answer(gw, question, resolve(hits, chunks), cfg);
  }
  std::string query = question.text;
  for (const auto* sq : core) {
    query += " ";
    query += sq->text;
  }
  const auto chunks = chunk_lookup(corpus);
  const auto hits = retrieve(index, gw, query, config.top_k);
  RagConfig cfg = config;
  cfg.strategy = Strategy::M2;
  return generate_answer(gw, question, resolve(hits, chunks), cfg, m2_instruction(core));
}

void rerank_pool(std::vector<PooledChunk>& pool) {
  std::sort(pool.begin(), pool.end(), [](const PooledChunk& a, const PooledChunk& b) {
    if (a.covered_core != b.covered_core) return a.covered_core > b.covered_core;
    if (a.best_score != b.best_score) return a.best_score > b.best_score;
    return a.chunk_id < b.chunk_id;
  });
}

LongFormAnswer run_m3(gateway::Gateway& gw, const MainQuestion& question,
                      const decompose::Decomposition& decomposition, const VectorIndex& index,
                      const std::vector<Chunk>& corpus, const RagConfig& config) {
  const auto chunks = chunk_lookup(corpus);
  const auto core = decomposition.of_type(SubQuestionType::Core);

  // Union of per-query retrievals, deduplicated; a chunk keeps its best score.
  std::map<std::string, double> pooled_scores;
  auto pool_query = [&](const std::string& query) {
    for (const auto& hit : retrieve(index, gw, query, config.top_k)) {
      auto [it, inserted] = pooled_scores.emplace(hit.chunk_id, hit.score);
      if (!inserted && hit.score > it->second) it->second = hit.score;
    }
  };
  pool_query(question.text);
  for (const auto* sq : core) pool_query(sq->text);
  if (pooled_scores.empty()) throw Error(ErrorKind::Retrieval, "empty retrieval pool");

  std::vector<PooledChunk> pool;
  pool.reserve(pooled_scores.size());
  for (const auto& [chunk_id, score] : pooled_scores) {
    auto it = chunks.find(chunk_id);
    if (it == chunks.end()) {
      throw Error(ErrorKind::Lookup, "pooled chunk " + chunk_id + " is not in the corpus");
    }
    PooledChunk pc;
    pc.chunk_id = chunk_id;
    pc.best_score = score;
    for (const auto* sq : core) {
      const auto judgment = coverage::judge_coverage(gw, it->second->text, *sq,
                                                     TargetKind::Chunk, chunk_id, config.judge);
      if (judgment.covered) ++pc.covered_core;
    }
    pool.push_back(std::move(pc));
  }
  rerank_pool(pool);

  std::vector<const Chunk*> contexts;
  const std::size_t take = std::min(config.effective_rerank_top_k(), pool.size());
  contexts.reserve(take);
  for (std::size_t i = 0; i < take; ++i) contexts.push_back(chunks.at(pool[i].chunk_id));
  RagConfig cfg = config;
  cfg.strategy = Strategy::M3;
  return generate_answer(gw, question, contexts, cfg);
}

LongFormAnswer run_m4(gateway::Gateway& gw, const MainQuestion& question,
                      const decompose::Decomposition& decomposition, const VectorIndex& index,
                      const std::vector<Chunk>& corpus, const RagConfig& config) {
  const auto core = decomposition.of_type(SubQuestionType::Core);
  if (core.empty()) {
    throw Error(ErrorKind::Strategy,
                "m4 needs at least one core sub-question for question " + question.id);
  }
  const auto chunks = chunk_lookup(corpus);
  std::vector<std::pair<std::string, std::string>> sub_answers;
  sub_answers.reserve(core.size());
  for (const auto* sq : core) {
    const auto hits = retrieve(index, gw, sq->text, config.top_k);
    MainQuestion as_question{sq->id, sq->text};
    const std::string prompt = build_generation_prompt(as_question, resolve(hits, chunks),
                                                       config.target_words, {});
    sub_answers.emplace_back(sq->text, gw.chat(gw.make_request(prompt)));
  }
  const std::string synthesis =
      build_synthesis_prompt(question, sub_answers, config.target_words);
  const std::string completion = gw.chat(gw.make_request(synthesis));
  return LongFormAnswer::make(question.id, std::string(to_string(Strategy::M4)), completion);
}

LongFormAnswer run_strategy(gateway::Gateway& gw, Strategy strategy, const MainQuestion& question,
                            const decompose::Decomposition* decomposition,
                            const VectorIndex& index, const std::vector<Chunk>& corpus,
                            const RagConfig& config) {
  RagConfig cfg = config;
  cfg.strategy = strategy;
  switch (strategy) {
    case Strategy::Baseline: return run_baseline(gw, question, index, corpus, cfg);
    case Strategy::M1: return run_m1(gw, question, index, corpus, cfg);
    case Strategy::M2:
    case Strategy::M3:
    case Strategy::M4:
      if (decomposition == nullptr) {
        throw Error(ErrorKind::Strategy, std::string(to_string(strategy)) +
                                             " needs a decomposition for question " + question.id);
      }
      if (strategy == Strategy::M2) return run_m2(gw, question, *decomposition, index, corpus, cfg);
      if (strategy == Strategy::M3) return run_m3(gw, question, *decomposition, index, corpus, cfg);
      return run_m4(gw, question, *decomposition, index, corpus, cfg);
  }
  throw Error(ErrorKind::Strategy, "unhandled strategy");
}

}  // namespace subqrag::rag
