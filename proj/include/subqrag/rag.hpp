#pragma once

#include <span>
#include <string>
#include <vector>

#include "subqrag/coverage.hpp"
#include "subqrag/decompose.hpp"
#include "subqrag/domain.hpp"
#include "subqrag/gateway.hpp"

namespace subqrag::rag {

struct IndexEntry {
  std::string chunk_id;
  std::vector<double> embedding;
  double norm = 0.0;
};

/// Exact in-memory index: one embedding per chunk, all sharing dimension.
class VectorIndex {
 public:
  static VectorIndex build(gateway::Gateway& gw, const std::vector<Chunk>& chunks);

  const std::vector<IndexEntry>& entries() const { return entries_; }
  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return entries_.size(); }

  void add(std::string chunk_id, std::vector<double> embedding);

 private:
  std::vector<IndexEntry> entries_;
  std::size_t dimension_ = 0;
};

/// Cosine similarity of the query against every entry, OpenMP-parallel.
/// Entry order is preserved; results are bit-identical to the serial kernel.
std::vector<double> cosine_scores(const VectorIndex& index, std::span<const double> query);

/// Serial reference kernel, kept for equivalence tests and benchmarks.
std::vector<double> cosine_scores_serial(const VectorIndex& index, std::span<const double> query);

struct Scored {
  std::string chunk_id;
  double score = 0.0;
};

/// Top-k by cosine similarity, ties broken by lexicographic chunk id. Returns
/// fewer than k only when the index is smaller; an empty index is a retrieval
/// error.
std::vector<Scored> top_k_by_vector(const VectorIndex& index, std::span<const double> query,
                                    std::size_t k);

/// Embeds the query through the gateway, then top_k_by_vector.
std::vector<Scored> retrieve(const VectorIndex& index, gateway::Gateway& gw,
                             const std::string& query, std::size_t k);

enum class Strategy { Baseline, M1, M2, M3, M4 };

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

/// Splits sources longer than one window into fixed-size word windows with
/// overlap; shorter chunks pass through unchanged. Split pieces get ids
/// "<id>#w<k>".
std::vector<Chunk> window_chunks(const std::vector<Chunk>& chunks, std::size_t window_words = 512,
                                 std::size_t overlap_words = 64);

struct RagConfig {
  std::size_t top_k = 10;
  std::size_t target_words = 300;
  Strategy strategy = Strategy::Baseline;
  std::size_t rerank_top_k = 0;  // 0: same as top_k
  coverage::Options judge;       // used by the rerank strategy

  std::size_t effective_rerank_top_k() const { return rerank_top_k ? rerank_top_k : top_k; }
};

/// The generation prompt fixture: question, numbered contexts in rank order,
/// the word target, and any strategy-specific instruction block.
std::string build_generation_prompt(const MainQuestion& question,
                                    const std::vector<const Chunk*>& contexts,
                                    std::size_t target_words, const std::string& extra);

std::string build_synthesis_prompt(
    const MainQuestion& question,
    const std::vector<std::pair<std::string, std::string>>& sub_answers,
    std::size_t target_words);

/// Strategy-specific instruction blocks prepended to the generation prompt.
std::string m1_instruction();
std::string m2_instruction(const std::vector<const SubQuestion*>& core);

LongFormAnswer generate_answer(gateway::Gateway& gw, const MainQuestion& question,
                               const std::vector<const Chunk*>& contexts, const RagConfig& config,
                               const std::string& extra_instruction = {},
                               const std::string& system_id = {});

LongFormAnswer run_baseline(gateway::Gateway& gw, const MainQuestion& question,
                            const VectorIndex& index, const std::vector<Chunk>& corpus,
                            const RagConfig& config);

/// Query augmented with the core sub-question definition; retrieval is the
/// baseline's.
LongFormAnswer run_m1(gateway::Gateway& gw, const MainQuestion& question,
                      const VectorIndex& index, const std::vector<Chunk>& corpus,
                      const RagConfig& config);

/// Retrieval query concatenates the core sub-questions; generation lists them.
/// Falls back to the baseline when the decomposition has no core entries.
LongFormAnswer run_m2(gateway::Gateway& gw, const MainQuestion& question,
                      const decompose::Decomposition& decomposition, const VectorIndex& index,
                      const std::vector<Chunk>& corpus, const RagConfig& config);

struct PooledChunk {
  std::string chunk_id;
  double best_score = 0.0;     // max retrieval score across contributing queries
  std::size_t covered_core = 0;  // distinct core sub-questions the chunk covers
};

/// Rerank order: covered core count desc, retrieval score desc, id asc.
void rerank_pool(std::vector<PooledChunk>& pool);

/// Pooled retrieval for the question plus every core sub-question, reranked
/// by how many core sub-questions each chunk covers.
LongFormAnswer run_m3(gateway::Gateway& gw, const MainQuestion& question,
                      const decompose::Decomposition& decomposition, const VectorIndex& index,
                      const std::vector<Chunk>& corpus, const RagConfig& config);

/// Per-core-sub-question retrieval and sub-answer generation, then one
/// synthesis call. Requires at least one core sub-question.
LongFormAnswer run_m4(gateway::Gateway& gw, const MainQuestion& question,
                      const decompose::Decomposition& decomposition, const VectorIndex& index,
                      const std::vector<Chunk>& corpus, const RagConfig& config);

LongFormAnswer run_strategy(gateway::Gateway& gw, Strategy strategy, const MainQuestion& question,
                            const decompose::Decomposition* decomposition,
                            const VectorIndex& index, const std::vector<Chunk>& corpus,
                            const RagConfig& config);

}  // namespace subqrag::rag
