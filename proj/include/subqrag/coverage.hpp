#pragma once

#include <string>
#include <vector>

#include "subqrag/decompose.hpp"
#include "subqrag/domain.hpp"
#include "subqrag/gateway.hpp"

namespace subqrag::coverage {

struct PairFailure {
  std::string subquestion_id;
  TargetKind target_kind = TargetKind::Answer;
  std::string target_id;
  std::string message;
};

/// Every (sub-question x target) judgment for one question and one answering
/// system. Targets are the answer plus each retrieved chunk.
struct CoverageRun {
  std::string question_id;
  std::string system_id;
  std::size_t answer_word_count = 0;
  std::vector<CoverageJudgment> judgments;
  std::vector<PairFailure> failures;
};

struct Options {
  std::size_t max_judge_chars = 8000;  // longer texts are truncated with a warning
};

/// Single-pair judgment. A "None" verdict or an unlocatable quote comes back
/// as covered=false; located quotes carry word-indexed fragments.
CoverageJudgment judge_coverage(gateway::Gateway& gw, const std::string& text,
                                const SubQuestion& subq, TargetKind target_kind,
                                const std::string& target_id, const Options& options = {});

/// Judges every sub-question against the answer and every chunk. Per-pair
/// failures are recorded; the run fails only when no pair succeeds.
CoverageRun judge_question(gateway::Gateway& gw, const MainQuestion& question,
                           const LongFormAnswer& answer, const std::vector<Chunk>& chunks,
                           const decompose::Decomposition& decomposition,
                           const Options& options = {});

/// Fraction of this run's chunks judged to cover the sub-question; 0 when the
/// run has no chunk judgments. Unknown ids raise a lookup error.
double chunk_cover_fraction(const CoverageRun& run, const std::string& subq_id);

/// Rebuilds per-(question, system) runs from a flat judgments load, joining
/// sub-question ids to decompositions and word counts to answers.
std::vector<CoverageRun> group_judgments(const std::vector<CoverageJudgment>& judgments,
                                         const std::vector<decompose::Decomposition>& decomps,
                                         const std::vector<LongFormAnswer>& answers);

}  // namespace subqrag::coverage
