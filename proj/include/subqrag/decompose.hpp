#pragma once

#include <string>
#include <vector>

#include "subqrag/domain.hpp"
#include "subqrag/gateway.hpp"

namespace subqrag::decompose {

struct Decomposition {
  std::string question_id;
  std::vector<SubQuestion> subquestions;  // non-empty, parent_id == question_id

  std::vector<const SubQuestion*> of_type(SubQuestionType t) const;
};

struct Options {
  int target_count = 20;
  int few_shot_count = 3;
};

/// First step: ask for the comprehensive collection, parse and deduplicate
/// (lowercase, punctuation stripped, whitespace collapsed) keeping completion
/// order. Unparseable after one re-ask raises a decomposition error.
std::vector<std::string> generate_subquestions(gateway::Gateway& gw, const MainQuestion& question,
                                               int target_count = 20);

/// Second step: classify one sub-question. `few_shot` is the rendered example
/// block. Out-of-set labels after one re-ask raise a classification error.
SubQuestionType classify_subquestion(gateway::Gateway& gw, const MainQuestion& question,
                                     const std::string& subq_text, const std::string& few_shot);

/// Generate then classify; sub-question ids are "<question_id>/sq<k>" with k
/// starting at 1. Per-sub-question classification failures drop that entry;
/// the question fails only when nothing survives.
Decomposition decompose_question(gateway::Gateway& gw, const MainQuestion& question,
                                 const Options& options = {});

std::vector<Decomposition> decompose_all(gateway::Gateway& gw,
                                         const std::vector<MainQuestion>& questions,
                                         const Options& options = {});

/// Regroups a flat subquestions.jsonl load into per-question decompositions,
/// validating parent ids against the question set.
std::vector<Decomposition> group_subquestions(const std::vector<MainQuestion>& questions,
                                              const std::vector<SubQuestion>& subquestions);

}  // namespace subqrag::decompose
