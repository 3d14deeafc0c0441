#pragma once

#include <string>
#include <utility>
#include <vector>

#include "subqrag/domain.hpp"
#include "subqrag/gateway.hpp"

namespace subqrag::prompts {

/// Prompt for generating the comprehensive sub-question collection. The
/// target count is burned into the body; placeholders stay the fixed set.
gateway::PromptTemplate decompose_template(int target_count = 20);

/// Three-way type classification prompt ($question, $sub-question,
/// $few-shot-examples).
gateway::PromptTemplate classify_template();

/// Sub-question coverage judgment prompt ($text, $sub-question,
/// $few-shot-examples).
gateway::PromptTemplate coverage_template();

/// The core sub-question definition paragraph, used verbatim by the
/// definition-augmented generation strategy.
const std::string& core_definition();

struct FixtureDecomposition {
  std::string question;
  std::vector<std::pair<std::string, SubQuestionType>> subquestions;
};

/// Bundled reference decompositions used as few-shot material and test data.
const std::vector<FixtureDecomposition>& fixture_decompositions();

/// Formatted classification examples drawn from the bundled decompositions,
/// cycling through the three types. Labels are distinct from the live prompt
/// tail so scripted matching stays unambiguous.
std::string classification_few_shot(int count = 3);

/// Fixed set of three coverage examples (covered / uncovered /
/// partially-relevant).
std::string coverage_few_shot();

}  // namespace subqrag::prompts
