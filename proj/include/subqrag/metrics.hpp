#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "subqrag/coverage.hpp"
#include "subqrag/decompose.hpp"
#include "subqrag/domain.hpp"

namespace subqrag::metrics {

constexpr std::array<SubQuestionType, 3> kTypes = {
    SubQuestionType::Core, SubQuestionType::Background, SubQuestionType::FollowUp};

/// Empirical distribution of the four (answered x retrieved) scenarios for
/// one sub-question type. answered: the answer-target judgment is covered;
/// retrieved: at least one chunk-target judgment is covered.
struct ScenarioRow {
  std::size_t count = 0;
  double probs[2][2] = {{0.0, 0.0}, {0.0, 0.0}};  // [answered][retrieved]

  double probability(bool answered, bool retrieved) const {
    return probs[answered ? 1 : 0][retrieved ? 1 : 0];
  }
  double answered_rate() const { return probs[1][0] + probs[1][1]; }
  double retrieved_rate() const { return probs[0][1] + probs[1][1]; }

  static ScenarioRow from_counts(std::size_t neither, std::size_t retrieved_only,
                                 std::size_t answered_only, std::size_t both);
};

struct ScenarioTable {
  ScenarioRow core;
  ScenarioRow background;
  ScenarioRow follow_up;

  const ScenarioRow& row(SubQuestionType t) const;
  ScenarioRow& row(SubQuestionType t);
};

enum class Aggregation { Pooled, Macro };

/// Pooled (default): occurrence rates over all sub-questions across runs.
/// Macro: per-run probabilities averaged over runs with a nonzero type count.
ScenarioTable scenario_table(const std::vector<coverage::CoverageRun>& runs,
                             const std::vector<decompose::Decomposition>& decomps,
                             Aggregation aggregation = Aggregation::Pooled);

/// (answer coverage rate, retrieval coverage rate) for one type.
std::pair<double, double> metric_1_2(const ScenarioTable& table, SubQuestionType type);

/// P_core(answered, retrieved) / P_core(retrieved): how well retrieved core
/// knowledge makes it into the answer.
double metric_3(const ScenarioTable& table);

/// P_core(not answered, not retrieved) / P_core(not answered): headroom from
/// improving retrieval for core sub-questions.
double metric_4(const ScenarioTable& table);

/// Mean per-chunk cover fraction of core sub-questions answered in the final
/// answer minus the same mean over unanswered ones. Range [-1, 1].
double metric_5(const std::vector<coverage::CoverageRun>& runs,
                const std::vector<decompose::Decomposition>& decomps);

/// Mean follow-up addressing position minus the average of the mean core and
/// mean background positions, over answered sub-questions. Range [-100, 100].
double metric_6(const std::vector<coverage::CoverageRun>& runs,
                const std::vector<decompose::Decomposition>& decomps);

struct MetricValue {
  std::optional<double> value;
  std::string reason;          // set when the metric is undefined
  std::size_t population = 0;  // sub-questions the metric was computed over

  bool defined() const { return value.has_value(); }
};

struct PerType {
  MetricValue core;
  MetricValue background;
  MetricValue follow_up;

  const MetricValue& of(SubQuestionType t) const;
  MetricValue& of(SubQuestionType t);
};

struct MetricReport {
  std::string system_id;
  ScenarioTable scenarios;
  PerType metric1;
  PerType metric2;
  MetricValue metric3;
  MetricValue metric4;
  MetricValue metric5;
  MetricValue metric6;
};

/// Full report for one system; undefined metrics come back absent with a
/// reason, never as 0.
MetricReport compute_report(const std::string& system_id,
                            const std::vector<coverage::CoverageRun>& runs,
                            const std::vector<decompose::Decomposition>& decomps,
                            Aggregation aggregation = Aggregation::Pooled);

}  // namespace subqrag::metrics
