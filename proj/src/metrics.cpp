#include "subqrag/metrics.hpp"

#include <unordered_map>
#include <unordered_set>

namespace subqrag::metrics {

ScenarioRow ScenarioRow::from_counts(std::size_t neither, std::size_t retrieved_only,
                                     std::size_t answered_only, std::size_t both) {
  ScenarioRow row;
  row.count = neither + retrieved_only + answered_only + both;
  if (row.count == 0) return row;
  const double n = static_cast<double>(row.count);
  row.probs[0][0] = static_cast<double>(neither) / n;
  row.probs[0][1] = static_cast<double>(retrieved_only) / n;
  row.probs[1][0] = static_cast<double>(answered_only) / n;
  row.probs[1][1] = static_cast<double>(both) / n;
  return row;
}

const ScenarioRow& ScenarioTable::row(SubQuestionType t) const {
  switch (t) {
    case SubQuestionType::Core: return core;
    case SubQuestionType::Background: return background;
    case SubQuestionType::FollowUp: return follow_up;
  }
  return core;
}

ScenarioRow& ScenarioTable::row(SubQuestionType t) {
  switch (t) {
    case SubQuestionType::Core: return core;
    case SubQuestionType::Background: return background;
    case SubQuestionType::FollowUp: return follow_up;
  }
  return core;
}

const MetricValue& PerType::of(SubQuestionType t) const {
  switch (t) {
    case SubQuestionType::Core: return core;
    case SubQuestionType::Background: return background;
    case SubQuestionType::FollowUp: return follow_up;
  }
  return core;
}

MetricValue& PerType::of(SubQuestionType t) {
  switch (t) {
    case SubQuestionType::Core: return core;
    case SubQuestionType::Background: return background;
    case SubQuestionType::FollowUp: return follow_up;
  }
  return core;
}

namespace {

struct SubqOutcome {
  bool answered = false;
  bool retrieved = false;
};

const decompose::Decomposition& find_decomposition(
    const std::vector<decompose::Decomposition>& decomps, const std::string& question_id) {
  for (const auto& d : decomps) {
    if (d.question_id == question_id) return d;
  }
  throw Error(ErrorKind::Join, "no decomposition for question " + question_id);
}

/// answered/retrieved flags per sub-question of one run. Missing judgments
/// contribute false.
std::unordered_map<std::string, SubqOutcome> run_outcomes(const coverage::CoverageRun& run) {
  std::unordered_map<std::string, SubqOutcome> out;
  for (const auto& j : run.judgments) {
    SubqOutcome& o = out[j.subquestion_id];
    if (j.target_kind == TargetKind::Answer) {
      o.answered = o.answered || j.covered;
    } else {
      o.retrieved = o.retrieved || j.covered;
    }
  }
  return out;
}

}  // namespace

ScenarioTable scenario_table(const std::vector<coverage::CoverageRun>& runs,
                             const std::vector<decompose::Decomposition>& decomps,
                             Aggregation aggregation) {
  ScenarioTable table;
  if (aggregation == Aggregation::Pooled) {
    std::size_t counts[3][2][2] = {};
    std::size_t totals[3] = {};
    for (const auto& run : runs) {
      const auto& decomp = find_decomposition(decomps, run.question_id);
      const auto outcomes = run_outcomes(run);
      for (const auto& sq : decomp.subquestions) {
        auto it = outcomes.find(sq.id);
        const SubqOutcome o = it == outcomes.end() ? SubqOutcome{} : it->second;
        const int t = static_cast<int>(sq.qtype);
        ++counts[t][o.answered ? 1 : 0][o.retrieved ? 1 : 0];
        ++totals[t];
      }
    }
    for (SubQuestionType t : kTypes) {
      const int i = static_cast<int>(t);
      table.row(t) = ScenarioRow::from_counts(counts[i][0][0], counts[i][0][1], counts[i][1][0],
                                              counts[i][1][1]);
    }
    return table;
  }

  // Macro: average per-run probabilities over runs where the type occurs.
  double sums[3][2][2] = {};
  std::size_t contributing[3] = {};
  std::size_t totals[3] = {};
  for (const auto& run : runs) {
    const auto& decomp = find_decomposition(decomps, run.question_id);
    const auto outcomes = run_outcomes(run);
    std::size_t counts[3][2][2] = {};
    std::size_t run_totals[3] = {};
    for (const auto& sq : decomp.subquestions) {
      auto it = outcomes.find(sq.id);
      const SubqOutcome o = it == outcomes.end() ? SubqOutcome{} : it->second;
      const int t = static_cast<int>(sq.qtype);
      ++counts[t][o.answered ? 1 : 0][o.retrieved ? 1 : 0];
      ++run_totals[t];
    }
    for (int t = 0; t < 3; ++t) {
      if (run_totals[t] == 0) continue;
      ++contributing[t];
      totals[t] += run_totals[t];
      for (int a = 0; a < 2; ++a)
        for (int r = 0; r < 2; ++r)
          sums[t][a][r] += static_cast<double>(counts[t][a][r]) /
                           static_cast<double>(run_totals[t]);
    }
  }
  for (SubQuestionType type : kTypes) {
    const int t = static_cast<int>(type);
    ScenarioRow& row = table.row(type);
    row.count = totals[t];
    if (contributing[t] == 0) continue;
    for (int a = 0; a < 2; ++a)
      for (int r = 0; r < 2; ++r)
        row.probs[a][r] = sums[t][a][r] / static_cast<double>(contributing[t]);
  }
  return table;
}

std::pair<double, double> metric_1_2(const ScenarioTable& table, SubQuestionType type) {
  const ScenarioRow& row = table.row(type);
  if (row.count == 0) {
    throw Error(ErrorKind::UndefinedMetric,
                "no sub-questions of type " + std::string(to_string(type)));
  }
  return {row.answered_rate(), row.retrieved_rate()};
}

double metric_3(const ScenarioTable& table) {
  const ScenarioRow& core = table.core;
  if (core.count == 0) throw Error(ErrorKind::UndefinedMetric, "no core sub-questions");
  const double retrieved = core.retrieved_rate();
  if (retrieved <= 0.0) {
    throw Error(ErrorKind::UndefinedMetric, "no core sub-question was retrieved");
  }
  return core.probability(true, true) / retrieved;
}

double metric_4(const ScenarioTable& table) {
  const ScenarioRow& core = table.core;
  if (core.count == 0) throw Error(ErrorKind::UndefinedMetric, "no core sub-questions");
  const double not_answered = core.probability(false, false) + core.probability(false, true);
  if (not_answered <= 0.0) {
    throw Error(ErrorKind::UndefinedMetric, "every core sub-question was answered");
  }
  return core.probability(false, false) / not_answered;
}

double metric_5(const std::vector<coverage::CoverageRun>& runs,
                const std::vector<decompose::Decomposition>& decomps) {
  double covered_sum = 0.0, uncovered_sum = 0.0;
  std::size_t covered_n = 0, uncovered_n = 0;
  for (const auto& run : runs) {
    const auto& decomp = find_decomposition(decomps, run.question_id);
    const auto outcomes = run_outcomes(run);
    for (const auto& sq : decomp.subquestions) {
      if (sq.qtype != SubQuestionType::Core) continue;
      if (outcomes.find(sq.id) == outcomes.end()) continue;  // no data for this pair
      const double fraction = coverage::chunk_cover_fraction(run, sq.id);
      if (outcomes.at(sq.id).answered) {
        covered_sum += fraction;
        ++covered_n;
      } else {
        uncovered_sum += fraction;
        ++uncovered_n;
      }
    }
  }
  if (covered_n == 0 || uncovered_n == 0) {
    throw Error(ErrorKind::UndefinedMetric,
                covered_n == 0 ? "no core sub-question is covered in the answer"
                               : "every core sub-question is covered in the answer");
  }
  return covered_sum / static_cast<double>(covered_n) -
         uncovered_sum / static_cast<double>(uncovered_n);
}

double metric_6(const std::vector<coverage::CoverageRun>& runs,
                const std::vector<decompose::Decomposition>& decomps) {
  double pos_sum[3] = {};
  std::size_t pos_n[3] = {};
  for (const auto& run : runs) {
    const auto& decomp = find_decomposition(decomps, run.question_id);
    std::unordered_map<std::string, SubQuestionType> type_of;
    for (const auto& sq : decomp.subquestions) type_of.emplace(sq.id, sq.qtype);
    for (const auto& j : run.judgments) {
      if (j.target_kind != TargetKind::Answer || !j.covered || !j.fragment) continue;
      auto it = type_of.find(j.subquestion_id);
      if (it == type_of.end()) {
        throw Error(ErrorKind::Join,
                    "judgment references unknown sub-question " + j.subquestion_id);
      }
      const int t = static_cast<int>(it->second);
      pos_sum[t] += addressing_position(run.answer_word_count, *j.fragment);
      ++pos_n[t];
    }
  }
  for (SubQuestionType type : kTypes) {
    if (pos_n[static_cast<int>(type)] == 0) {
      throw Error(ErrorKind::UndefinedMetric, "no answered sub-question of type " +
                                                  std::string(to_string(type)) +
                                                  " to take a position from");
    }
  }
  const double core = pos_sum[0] / static_cast<double>(pos_n[0]);
  const double background = pos_sum[1] / static_cast<double>(pos_n[1]);
  const double follow_up = pos_sum[2] / static_cast<double>(pos_n[2]);
  return follow_up - (core + background) / 2.0;
}

MetricReport compute_report(const std::string& system_id,
                            const std::vector<coverage::CoverageRun>& runs,
                            const std::vector<decompose::Decomposition>& decomps,
                            Aggregation aggregation) {
  MetricReport report;
  report.system_id = system_id;
  report.scenarios = scenario_table(runs, decomps, aggregation);

  for (SubQuestionType type : kTypes) {
    MetricValue& m1 = report.metric1.of(type);
    MetricValue& m2 = report.metric2.of(type);
    const std::size_t population = report.scenarios.row(type).count;
    try {
      auto [answer_rate, retrieval_rate] = metric_1_2(report.scenarios, type);
      m1.value = answer_rate;
      m2.value = retrieval_rate;
      m1.population = m2.population = population;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::UndefinedMetric) throw;
      m1.reason = m2.reason = e.what();
    }
  }

  auto fill = [](MetricValue& slot, auto&& compute, std::size_t population) {
    try {
      slot.value = compute();
      slot.population = population;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::UndefinedMetric) throw;
      slot.reason = e.what();
    }
  };
  const std::size_t core_count = report.scenarios.core.count;
  fill(report.metric3, [&] { return metric_3(report.scenarios); }, core_count);
  fill(report.metric4, [&] { return metric_4(report.scenarios); }, core_count);
  fill(report.metric5, [&] { return metric_5(runs, decomps); }, core_count);
  std::size_t answered_total = 0;
  for (SubQuestionType type : kTypes) {
    const ScenarioRow& row = report.scenarios.row(type);
    answered_total += static_cast<std::size_t>(row.answered_rate() *
                                               static_cast<double>(row.count) + 0.5);
  }
  fill(report.metric6, [&] { return metric_6(runs, decomps); }, answered_total);
  return report;
}

}  // namespace subqrag::metrics
