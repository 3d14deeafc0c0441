#include "subqrag/compare.hpp"

#include <json.hpp>

#include "subqrag/text.hpp"

namespace subqrag::compare {

using nlohmann::json;

std::string build_judge_prompt(const MainQuestion& question, const std::string& response_a,
                               const std::string& response_b) {
  return "You are comparing two responses to the same question. Decide which response answers "
         "the question better overall, weighing completeness, relevance, and clarity. You must "
         "pick exactly one winner.\n\n"
         "Question: " +
         question.text +
         "\n\n"
         "Response A: " +
         response_a +
         "\n\n"
         "Response B: " +
         response_b +
         "\n\nWinner:\n\n"
         R"(Respond with a strict JSON object of the form {"winner": "A" | "B"} and nothing else.)";
}

namespace {

PassVerdict parse_winner(const std::string& completion) {
  try {
    json parsed = json::parse(completion);
    const std::string winner = parsed.at("winner").get<std::string>();
    if (winner == "A") return PassVerdict::A;
    if (winner == "B") return PassVerdict::B;
    throw Error(ErrorKind::Decode, "winner must be \"A\" or \"B\", got \"" + winner + "\"");
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Decode, e.what());
  }
}

}  // namespace

PassVerdict judge_pair(gateway::Gateway& gw, const MainQuestion& question,
                       const std::string& answer_a, const std::string& answer_b) {
  if (text::count_words(answer_a) == 0 || text::count_words(answer_b) == 0) {
    throw Error(ErrorKind::IncompleteInput, "pairwise judging needs two non-empty answers");
  }
  const std::string prompt = build_judge_prompt(question, answer_a, answer_b);
  auto request = gw.make_request(prompt);
  try {
    return parse_winner(gw.chat(request));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Decode) throw;
  }
  try {
    return parse_winner(gw.chat_fresh(request));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Decode) throw;
    throw Error(ErrorKind::Judgment,
                "unparseable winner for question " + question.id + ": " + e.what());
  }
}

PairVerdict judge_pair_debiased(PairJudge& judge, const MainQuestion& question,
                                const std::string& method_a, const std::string& answer_a,
                                const std::string& method_b, const std::string& answer_b) {
  PairVerdict verdict;
  verdict.question_id = question.id;
  verdict.method_a = method_a;
  verdict.method_b = method_b;
  verdict.first_pass = judge.judge(question, answer_a, answer_b);
  // Swapped presentation; a "first" vote now favors answer_b.
  const PassVerdict swapped = judge.judge(question, answer_b, answer_a);
  verdict.second_pass = swapped == PassVerdict::A ? PassVerdict::B : PassVerdict::A;
  if (verdict.first_pass == PassVerdict::A && verdict.second_pass == PassVerdict::A) {
    verdict.outcome = Outcome::AWins;
  } else if (verdict.first_pass == PassVerdict::B && verdict.second_pass == PassVerdict::B) {
    verdict.outcome = Outcome::BWins;
  } else {
    verdict.outcome = Outcome::Split;
  }
  return verdict;
}

WinRateMatrix win_rate_matrix(const std::vector<PairVerdict>& verdicts,
                              const std::vector<std::string>& methods) {
  const std::size_t n = methods.size();
  auto index_of = [&](const std::string& m) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < n; ++i) {
      if (methods[i] == m) return i;
    }
    return std::nullopt;
  };

  // wins[i][j]: decisive wins of i over j; splits are shared per pair.
  std::vector<std::vector<double>> wins(n, std::vector<double>(n, 0.0));
  std::vector<std::vector<std::size_t>> comparisons(n, std::vector<std::size_t>(n, 0));
  for (const auto& v : verdicts) {
    const auto a = index_of(v.method_a);
    const auto b = index_of(v.method_b);
    if (!a || !b) continue;  // verdicts outside the requested method set
    ++comparisons[*a][*b];
    ++comparisons[*b][*a];
    switch (v.outcome) {
      case Outcome::AWins: wins[*a][*b] += 1.0; break;
      case Outcome::BWins: wins[*b][*a] += 1.0; break;
      case Outcome::Split:
        wins[*a][*b] += 0.5;
        wins[*b][*a] += 0.5;
        break;
    }
  }

  WinRateMatrix matrix;
  matrix.methods = methods;
  matrix.cells.assign(n, std::vector<std::optional<double>>(n));
  std::string gaps;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (comparisons[i][j] == 0) {
        if (i < j) gaps += (gaps.empty() ? "" : ", ") + methods[i] + "/" + methods[j];
        continue;
      }
      matrix.cells[i][j] = wins[i][j] / static_cast<double>(comparisons[i][j]) * 100.0;
    }
  }
  if (!gaps.empty()) {
    throw Error(ErrorKind::IncompleteMatrix, "no verdicts for method pairs: " + gaps);
  }
  return matrix;
}

}  // namespace subqrag::compare
