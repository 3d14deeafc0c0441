#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "subqrag/domain.hpp"
#include "subqrag/gateway.hpp"
#include "subqrag/quality.hpp"

namespace subqrag::compare {

enum class PassVerdict { A, B };
enum class Outcome { AWins, BWins, Split };

struct PairVerdict {
  std::string question_id;
  std::string method_a;
  std::string method_b;
  PassVerdict first_pass = PassVerdict::A;
  PassVerdict second_pass = PassVerdict::A;  // already un-swapped
  Outcome outcome = Outcome::Split;
};

/// One judging pass over a presentation order. Implementations must be
/// deterministic for fixed inputs.
class PairJudge {
 public:
  virtual ~PairJudge() = default;
  virtual PassVerdict judge(const MainQuestion& question, const std::string& first_text,
                            const std::string& second_text) = 0;
};

std::string build_judge_prompt(const MainQuestion& question, const std::string& response_a,
                               const std::string& response_b);

/// Binary winner from the judging prompt; the judge is offered no tie option.
PassVerdict judge_pair(gateway::Gateway& gw, const MainQuestion& question,
                       const std::string& answer_a, const std::string& answer_b);

class LlmJudge : public PairJudge {
 public:
  explicit LlmJudge(gateway::Gateway& gw) : gw_(gw) {}
  PassVerdict judge(const MainQuestion& question, const std::string& first_text,
                    const std::string& second_text) override {
    return judge_pair(gw_, question, first_text, second_text);
  }

 private:
  gateway::Gateway& gw_;
};

/// Deterministic judge scoring answers by weighted coverage rating. Forced
/// binary: exact ties go to the first-presented response.
class CoverageRatingJudge : public PairJudge {
 public:
  using RatingFn = std::function<double(const MainQuestion&, const std::string& answer_text)>;
  CoverageRatingJudge(RatingFn rate) : rate_(std::move(rate)) {}
  PassVerdict judge(const MainQuestion& question, const std::string& first_text,
                    const std::string& second_text) override {
    return rate_(question, second_text) > rate_(question, first_text) ? PassVerdict::B
                                                                      : PassVerdict::A;
  }

 private:
  RatingFn rate_;
};

/// Two passes with the presentation order swapped on the second; the outcome
/// is decisive only when both passes favor the same answer.
PairVerdict judge_pair_debiased(PairJudge& judge, const MainQuestion& question,
                                const std::string& method_a, const std::string& answer_a,
                                const std::string& method_b, const std::string& answer_b);

struct WinRateMatrix {
  std::vector<std::string> methods;
  // cells[i][j]: percentage of comparisons method i wins over method j;
  // the diagonal stays empty.
  std::vector<std::vector<std::optional<double>>> cells;
};

/// cells[i][j] = (wins_i + 0.5 * splits) / comparisons * 100 over every
/// verdict for the unordered pair {i, j}. A pair with no verdicts raises an
/// incomplete-matrix error naming the gaps.
WinRateMatrix win_rate_matrix(const std::vector<PairVerdict>& verdicts,
                              const std::vector<std::string>& methods);

}  // namespace subqrag::compare
