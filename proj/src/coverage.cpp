#include "subqrag/coverage.hpp"

#include <iostream>
#include <map>
#include <unordered_map>

#include <json.hpp>

#include "subqrag/parallel.hpp"
#include "subqrag/prompts.hpp"
#include "subqrag/text.hpp"

namespace subqrag::coverage {

using nlohmann::json;

namespace {

struct Verdict {
  bool covered = false;
  std::string quote;
};

Verdict parse_judgment(const std::string& completion) {
  const std::string trimmed = text::normalize_whitespace(completion);
  // The bare "None" escape hatch is part of the judging contract.
  if (text::to_lower(trimmed) == "none" || text::to_lower(trimmed) == "\"none\"") return {};
  try {
    json parsed = json::parse(completion);
    Verdict v;
    v.covered = parsed.at("covered").get<bool>();
    if (v.covered) {
      const json& quote = parsed.at("quote");
      if (!quote.is_string()) throw Error(ErrorKind::Decode, "covered judgment without a quote");
      v.quote = quote.get<std::string>();
    }
    return v;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Decode, e.what());
  }
}

}  // namespace

CoverageJudgment judge_coverage(gateway::Gateway& gw, const std::string& full_text,
                                const SubQuestion& subq, TargetKind target_kind,
                                const std::string& target_id, const Options& options) {
  std::string sent_text = full_text;
  if (options.max_judge_chars > 0 && sent_text.size() > options.max_judge_chars) {
    sent_text.resize(options.max_judge_chars);
    std::cerr << "[coverage] truncated " << to_string(target_kind) << " " << target_id << " to "
              << options.max_judge_chars << " chars for judging\n";
  }
  const auto tmpl = prompts::coverage_template();
  const std::string prompt =
      gateway::render(tmpl, {{"text", sent_text},
                             {"sub-question", subq.text},
                             {"few-shot-examples", prompts::coverage_few_shot()}});
  auto request = gw.make_request(prompt);

  Verdict verdict;
  try {
    verdict = parse_judgment(gw.chat(request));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Decode) throw;
    try {
      verdict = parse_judgment(gw.chat_fresh(request));
    } catch (const Error& retry) {
      if (retry.kind() != ErrorKind::Decode) throw;
      throw Error(ErrorKind::Judgment, "unparseable coverage judgment for sub-question " +
                                           subq.id + ": " + retry.what());
    }
  }

  CoverageJudgment judgment;
  judgment.subquestion_id = subq.id;
  judgment.target_kind = target_kind;
  judgment.target_id = target_id;
  if (verdict.covered) {
    // Quotes are located against the full text, not the truncated window.
    if (auto frag = locate_fragment(full_text, verdict.quote)) {
      judgment.covered = true;
      judgment.fragment = std::move(frag);
    } else {
      std::cerr << "[coverage] downgraded judgment for sub-question " << subq.id << " on "
                << to_string(target_kind) << " " << target_id
                << ": quote not found in target text\n";
    }
  }
  return judgment;
}

CoverageRun judge_question(gateway::Gateway& gw, const MainQuestion& question,
                           const LongFormAnswer& answer, const std::vector<Chunk>& chunks,
                           const decompose::Decomposition& decomposition,
                           const Options& options) {
  if (decomposition.question_id != question.id) {
    throw Error(ErrorKind::Join, "decomposition belongs to question " +
                                     decomposition.question_id + ", not " + question.id);
  }
  if (answer.question_id != question.id) {
    throw Error(ErrorKind::Join,
                "answer belongs to question " + answer.question_id + ", not " + question.id);
  }

  struct Pair {
    const SubQuestion* subq;
    const std::string* text;
    TargetKind kind;
    const std::string* target_id;
  };
  std::vector<Pair> pairs;
  pairs.reserve(decomposition.subquestions.size() * (1 + chunks.size()));
  for (const auto& sq : decomposition.subquestions) {
    pairs.push_back({&sq, &answer.text, TargetKind::Answer, &answer.system_id});
    for (const auto& chunk : chunks) {
      if (chunk.question_id != question.id) {
        throw Error(ErrorKind::Join,
                    "chunk " + chunk.id + " belongs to question " + chunk.question_id);
      }
      pairs.push_back({&sq, &chunk.text, TargetKind::Chunk, &chunk.id});
    }
  }

  CoverageRun run;
  run.question_id = question.id;
  run.system_id = answer.system_id;
  run.answer_word_count = answer.word_count;

  std::vector<std::optional<CoverageJudgment>> results(pairs.size());
  std::vector<std::string> errors(pairs.size());
  parallel_for(pairs.size(), static_cast<std::size_t>(gw.config().max_in_flight),
               [&](std::size_t i) {
                 const Pair& p = pairs[i];
                 try {
                   results[i] =
                       judge_coverage(gw, *p.text, *p.subq, p.kind, *p.target_id, options);
                 } catch (const Error& e) {
                   errors[i] = e.what();
                 }
               });

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (results[i]) {
      run.judgments.push_back(std::move(*results[i]));
    } else {
      run.failures.push_back(
          {pairs[i].subq->id, pairs[i].kind, *pairs[i].target_id, errors[i]});
    }
  }
  if (run.judgments.empty() && !pairs.empty()) {
    throw Error(ErrorKind::Judgment, "every coverage pair failed for question " + question.id +
                                         " (first: " + run.failures.front().message + ")");
  }
  return run;
}

double chunk_cover_fraction(const CoverageRun& run, const std::string& subq_id) {
  bool known = false;
  std::size_t chunk_total = 0;
  std::size_t chunk_covered = 0;
  for (const auto& j : run.judgments) {
    if (j.subquestion_id != subq_id) continue;
    known = true;
    if (j.target_kind == TargetKind::Chunk) {
      ++chunk_total;
      if (j.covered) ++chunk_covered;
    }
  }
  if (!known) {
    throw Error(ErrorKind::Lookup,
                "no judgments for sub-question " + subq_id + " in run for " + run.question_id);
  }
  if (chunk_total == 0) return 0.0;
  return static_cast<double>(chunk_covered) / static_cast<double>(chunk_total);
}

std::vector<CoverageRun> group_judgments(const std::vector<CoverageJudgment>& judgments,
                                         const std::vector<decompose::Decomposition>& decomps,
                                         const std::vector<LongFormAnswer>& answers) {
  std::unordered_map<std::string, const decompose::Decomposition*> by_subq;
  for (const auto& d : decomps) {
    for (const auto& sq : d.subquestions) by_subq.emplace(sq.id, &d);
  }
  std::map<std::pair<std::string, std::string>, std::size_t> answer_words;
  for (const auto& a : answers) answer_words[{a.question_id, a.system_id}] = a.word_count;

  // A run is keyed by (question, system). Chunk judgments join through the
  // sub-question's question; they apply to every system's run for it.
  std::map<std::pair<std::string, std::string>, CoverageRun> runs;
  std::unordered_map<std::string, std::vector<const CoverageJudgment*>> chunk_judgments;

  for (const auto& j : judgments) {
    auto it = by_subq.find(j.subquestion_id);
    if (it == by_subq.end()) {
      throw Error(ErrorKind::Join,
                  "judgment references unknown sub-question " + j.subquestion_id);
    }
    const std::string& qid = it->second->question_id;
    if (j.target_kind == TargetKind::Answer) {
      auto key = std::make_pair(qid, j.target_id);
      auto words = answer_words.find(key);
      if (words == answer_words.end()) {
        throw Error(ErrorKind::Join, "judgment references unknown answer (question " + qid +
                                         ", system " + j.target_id + ")");
      }
      CoverageRun& run = runs[key];
      run.question_id = qid;
      run.system_id = j.target_id;
      run.answer_word_count = words->second;
      run.judgments.push_back(j);
    } else {
      chunk_judgments[qid].push_back(&j);
    }
  }
  for (auto& [key, run] : runs) {
    for (const CoverageJudgment* j : chunk_judgments[key.first]) run.judgments.push_back(*j);
  }

  std::vector<CoverageRun> out;
  out.reserve(runs.size());
  for (auto& [key, run] : runs) out.push_back(std::move(run));
  return out;
}

}  // namespace subqrag::coverage
