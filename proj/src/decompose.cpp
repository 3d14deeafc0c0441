#include "subqrag/decompose.hpp"

#include <iostream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "subqrag/parallel.hpp"
#include "subqrag/prompts.hpp"
#include "subqrag/text.hpp"

namespace subqrag::decompose {

using nlohmann::json;

std::vector<const SubQuestion*> Decomposition::of_type(SubQuestionType t) const {
  std::vector<const SubQuestion*> out;
  for (const auto& sq : subquestions) {
    if (sq.qtype == t) out.push_back(&sq);
  }
  return out;
}

namespace {

std::vector<std::string> parse_subquestion_list(const std::string& completion) {
  try {
    json parsed = json::parse(completion);
    const json& arr = parsed.at("sub_questions");
    if (!arr.is_array()) throw Error(ErrorKind::Decode, "sub_questions is not an array");
    std::vector<std::string> out;
    for (const auto& item : arr) out.push_back(item.get<std::string>());
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Decode, e.what());
  }
}

}  // namespace

std::vector<std::string> generate_subquestions(gateway::Gateway& gw, const MainQuestion& question,
                                               int target_count) {
  const auto tmpl = prompts::decompose_template(target_count);
  const std::string prompt = gateway::render(tmpl, {{"question", question.text}});
  auto request = gw.make_request(prompt);

  std::vector<std::string> raw;
  try {
    raw = parse_subquestion_list(gw.chat(request));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Decode) throw;
    try {
      raw = parse_subquestion_list(gw.chat_fresh(request));
    } catch (const Error& retry) {
      if (retry.kind() != ErrorKind::Decode) throw;
      throw Error(ErrorKind::Decomposition, "unparseable sub-question list for question " +
                                                question.id + ": " + retry.what());
    }
  }

  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (auto& text_raw : raw) {
    std::string normalized = text::normalize_whitespace(text_raw);
    if (normalized.empty()) continue;
    if (!seen.insert(text::dedup_key(normalized)).second) continue;
    out.push_back(std::move(normalized));
  }
  if (out.empty()) {
    throw Error(ErrorKind::Decomposition,
                "decomposition of question " + question.id + " produced no sub-questions");
  }
  return out;
}

namespace {

SubQuestionType parse_type(const std::string& completion) {
  try {
    json parsed = json::parse(completion);
    return subquestion_type_from_string(parsed.at("type").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Decode, e.what());
  }
}

}  // namespace

SubQuestionType classify_subquestion(gateway::Gateway& gw, const MainQuestion& question,
                                     const std::string& subq_text, const std::string& few_shot) {
  const auto tmpl = prompts::classify_template();
  const std::string prompt = gateway::render(tmpl, {{"question", question.text},
                                                    {"sub-question", subq_text},
                                                    {"few-shot-examples", few_shot}});
  auto request = gw.make_request(prompt);
  try {
    return parse_type(gw.chat(request));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Decode) throw;
  }
  try {
    return parse_type(gw.chat_fresh(request));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Decode) throw;
    throw Error(ErrorKind::Classification,
                "bad type label for sub-question \"" + subq_text + "\": " + e.what());
  }
}

Decomposition decompose_question(gateway::Gateway& gw, const MainQuestion& question,
                                 const Options& options) {
  const std::vector<std::string> texts =
      generate_subquestions(gw, question, options.target_count);
  const std::string few_shot = prompts::classification_few_shot(options.few_shot_count);

  std::vector<std::optional<SubQuestionType>> types(texts.size());
  std::vector<std::string> failures(texts.size());
  parallel_for(texts.size(), static_cast<std::size_t>(gw.config().max_in_flight),
               [&](std::size_t i) {
                 try {
                   types[i] = classify_subquestion(gw, question, texts[i], few_shot);
                 } catch (const Error& e) {
                   failures[i] = e.what();
                 }
               });

  Decomposition decomp;
  decomp.question_id = question.id;
  std::size_t k = 0;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (!types[i]) {
      std::cerr << "[decompose] dropped sub-question of " << question.id << ": " << failures[i]
                << "\n";
      continue;
    }
    SubQuestion sq;
    sq.id = question.id + "/sq" + std::to_string(++k);
    sq.parent_id = question.id;
    sq.text = texts[i];
    sq.qtype = *types[i];
    decomp.subquestions.push_back(std::move(sq));
  }
  if (decomp.subquestions.empty()) {
    throw Error(ErrorKind::Decomposition,
                "every sub-question of question " + question.id + " failed classification");
  }
  return decomp;
}

std::vector<Decomposition> decompose_all(gateway::Gateway& gw,
                                         const std::vector<MainQuestion>& questions,
                                         const Options& options) {
  std::vector<Decomposition> out;
  out.reserve(questions.size());
  for (const auto& q : questions) out.push_back(decompose_question(gw, q, options));
  return out;
}

std::vector<Decomposition> group_subquestions(const std::vector<MainQuestion>& questions,
                                              const std::vector<SubQuestion>& subquestions) {
  std::unordered_map<std::string, std::size_t> index;
  std::vector<Decomposition> out;
  out.reserve(questions.size());
  for (const auto& q : questions) {
    index.emplace(q.id, out.size());
    out.push_back({q.id, {}});
  }
  for (const auto& sq : subquestions) {
    auto it = index.find(sq.parent_id);
    if (it == index.end()) {
      throw Error(ErrorKind::Join, "sub-question " + sq.id + " references unknown question " +
                                       sq.parent_id);
    }
    out[it->second].subquestions.push_back(sq);
  }
  return out;
}

}  // namespace subqrag::decompose
