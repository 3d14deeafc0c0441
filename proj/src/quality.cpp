#include "subqrag/quality.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>
#include <unordered_map>

#include "subqrag/jsonl.hpp"
#include "subqrag/text.hpp"

namespace subqrag::quality {

using nlohmann::json;

CoverageVector coverage_vector(const LongFormAnswer& answer,
                               const decompose::Decomposition& decomposition,
                               const std::vector<CoverageJudgment>& judgments) {
  std::unordered_map<std::string, bool> covered;
  for (const auto& j : judgments) {
    if (j.target_kind == TargetKind::Answer && j.target_id == answer.system_id) {
      covered[j.subquestion_id] = j.covered;
    }
  }
  std::size_t totals[3] = {};
  std::size_t hits[3] = {};
  for (const auto& sq : decomposition.subquestions) {
    auto it = covered.find(sq.id);
    if (it == covered.end()) {
      throw Error(ErrorKind::IncompleteInput,
                  "missing answer judgment for sub-question " + sq.id + " against system " +
                      answer.system_id);
    }
    const int t = static_cast<int>(sq.qtype);
    ++totals[t];
    if (it->second) ++hits[t];
  }
  CoverageVector v;
  auto fraction = [](std::size_t hit, std::size_t total) -> std::optional<double> {
    if (total == 0) return std::nullopt;
    return static_cast<double>(hit) / static_cast<double>(total);
  };
  v.core = fraction(hits[0], totals[0]);
  v.background = fraction(hits[1], totals[1]);
  v.follow_up = fraction(hits[2], totals[2]);
  return v;
}

double rating(const RatingWeights& weights, const CoverageVector& v) {
  auto component = [](const std::optional<double>& c, const char* name) {
    if (!c) {
      std::cerr << "[quality] coverage component " << name << " absent, treated as 0\n";
      return 0.0;
    }
    return *c;
  };
  const double r = weights.core * component(v.core, "c_core") +
                   weights.background * component(v.background, "c_background") +
                   weights.follow_up * component(v.follow_up, "c_follow_up");
  if (!std::isfinite(r)) throw Error(ErrorKind::Configuration, "non-finite rating");
  return r;
}

Preference predict_preference(const RatingWeights& weights, const CoverageVector& a,
                              const CoverageVector& b) {
  const double ra = rating(weights, a);
  const double rb = rating(weights, b);
  if (ra > rb) return Preference::APreferred;
  if (rb > ra) return Preference::BPreferred;
  return Preference::Tie;
}

namespace {

const CoverageVector& vector_for(const VectorSet& vectors, const LongFormAnswer& answer) {
  auto it = vectors.find({answer.question_id, answer.system_id});
  if (it == vectors.end()) {
    throw Error(ErrorKind::IncompleteInput, "no coverage vector for question " +
                                                answer.question_id + ", system " +
                                                answer.system_id);
  }
  return it->second;
}

}  // namespace

double accuracy(const RatingWeights& weights, const std::vector<PreferencePair>& pairs,
                const VectorSet& vectors) {
  if (pairs.empty()) throw Error(ErrorKind::UndefinedMetric, "accuracy of an empty pair set");
  double credit = 0.0;
  for (const auto& pair : pairs) {
    const Preference predicted =
        predict_preference(weights, vector_for(vectors, pair.answer_a),
                           vector_for(vectors, pair.answer_b));
    if (predicted == Preference::Tie) {
      credit += 0.5;
    } else if (predicted == pair.label) {
      credit += 1.0;
    }
  }
  return credit / static_cast<double>(pairs.size());
}

std::vector<RatingWeights> default_grid() {
  std::vector<RatingWeights> grid;
  for (int b = -4; b <= 4; ++b) {
    for (int f = -4; f <= 4; ++f) {
      grid.push_back({1.0, 0.25 * b, 0.25 * f});
    }
  }
  return grid;
}

RatingWeights grid_search(const std::vector<RatingWeights>& grid,
                          const std::vector<PreferencePair>& validation,
                          const VectorSet& vectors) {
  if (grid.empty()) throw Error(ErrorKind::Configuration, "empty weight grid");
  if (validation.empty()) throw Error(ErrorKind::Configuration, "empty validation set");
  std::size_t best = 0;
  double best_accuracy = -1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double acc = accuracy(grid[i], validation, vectors);
    if (acc > best_accuracy) {
      best_accuracy = acc;
      best = i;
    }
  }
  return grid[best];
}

std::vector<PreferencePair> validation_split(const std::vector<PreferencePair>& pairs,
                                             std::size_t validation_size, std::uint64_t seed) {
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<PreferencePair> out;
  const std::size_t n = std::min(validation_size, pairs.size());
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(pairs[order[i]]);
  return out;
}

std::vector<PreferencePair> ingest_webgpt(const std::filesystem::path& raw_jsonl) {
  std::vector<PreferencePair> out;
  std::size_t counter = 0;
  jsonl::for_each_record(raw_jsonl, [&](const json& record, std::size_t line_no) {
    ++counter;
    std::string question_text;
    std::string question_id = "webgpt-" + std::to_string(counter);
    const auto q = record.find("question");
    if (q != record.end() && q->is_object()) {
      question_text = q->value("full_text", "");
      if (q->contains("id") && (*q)["id"].is_string()) question_id = (*q)["id"].get<std::string>();
    } else if (q != record.end() && q->is_string()) {
      question_text = q->get<std::string>();
    }
    if (question_text.empty()) {
      throw Error(ErrorKind::Ingestion,
                  raw_jsonl.string() + ":" + std::to_string(line_no) + ": missing question text");
    }
    const std::string normalized = text::normalize_whitespace(question_text);
    if (!text::starts_with_icase(normalized, "why") && !text::starts_with_icase(normalized, "how"))
      return;

    const double score_0 = record.value("score_0", 0.0);
    const double score_1 = record.value("score_1", 0.0);
    if (score_0 == score_1) return;  // tie, dropped

    const std::string answer_0 = record.value("answer_0", "");
    const std::string answer_1 = record.value("answer_1", "");
    if (text::count_words(answer_0) == 0 || text::count_words(answer_1) == 0) return;

    PreferencePair pair;
    pair.question_id = question_id;
    pair.answer_a = LongFormAnswer::make(question_id, "a", answer_0);
    pair.answer_b = LongFormAnswer::make(question_id, "b", answer_1);
    pair.label = score_0 > score_1 ? Preference::APreferred : Preference::BPreferred;
    out.push_back(std::move(pair));
  });
  return out;
}

void write_pairs_jsonl(const std::filesystem::path& path,
                       const std::vector<PreferencePair>& pairs) {
  jsonl::Writer w(path);
  for (const auto& pair : pairs) {
    w.write({{"question_id", pair.question_id},
             {"answer_a", pair.answer_a.text},
             {"answer_b", pair.answer_b.text},
             {"label", pair.label == Preference::APreferred ? "a" : "b"}});
  }
}

std::vector<PreferencePair> read_pairs_jsonl(const std::filesystem::path& path) {
  std::vector<PreferencePair> out;
  jsonl::for_each_record(path, [&](const json& record, std::size_t line_no) {
    PreferencePair pair;
    auto field = [&](const char* key) {
      if (!record.contains(key) || !record.at(key).is_string()) {
        throw Error(ErrorKind::Ingestion, path.string() + ":" + std::to_string(line_no) +
                                              ": missing string field \"" + key + "\"");
      }
      return record.at(key).get<std::string>();
    };
    pair.question_id = field("question_id");
    pair.answer_a = LongFormAnswer::make(pair.question_id, "a", field("answer_a"));
    pair.answer_b = LongFormAnswer::make(pair.question_id, "b", field("answer_b"));
    const std::string label = field("label");
    if (label == "a") {
      pair.label = Preference::APreferred;
    } else if (label == "b") {
      pair.label = Preference::BPreferred;
    } else {
      throw Error(ErrorKind::Ingestion, path.string() + ":" + std::to_string(line_no) +
                                            ": label must be \"a\" or \"b\"");
    }
    out.push_back(std::move(pair));
  });
  return out;
}

}  // namespace subqrag::quality
