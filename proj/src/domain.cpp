#include "subqrag/domain.hpp"

#include <unordered_map>
#include <unordered_set>

#include "subqrag/jsonl.hpp"
#include "subqrag/text.hpp"

namespace subqrag {

std::string_view to_string(SubQuestionType t) {
  switch (t) {
    case SubQuestionType::Core: return "core";
    case SubQuestionType::Background: return "background";
    case SubQuestionType::FollowUp: return "follow_up";
  }
  return "core";
}

SubQuestionType subquestion_type_from_string(std::string_view s) {
  std::string v = text::to_lower(text::normalize_whitespace(s));
  if (v == "core") return SubQuestionType::Core;
  if (v == "background") return SubQuestionType::Background;
  if (v == "follow_up" || v == "follow-up" || v == "followup") return SubQuestionType::FollowUp;
  throw Error(ErrorKind::Decode, "unknown sub-question type \"" + std::string(s) + "\"");
}

std::string_view to_string(TargetKind k) {
  return k == TargetKind::Answer ? "answer" : "chunk";
}

TargetKind target_kind_from_string(std::string_view s) {
  if (s == "answer") return TargetKind::Answer;
  if (s == "chunk") return TargetKind::Chunk;
  throw Error(ErrorKind::Decode, "unknown target kind \"" + std::string(s) + "\"");
}

LongFormAnswer LongFormAnswer::make(std::string question_id, std::string system_id,
                                    std::string text_in) {
  LongFormAnswer a;
  a.question_id = std::move(question_id);
  a.system_id = std::move(system_id);
  a.text = std::move(text_in);
  a.word_count = text::count_words(a.text);
  if (a.word_count == 0) {
    throw Error(ErrorKind::Ingestion, "answer text is empty (question " + a.question_id +
                                          ", system " + a.system_id + ")");
  }
  return a;
}

double addressing_position(std::size_t host_word_count, const TextFragment& fragment) {
  if (fragment.start_word >= fragment.end_word || fragment.end_word > host_word_count) {
    throw Error(ErrorKind::InvalidFragment,
                "fragment [" + std::to_string(fragment.start_word) + "," +
                    std::to_string(fragment.end_word) + ") out of bounds for a " +
                    std::to_string(host_word_count) + "-word text");
  }
  return 100.0 * static_cast<double>(fragment.start_word) / static_cast<double>(host_word_count);
}

double addressing_position(const LongFormAnswer& answer, const TextFragment& fragment) {
  return addressing_position(answer.word_count, fragment);
}

std::optional<TextFragment> locate_fragment(std::string_view host_text, std::string_view quote) {
  const std::vector<std::string> host_words = text::words(host_text);
  const std::vector<std::string> quote_words = text::words(quote);
  if (quote_words.empty() || quote_words.size() > host_words.size()) return std::nullopt;

  std::vector<std::string> host_lower(host_words.size());
  for (std::size_t i = 0; i < host_words.size(); ++i) host_lower[i] = text::to_lower(host_words[i]);
  std::vector<std::string> quote_lower(quote_words.size());
  for (std::size_t i = 0; i < quote_words.size(); ++i)
    quote_lower[i] = text::to_lower(quote_words[i]);

  const std::size_t m = quote_lower.size();
  for (std::size_t start = 0; start + m <= host_lower.size(); ++start) {
    bool match = true;
    for (std::size_t j = 0; j < m; ++j) {
      if (host_lower[start + j] != quote_lower[j]) {
        match = false;
        break;
      }
    }
    if (match) {
      TextFragment frag;
      frag.start_word = start;
      frag.end_word = start + m;
      frag.quote = text::join(
          std::vector<std::string>(host_words.begin() + static_cast<std::ptrdiff_t>(start),
                                   host_words.begin() + static_cast<std::ptrdiff_t>(start + m)),
          " ");
      return frag;
    }
  }
  return std::nullopt;
}

// --- JSONL io ---

namespace {

std::string require_string(const nlohmann::json& record, const char* key,
                           const std::filesystem::path& path, std::size_t line_no) {
  auto it = record.find(key);
  if (it == record.end() || !it->is_string()) {
    throw Error(ErrorKind::Ingestion, path.string() + ":" + std::to_string(line_no) +
                                          ": missing string field \"" + key + "\"");
  }
  return it->get<std::string>();
}

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line_no,
                       const std::string& message) {
  throw Error(ErrorKind::Ingestion,
              path.string() + ":" + std::to_string(line_no) + ": " + message);
}

}  // namespace

std::vector<MainQuestion> read_questions_jsonl(const std::filesystem::path& path) {
  std::vector<MainQuestion> out;
  std::unordered_set<std::string> seen;
  jsonl::for_each_record(path, [&](const nlohmann::json& record, std::size_t line_no) {
    MainQuestion q{require_string(record, "id", path, line_no),
                   require_string(record, "text", path, line_no)};
    if (text::normalize_whitespace(q.text).empty()) fail(path, line_no, "question text is empty");
    if (!seen.insert(q.id).second) fail(path, line_no, "duplicate question id \"" + q.id + "\"");
    out.push_back(std::move(q));
  });
  return out;
}

std::vector<SubQuestion> read_subquestions_jsonl(const std::filesystem::path& path) {
  std::vector<SubQuestion> out;
  std::unordered_set<std::string> seen;
  jsonl::for_each_record(path, [&](const nlohmann::json& record, std::size_t line_no) {
    SubQuestion sq;
    sq.id = require_string(record, "id", path, line_no);
    sq.parent_id = require_string(record, "parent_id", path, line_no);
    sq.text = require_string(record, "text", path, line_no);
    if (text::normalize_whitespace(sq.text).empty())
      fail(path, line_no, "sub-question text is empty");
    try {
      sq.qtype = subquestion_type_from_string(require_string(record, "qtype", path, line_no));
    } catch (const Error& e) {
      fail(path, line_no, e.what());
    }
    if (!seen.insert(sq.id).second)
      fail(path, line_no, "duplicate sub-question id \"" + sq.id + "\"");
    out.push_back(std::move(sq));
  });
  return out;
}

std::vector<Chunk> read_chunks_jsonl(const std::filesystem::path& path) {
  std::vector<Chunk> out;
  std::unordered_set<std::string> seen;  // keyed (question_id, id)
  jsonl::for_each_record(path, [&](const nlohmann::json& record, std::size_t line_no) {
    Chunk c;
    c.id = require_string(record, "id", path, line_no);
    c.question_id = require_string(record, "question_id", path, line_no);
    if (auto it = record.find("source"); it != record.end() && it->is_string())
      c.source = it->get<std::string>();
    c.text = require_string(record, "text", path, line_no);
    if (text::normalize_whitespace(c.text).empty()) fail(path, line_no, "chunk text is empty");
    if (!seen.insert(c.question_id + "\x1f" + c.id).second)
      fail(path, line_no, "duplicate chunk id \"" + c.id + "\" for question " + c.question_id);
    out.push_back(std::move(c));
  });
  return out;
}

std::vector<LongFormAnswer> read_answers_jsonl(const std::filesystem::path& path) {
  std::vector<LongFormAnswer> out;
  jsonl::for_each_record(path, [&](const nlohmann::json& record, std::size_t line_no) {
    try {
      out.push_back(LongFormAnswer::make(require_string(record, "question_id", path, line_no),
                                         require_string(record, "system_id", path, line_no),
                                         require_string(record, "text", path, line_no)));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Ingestion) fail(path, line_no, e.what());
      throw;
    }
  });
  return out;
}

std::vector<CoverageJudgment> read_judgments_jsonl(const std::filesystem::path& path) {
  std::vector<CoverageJudgment> out;
  jsonl::for_each_record(path, [&](const nlohmann::json& record, std::size_t line_no) {
    CoverageJudgment j;
    j.subquestion_id = require_string(record, "subquestion_id", path, line_no);
    try {
      j.target_kind = target_kind_from_string(require_string(record, "target_kind", path, line_no));
    } catch (const Error& e) {
      fail(path, line_no, e.what());
    }
    j.target_id = require_string(record, "target_id", path, line_no);
    auto covered_it = record.find("covered");
    if (covered_it == record.end() || !covered_it->is_boolean())
      fail(path, line_no, "missing boolean field \"covered\"");
    j.covered = covered_it->get<bool>();
    auto frag_it = record.find("fragment");
    const bool has_fragment = frag_it != record.end() && !frag_it->is_null();
    if (has_fragment != j.covered) {
      fail(path, line_no, "covered/fragment coupling violated (covered=" +
                              std::string(j.covered ? "true" : "false") + ")");
    }
    if (has_fragment) {
      const nlohmann::json& f = *frag_it;
      if (!f.is_object() || !f.contains("start_word") || !f.contains("end_word") ||
          !f.contains("quote")) {
        fail(path, line_no, "malformed fragment object");
      }
      TextFragment frag;
      frag.start_word = f.at("start_word").get<std::size_t>();
      frag.end_word = f.at("end_word").get<std::size_t>();
      frag.quote = f.at("quote").get<std::string>();
      if (frag.start_word >= frag.end_word) fail(path, line_no, "fragment has empty word span");
      j.fragment = std::move(frag);
    }
    out.push_back(std::move(j));
  });
  return out;
}

void write_questions_jsonl(const std::filesystem::path& path,
                           const std::vector<MainQuestion>& rows) {
  jsonl::Writer w(path);
  for (const auto& q : rows) w.write({{"id", q.id}, {"text", q.text}});
}

void write_subquestions_jsonl(const std::filesystem::path& path,
                              const std::vector<SubQuestion>& rows) {
  jsonl::Writer w(path);
  for (const auto& sq : rows) {
    w.write({{"id", sq.id},
             {"parent_id", sq.parent_id},
             {"text", sq.text},
             {"qtype", std::string(to_string(sq.qtype))}});
  }
}

void write_chunks_jsonl(const std::filesystem::path& path, const std::vector<Chunk>& rows) {
  jsonl::Writer w(path);
  for (const auto& c : rows) {
    nlohmann::json record{{"id", c.id}, {"question_id", c.question_id}, {"text", c.text}};
    record["source"] = c.source ? nlohmann::json(*c.source) : nlohmann::json(nullptr);
    w.write(record);
  }
}

void write_answers_jsonl(const std::filesystem::path& path,
                         const std::vector<LongFormAnswer>& rows) {
  jsonl::Writer w(path);
  for (const auto& a : rows) {
    w.write({{"question_id", a.question_id}, {"system_id", a.system_id}, {"text", a.text}});
  }
}

void write_judgments_jsonl(const std::filesystem::path& path,
                           const std::vector<CoverageJudgment>& rows) {
  jsonl::Writer w(path);
  for (const auto& j : rows) {
    nlohmann::json record{{"subquestion_id", j.subquestion_id},
                          {"target_kind", std::string(to_string(j.target_kind))},
                          {"target_id", j.target_id},
                          {"covered", j.covered}};
    if (j.fragment) {
      record["fragment"] = {{"start_word", j.fragment->start_word},
                            {"end_word", j.fragment->end_word},
                            {"quote", j.fragment->quote}};
    } else {
      record["fragment"] = nullptr;
    }
    w.write(record);
  }
}

}  // namespace subqrag
