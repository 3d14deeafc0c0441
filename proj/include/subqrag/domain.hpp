#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace subqrag {

struct MainQuestion {
  std::string id;
  std::string text;  // non-empty after trim
};

enum class SubQuestionType { Core, Background, FollowUp };

std::string_view to_string(SubQuestionType t);
/// Accepts "core" | "background" | "follow_up" (also "follow-up"); throws Decode otherwise.
SubQuestionType subquestion_type_from_string(std::string_view s);

struct SubQuestion {
  std::string id;
  std::string parent_id;  // MainQuestion id
  std::string text;
  SubQuestionType qtype = SubQuestionType::Core;
};

struct Chunk {
  std::string id;
  std::string question_id;
  std::optional<std::string> source;
  std::string text;
};

struct LongFormAnswer {
  std::string question_id;
  std::string system_id;
  std::string text;
  std::size_t word_count = 0;  // whitespace tokens of the normalized text

  static LongFormAnswer make(std::string question_id, std::string system_id, std::string text);
};

/// Word-indexed span of a host text. end_word is exclusive; quote holds the
/// host's words[start_word..end_word) joined with single spaces.
struct TextFragment {
  std::size_t start_word = 0;
  std::size_t end_word = 0;
  std::string quote;
};

enum class TargetKind { Answer, Chunk };

std::string_view to_string(TargetKind k);
TargetKind target_kind_from_string(std::string_view s);

struct CoverageJudgment {
  std::string subquestion_id;
  TargetKind target_kind = TargetKind::Answer;
  std::string target_id;  // system_id for answers, chunk id for chunks
  bool covered = false;
  std::optional<TextFragment> fragment;  // present iff covered
};

/// Percentage position within the answer where the fragment starts:
/// 100 * start_word / word_count. Throws InvalidFragment on out-of-bounds
/// fragments.
double addressing_position(const LongFormAnswer& answer, const TextFragment& fragment);
double addressing_position(std::size_t host_word_count, const TextFragment& fragment);

/// Case-insensitive, whitespace-normalized word-aligned search of `quote`
/// within `host_text`; first match wins. The returned quote is rebuilt from
/// the host's own words so the fragment invariant holds exactly. Empty result
/// when the quote cannot be located.
std::optional<TextFragment> locate_fragment(std::string_view host_text, std::string_view quote);

// --- JSONL dataset files (one UTF-8 object per line) ---

std::vector<MainQuestion> read_questions_jsonl(const std::filesystem::path& path);
std::vector<SubQuestion> read_subquestions_jsonl(const std::filesystem::path& path);
std::vector<Chunk> read_chunks_jsonl(const std::filesystem::path& path);
std::vector<LongFormAnswer> read_answers_jsonl(const std::filesystem::path& path);
std::vector<CoverageJudgment> read_judgments_jsonl(const std::filesystem::path& path);

void write_questions_jsonl(const std::filesystem::path& path, const std::vector<MainQuestion>& rows);
void write_subquestions_jsonl(const std::filesystem::path& path, const std::vector<SubQuestion>& rows);
void write_chunks_jsonl(const std::filesystem::path& path, const std::vector<Chunk>& rows);
void write_answers_jsonl(const std::filesystem::path& path, const std::vector<LongFormAnswer>& rows);
void write_judgments_jsonl(const std::filesystem::path& path, const std::vector<CoverageJudgment>& rows);

}  // namespace subqrag
