#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "subqrag/decompose.hpp"
#include "subqrag/domain.hpp"

namespace subqrag::quality {

/// Per-type covered fraction of an answer. A component is absent when the
/// decomposition has no sub-question of that type.
struct CoverageVector {
  std::optional<double> core;
  std::optional<double> background;
  std::optional<double> follow_up;
};

struct RatingWeights {
  double core = 1.0;
  double background = 0.5;
  double follow_up = -1.0;

  bool operator==(const RatingWeights&) const = default;
};

enum class Preference { APreferred, BPreferred, Tie };

struct PreferencePair {
  std::string question_id;
  LongFormAnswer answer_a;
  LongFormAnswer answer_b;
  Preference label = Preference::APreferred;  // never Tie; ties are dropped at ingestion
};

/// Coverage vectors for answers keyed by (question_id, system_id).
using VectorSet = std::map<std::pair<std::string, std::string>, CoverageVector>;

CoverageVector coverage_vector(const LongFormAnswer& answer,
                               const decompose::Decomposition& decomposition,
                               const std::vector<CoverageJudgment>& judgments);

/// Weighted sum over the three coverage components; absent components count
/// as 0 with a logged note.
double rating(const RatingWeights& weights, const CoverageVector& v);

Preference predict_preference(const RatingWeights& weights, const CoverageVector& a,
                              const CoverageVector& b);

/// Fraction of pairs whose predicted preference matches the label; a Tie
/// prediction scores 0.5.
double accuracy(const RatingWeights& weights, const std::vector<PreferencePair>& pairs,
                const VectorSet& vectors);

/// w_core pinned at 1 (ratings are scale-invariant); the other two weights
/// sweep -1..1 in steps of 0.25.
std::vector<RatingWeights> default_grid();

/// Grid point with the best validation accuracy; ties go to the earliest
/// point in the grid.
RatingWeights grid_search(const std::vector<RatingWeights>& grid,
                          const std::vector<PreferencePair>& validation,
                          const VectorSet& vectors);

/// Seeded shuffle split: the first `validation_size` pairs after shuffling.
std::vector<PreferencePair> validation_split(const std::vector<PreferencePair>& pairs,
                                             std::size_t validation_size, std::uint64_t seed);

/// WebGPT-comparisons ingestion: keeps "why"/"how" questions, drops tied
/// scores, maps the score sign to the preference label. Answer sides get
/// system ids "a" and "b".
std::vector<PreferencePair> ingest_webgpt(const std::filesystem::path& raw_jsonl);

void write_pairs_jsonl(const std::filesystem::path& path,
                       const std::vector<PreferencePair>& pairs);
std::vector<PreferencePair> read_pairs_jsonl(const std::filesystem::path& path);

}  // namespace subqrag::quality
