#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "subqrag/config.hpp"
#include "subqrag/gateway.hpp"
#include "subqrag/rag.hpp"

namespace subqrag::app {

/// Audit record for a pipeline run. Stage outputs are reproducible from
/// (inputs, config, warm cache); the manifest itself carries wall-clock
/// timestamps and is not part of that contract.
struct RunManifest {
  std::string run_id;  // digest of the config snapshot and input digests
  std::string config_snapshot;
  std::map<std::string, std::string> input_digests;   // path -> sha256
  std::map<std::string, std::string> output_digests;  // stage -> sha256
  std::map<std::string, std::string> outputs;         // stage -> path
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> errors;

  void write(const std::filesystem::path& path) const;
};

std::string sha256_file(const std::filesystem::path& path);

struct EvaluateResult {
  RunManifest manifest;
  std::filesystem::path subquestions_path;
  std::filesystem::path judgments_path;
  std::filesystem::path report_path;
  std::filesystem::path report_text_path;
};

/// decompose -> judge -> metrics over the JSONL dataset; emits
/// subquestions.jsonl, judgments.jsonl, report.json, report.txt and
/// manifest.json under out_dir.
EvaluateResult pipeline_evaluate(const std::filesystem::path& questions_path,
                                 const std::filesystem::path& answers_path,
                                 const std::filesystem::path& chunks_path, const Config& config,
                                 const std::filesystem::path& out_dir,
                                 gateway::Gateway* gw = nullptr);

struct ImproveResult {
  RunManifest manifest;
  std::filesystem::path subquestions_path;
  std::map<std::string, std::filesystem::path> answer_paths;  // method -> runs/<method>.jsonl
  std::filesystem::path winrates_path;
};

/// decompose -> index -> run strategies -> pairwise compare; emits per-method
/// answers under out_dir/runs/ plus winrates.json and manifest.json.
ImproveResult pipeline_improve(const std::filesystem::path& questions_path,
                               const std::filesystem::path& chunks_path, const Config& config,
                               const std::filesystem::path& out_dir,
                               const std::vector<rag::Strategy>& methods =
                                   {rag::Strategy::Baseline, rag::Strategy::M1, rag::Strategy::M2,
                                    rag::Strategy::M3, rag::Strategy::M4},
                               gateway::Gateway* gw = nullptr);

}  // namespace subqrag::app
