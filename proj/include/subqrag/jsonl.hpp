#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

#include "subqrag/error.hpp"

namespace subqrag::jsonl {

/// Calls fn(record, line_number) for every non-blank line. Parse failures
/// surface as Ingestion errors carrying file and line.
inline void for_each_record(const std::filesystem::path& path,
                            const std::function<void(const nlohmann::json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Ingestion,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!record.is_object()) {
      throw Error(ErrorKind::Ingestion,
                  path.string() + ":" + std::to_string(line_no) + ": expected a JSON object");
    }
    fn(record, line_no);
  }
}

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path) {
    if (!out_) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  }

  void write(const nlohmann::json& record) { out_ << record.dump() << "\n"; }

 private:
  std::ofstream out_;
};

}  // namespace subqrag::jsonl
