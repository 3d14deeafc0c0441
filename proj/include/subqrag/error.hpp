#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace subqrag {

enum class ErrorKind {
  InvalidFragment,
  Template,
  Provider,
  Decode,
  Configuration,
  Decomposition,
  Classification,
  Judgment,
  Lookup,
  Join,
  UndefinedMetric,
  Retrieval,
  Ingestion,
  Strategy,
  IncompleteMatrix,
  IncompleteInput,
  Render,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Exception carrying a typed error kind. `retryable` marks transient
/// provider failures the gateway is allowed to retry.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, bool retryable = false)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        retryable_(retryable) {}

  ErrorKind kind() const { return kind_; }
  bool retryable() const { return retryable_; }

 private:
  ErrorKind kind_;
  bool retryable_;
};

}  // namespace subqrag
