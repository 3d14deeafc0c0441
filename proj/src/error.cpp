#include "subqrag/error.hpp"

namespace subqrag {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidFragment: return "invalid-fragment error";
    case ErrorKind::Template: return "template error";
    case ErrorKind::Provider: return "provider error";
    case ErrorKind::Decode: return "decode error";
    case ErrorKind::Configuration: return "configuration error";
    case ErrorKind::Decomposition: return "decomposition error";
    case ErrorKind::Classification: return "classification error";
    case ErrorKind::Judgment: return "judgment error";
    case ErrorKind::Lookup: return "lookup error";
    case ErrorKind::Join: return "join error";
    case ErrorKind::UndefinedMetric: return "undefined-metric error";
    case ErrorKind::Retrieval: return "retrieval error";
    case ErrorKind::Ingestion: return "ingestion error";
    case ErrorKind::Strategy: return "strategy error";
    case ErrorKind::IncompleteMatrix: return "incomplete-matrix error";
    case ErrorKind::IncompleteInput: return "incomplete-input error";
    case ErrorKind::Render: return "render error";
    case ErrorKind::Io: return "io error";
  }
  return "error";
}

}  // namespace subqrag
