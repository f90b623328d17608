#include "error.hpp"

namespace convohate {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kArgument: return "argument error";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kSchema: return "schema violation";
    case ErrorCode::kLabel: return "label error";
    case ErrorCode::kMissingLabel: return "missing label";
    case ErrorCode::kEmptyCorpus: return "empty corpus";
    case ErrorCode::kShape: return "shape error";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kConfiguration: return "configuration error";
    case ErrorCode::kValidation: return "validation error";
    case ErrorCode::kAlignment: return "alignment error";
    case ErrorCode::kIo: return "I/O error";
    case ErrorCode::kStaleArtifact: return "stale artifact";
    case ErrorCode::kMissingArtifact: return "missing artifact";
    case ErrorCode::kLocked: return "work directory locked";
  }
  return "unknown error";
}

}  // namespace convohate
