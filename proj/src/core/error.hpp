#pragma once

#include <stdexcept>
#include <string>

namespace convohate {

// Mirrors the C API status codes in convohate.h; keep the numbering in sync.
enum class ErrorCode {
  kArgument = 1,
  kParse = 2,
  kSchema = 3,
  kLabel = 4,
  kMissingLabel = 5,
  kEmptyCorpus = 6,
  kShape = 7,
  kDivergence = 8,
  kConfiguration = 9,
  kValidation = 10,
  kAlignment = 11,
  kIo = 12,
  kStaleArtifact = 13,
  kMissingArtifact = 14,
  kLocked = 15,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace convohate
