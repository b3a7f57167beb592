#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lanescape {

enum class ErrorCode {
  kParse,
  kStructural,
  kDomain,
  kRejected,
  kIdempotence,
  kConflict,
  kValidation,
  kFormat,
  kStaleMap,
  kIo,
  kPlanning,
  kNotFound,
};

const char* ErrorCodeName(ErrorCode code);

// Single exception type for the engine. `details` carries the individual
// failures when several checks fail at once (validation lists all of them).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::vector<std::string> details = {})
      : std::runtime_error(message),
        code_(code),
        details_(std::move(details)) {}

  ErrorCode code() const { return code_; }
  const std::vector<std::string>& details() const { return details_; }

 private:
  ErrorCode code_;
  std::vector<std::string> details_;
};

}  // namespace lanescape
