#include "lanescape/error.h"

namespace lanescape {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kStructural: return "structural_error";
    case ErrorCode::kDomain: return "domain_error";
    case ErrorCode::kRejected: return "ineligible_region";
    case ErrorCode::kIdempotence: return "already_member";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kValidation: return "validation_error";
    case ErrorCode::kFormat: return "format_error";
    case ErrorCode::kStaleMap: return "stale_map";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kPlanning: return "planning_error";
    case ErrorCode::kNotFound: return "not_found";
  }
  return "unknown";
}

}  // namespace lanescape
