#include "ctrlab/error.hpp"

namespace ctrlab {

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kShape:
      return "shape";
    case ErrorCategory::kInadmissibleControl:
      return "inadmissible-control";
    case ErrorCategory::kNumericDegeneracy:
      return "numeric-degeneracy";
    case ErrorCategory::kConjugateObstruction:
      return "conjugate-obstruction";
    case ErrorCategory::kShootFailed:
      return "shoot-failed";
    case ErrorCategory::kUnreachable:
      return "unreachable";
    case ErrorCategory::kConfig:
      return "config";
    case ErrorCategory::kRegion:
      return "region";
  }
  return "unknown";
}

}  // namespace ctrlab
