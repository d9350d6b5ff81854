#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctrlab {

// Machine-readable failure categories. The CLI prints these verbatim and maps
// them to distinct exit codes.
enum class ErrorCategory {
  kShape,
  kInadmissibleControl,
  kNumericDegeneracy,
  kConjugateObstruction,
  kShootFailed,
  kUnreachable,
  kConfig,
  kRegion,
};

std::string_view to_string(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace ctrlab
