#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ctrlab/error.hpp"

namespace ctrlab::tools {

struct CliOptions {
  std::string command;
  std::string config_path;  // optional for bench
  std::string out_dir;      // defaults to out/<command>
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  int verbosity = 1;
};

std::vector<std::string> command_names();

// Exit status for a failed run: 10 + the category's position, so scripts can
// branch on it without parsing stderr.
int exit_code(ErrorCategory category);
inline constexpr int kExitOracleFailure = 1;
inline constexpr int kExitInternal = 2;

std::string sha256_hex(const std::string& data);

// Runs one command; prints a one-line summary to `out` and any error to `err`
// as "error[<category>]: <message>".
int run(const CliOptions& options, std::ostream& out, std::ostream& err);

}  // namespace ctrlab::tools
