#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ctrlab/direct.hpp"
#include "ctrlab/extremal.hpp"
#include "ctrlab/sweep.hpp"

namespace ctrlab::tools {

// Everything a run can read from its config file. Only the sections a command
// needs are required; parse errors name the offending key.
struct RunConfig {
  ProblemSpec spec;
  std::string system_label;  // builtin name or the custom system's name
  std::optional<Vector> target{};
  SolveOptions solve{};
  ShootOptions shoot{};
  std::optional<Vector> p0{};
  std::optional<Control> control{};
  std::vector<Control> seeds{};
  std::optional<GridSpec> grid{};
  bool sweep_classify = false;
  bool warm_start = true;
  bool refine_lsc = false;
  int hormander_depth = kDefaultBracketDepth;
  std::optional<Vector> point{};
  std::vector<std::string> bench_systems{};
  int bench_directions = 5;
  std::string text{};  // raw config, hashed into the manifest
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Benchmark runs may omit the config file entirely.
RunConfig default_bench_config();

}  // namespace ctrlab::tools
