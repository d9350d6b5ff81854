#pragma once

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "ctrlab/classify.hpp"

namespace ctrlab {

struct GridAxis {
  int coordinate = 0;
  double lower = 0.0;
  double upper = 1.0;
  int resolution = 2;

  double at(int i) const { return lower + (upper - lower) * i / (resolution - 1); }
  double spacing() const { return (upper - lower) / (resolution - 1); }
};

// One- or two-dimensional slice of the state space; coordinates not on an axis
// keep their value from `fixed`.
struct GridSpec {
  std::vector<GridAxis> axes;
  Vector fixed;

  void validate(const ControlSystem& system) const;
  int nx() const { return axes.at(0).resolution; }
  int ny() const { return axes.size() > 1 ? axes[1].resolution : 1; }
  int size() const { return nx() * ny(); }
  int index(int i, int j) const { return i + nx() * j; }
  Vector point(int i, int j) const;
};

enum class CellLabel { kFair, kTame, kSmooth, kAbnormalFlagged, kInconclusive, kUnreached };

std::string_view to_string(CellLabel label);

struct ValueMap {
  GridSpec grid;
  std::vector<double> values;  // +infinity for unreached cells
  std::vector<CellLabel> labels;
  std::vector<bool> jump_flags;
  std::vector<std::optional<Control>> controls;     // best control per cell
  std::vector<std::optional<Vector>> multipliers;  // normal covector of the best control, when admitted
};

struct SweepOptions {
  SolveOptions solve;
  ClassifyOptions classify_options;
  bool classify = false;
  bool warm_start = true;
  int threads = 1;
};

// Cells are solved in anti-diagonal wavefronts; with warm starts each cell adds
// the best control of its already-solved neighbours (left / below) to the usual
// multistart set, so warm values never exceed cold ones. The order does not
// depend on the thread count.
ValueMap value_map(const ProblemSpec& spec, const GridSpec& grid, const SweepOptions& opts);

struct ContinuityDiagnostics {
  std::vector<double> oscillation;  // max - min over the 3x3 (or 3-cell) neighbourhood
  std::vector<bool> jump;
  std::vector<bool> lsc_violation;
  std::vector<bool> suspect_tame;  // isolated tame cells surrounded by abnormal-flagged ones
  double kappa = 0.0;              // jump threshold
  int jump_count = 0;
  int lsc_violation_count = 0;
  int suspect_tame_count = 0;
};

inline constexpr double kJumpFactor = 5.0;

// `refine` (optional) re-estimates the value at a point with a finer control
// grid; a cell above its neighbours by more than kappa is an lsc violation only
// if refinement does not bring it down.
ContinuityDiagnostics continuity_diagnostics(const ValueMap& map,
                                             const std::function<double(const Vector&)>& refine = nullptr);

// max |dV| / dx over adjacent cell pairs inside the mask; kRegion if the mask
// touches an unreached cell.
double lipschitz_estimate(const ValueMap& map, const std::vector<bool>& mask);

}  // namespace ctrlab
