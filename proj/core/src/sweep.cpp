#include "ctrlab/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "ctrlab/error.hpp"

namespace ctrlab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

CellLabel label_of(const ClassificationReport& rep, int m) {
  if (rep.candidates.status == SolveStatus::kUnreachable) return CellLabel::kUnreached;
  if (rep.smooth == Verdict::kTrue) return CellLabel::kSmooth;
  const bool abnormal = rep.class_x < m || (!rep.multipliers.empty() && rep.multipliers.front().is_abnormal());
  if (abnormal) return CellLabel::kAbnormalFlagged;
  if (rep.tame == Verdict::kTrue) return CellLabel::kTame;
  if (rep.fair == Verdict::kTrue) return CellLabel::kFair;
  return CellLabel::kInconclusive;
}

template <typename F>
void for_each_parallel(const std::vector<int>& items, int threads, F&& body) {
  const int workers = std::min<int>(threads, static_cast<int>(items.size()));
  if (workers <= 1) {
    for (int c : items) body(c);
    return;
  }
  std::vector<std::jthread> pool;
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < items.size(); i += workers) body(items[i]);
    });
  }
}

std::vector<int> neighbours(const GridSpec& grid, int i, int j, bool diagonal) {
  std::vector<int> out;
  for (int dj = -1; dj <= 1; ++dj) {
    for (int di = -1; di <= 1; ++di) {
      if (di == 0 && dj == 0) continue;
      if (!diagonal && di != 0 && dj != 0) continue;
      const int a = i + di, b = j + dj;
      if (a < 0 || b < 0 || a >= grid.nx() || b >= grid.ny()) continue;
      out.push_back(grid.index(a, b));
    }
  }
  return out;
}

}  // namespace

void GridSpec::validate(const ControlSystem& system) const {
  const int m = system.state_dim();
  if (axes.empty() || axes.size() > 2) throw Error(ErrorCategory::kConfig, "grid: one or two axes required");
  if (fixed.size() != m) throw Error(ErrorCategory::kConfig, "grid: fixed point has wrong dimension");
  for (const auto& ax : axes) {
    if (ax.coordinate < 0 || ax.coordinate >= m) throw Error(ErrorCategory::kConfig, "grid: axis coordinate out of range");
    if (ax.resolution < 2) throw Error(ErrorCategory::kConfig, "grid: resolution must be at least 2");
    if (!(ax.upper > ax.lower)) throw Error(ErrorCategory::kConfig, "grid: empty axis range");
    if (ax.lower < system.chart().lower[ax.coordinate] || ax.upper > system.chart().upper[ax.coordinate]) {
      throw Error(ErrorCategory::kConfig, "grid: axis range leaves the chart");
    }
  }
  if (axes.size() == 2 && axes[0].coordinate == axes[1].coordinate) {
    throw Error(ErrorCategory::kConfig, "grid: axes must use distinct coordinates");
  }
}

Vector GridSpec::point(int i, int j) const {
  Vector x = fixed;
  x[axes[0].coordinate] = axes[0].at(i);
  if (axes.size() > 1) x[axes[1].coordinate] = axes[1].at(j);
  return x;
}

std::string_view to_string(CellLabel label) {
  switch (label) {
    case CellLabel::kFair:
      return "fair";
    case CellLabel::kTame:
      return "tame";
    case CellLabel::kSmooth:
      return "smooth";
    case CellLabel::kAbnormalFlagged:
      return "abnormal-flagged";
    case CellLabel::kInconclusive:
      return "inconclusive";
    case CellLabel::kUnreached:
      return "unreached";
  }
  return "inconclusive";
}

ValueMap value_map(const ProblemSpec& spec, const GridSpec& grid, const SweepOptions& opts) {
  grid.validate(spec.system);
  const int m = spec.state_dim();
  const int cells = grid.size();
  ValueMap map{.grid = grid,
               .values = std::vector<double>(cells, kInf),
               .labels = std::vector<CellLabel>(cells, CellLabel::kUnreached),
               .jump_flags = std::vector<bool>(cells, false),
               .controls = std::vector<std::optional<Control>>(cells),
               .multipliers = std::vector<std::optional<Vector>>(cells)};

  auto solve_cell = [&](int c) {
    const int i = c % grid.nx();
    const int j = c / grid.nx();
    const Vector x = grid.point(i, j);
    std::vector<Control> seeds;
    if (opts.warm_start) {
      // Already-solved neighbours of the previous wavefront: (i-1, j), (i, j-1).
      int best = -1;
      for (int n : {i > 0 ? grid.index(i - 1, j) : -1, j > 0 ? grid.index(i, j - 1) : -1}) {
        if (n >= 0 && map.controls[n] && (best < 0 || map.values[n] < map.values[best])) best = n;
      }
      if (best >= 0) seeds.push_back(*map.controls[best]);
    }
    try {
      if (opts.classify) {
        ClassifyOptions co = opts.classify_options;
        co.solve = opts.solve;
        const ClassificationReport rep = classify_point(spec, x, co, seeds);
        map.labels[c] = label_of(rep, m);
        if (rep.candidates.status == SolveStatus::kOk) {
          map.values[c] = rep.candidates.best_cost();
          map.controls[c] = rep.candidates.candidates.front().control;
          if (rep.multipliers.front().is_normal()) map.multipliers[c] = rep.multipliers.front().normal.lambda_final;
        }
      } else {
        const CandidateSet set = solve_fixed_endpoint(spec, x, opts.solve, seeds);
        if (set.status == SolveStatus::kOk) {
          map.values[c] = set.best_cost();
          map.controls[c] = set.candidates.front().control;
          map.multipliers[c] = set.candidates.front().multiplier;
          map.labels[c] = CellLabel::kInconclusive;
        }
      }
    } catch (const Error&) {
      map.labels[c] = CellLabel::kUnreached;
      map.values[c] = kInf;
    }
  };

  if (!opts.warm_start) {
    std::vector<int> all(cells);
    for (int c = 0; c < cells; ++c) all[c] = c;
    for_each_parallel(all, opts.threads, solve_cell);
  } else {
    for (int wave = 0; wave < grid.nx() + grid.ny() - 1; ++wave) {
      std::vector<int> front;
      for (int j = 0; j < grid.ny(); ++j) {
        const int i = wave - j;
        if (i >= 0 && i < grid.nx()) front.push_back(grid.index(i, j));
      }
      for_each_parallel(front, opts.threads, solve_cell);
    }
  }

  const ContinuityDiagnostics diag = continuity_diagnostics(map);
  map.jump_flags = diag.jump;
  return map;
}

ContinuityDiagnostics continuity_diagnostics(const ValueMap& map, const std::function<double(const Vector&)>& refine) {
  const GridSpec& grid = map.grid;
  const int cells = grid.size();
  ContinuityDiagnostics out;
  out.oscillation.assign(cells, 0.0);
  out.jump.assign(cells, false);
  out.lsc_violation.assign(cells, false);
  out.suspect_tame.assign(cells, false);

  std::vector<double> diffs;
  double largest = 0.0;
  for (int j = 0; j < grid.ny(); ++j) {
    for (int i = 0; i < grid.nx(); ++i) {
      const double v = map.values[grid.index(i, j)];
      if (!std::isfinite(v)) continue;
      largest = std::max(largest, std::abs(v));
      if (i + 1 < grid.nx() && std::isfinite(map.values[grid.index(i + 1, j)])) {
        diffs.push_back(std::abs(map.values[grid.index(i + 1, j)] - v));
      }
      if (j + 1 < grid.ny() && std::isfinite(map.values[grid.index(i, j + 1)])) {
        diffs.push_back(std::abs(map.values[grid.index(i, j + 1)] - v));
      }
    }
  }
  double median = 0.0;
  if (!diffs.empty()) {
    std::nth_element(diffs.begin(), diffs.begin() + diffs.size() / 2, diffs.end());
    median = diffs[diffs.size() / 2];
  }
  out.kappa = std::max(kJumpFactor * median, 1e-12 * (1.0 + largest));

  for (int j = 0; j < grid.ny(); ++j) {
    for (int i = 0; i < grid.nx(); ++i) {
      const int c = grid.index(i, j);
      const double v = map.values[c];
      if (!std::isfinite(v)) continue;
      double lo = v, hi = v, max_step = 0.0, min_nb = kInf;
      for (int n : neighbours(grid, i, j, true)) {
        const double w = map.values[n];
        if (!std::isfinite(w)) continue;
        lo = std::min(lo, w);
        hi = std::max(hi, w);
      }
      for (int n : neighbours(grid, i, j, false)) {
        const double w = map.values[n];
        if (!std::isfinite(w)) continue;
        max_step = std::max(max_step, std::abs(w - v));
        min_nb = std::min(min_nb, w);
      }
      out.oscillation[c] = hi - lo;
      out.jump[c] = max_step > out.kappa;
      if (out.jump[c]) ++out.jump_count;
      if (std::isfinite(min_nb) && v - min_nb > out.kappa) {
        bool persists = true;
        if (refine) {
          const double refined = refine(grid.point(i, j));
          persists = refined - min_nb > out.kappa;
        }
        if (persists) {
          out.lsc_violation[c] = true;
          ++out.lsc_violation_count;
        }
      }
      const CellLabel lab = map.labels[c];
      if (lab == CellLabel::kTame || lab == CellLabel::kSmooth) {
        const auto nbs = neighbours(grid, i, j, false);
        const bool isolated = !nbs.empty() && std::all_of(nbs.begin(), nbs.end(), [&](int n) {
          return map.labels[n] == CellLabel::kAbnormalFlagged;
        });
        if (isolated) {
          out.suspect_tame[c] = true;
          ++out.suspect_tame_count;
        }
      }
    }
  }
  return out;
}

double lipschitz_estimate(const ValueMap& map, const std::vector<bool>& mask) {
  const GridSpec& grid = map.grid;
  if (static_cast<int>(mask.size()) != grid.size()) throw Error(ErrorCategory::kShape, "lipschitz: mask size mismatch");
  for (int c = 0; c < grid.size(); ++c) {
    if (mask[c] && !std::isfinite(map.values[c])) {
      throw Error(ErrorCategory::kRegion, "lipschitz: region touches an unreached cell");
    }
  }
  double best = 0.0;
  for (int j = 0; j < grid.ny(); ++j) {
    for (int i = 0; i < grid.nx(); ++i) {
      const int c = grid.index(i, j);
      if (!mask[c]) continue;
      if (i + 1 < grid.nx() && mask[grid.index(i + 1, j)]) {
        best = std::max(best, std::abs(map.values[grid.index(i + 1, j)] - map.values[c]) / grid.axes[0].spacing());
      }
      if (j + 1 < grid.ny() && mask[grid.index(i, j + 1)]) {
        best = std::max(best, std::abs(map.values[grid.index(i, j + 1)] - map.values[c]) / grid.axes[1].spacing());
      }
    }
  }
  return best;
}

}  // namespace ctrlab
