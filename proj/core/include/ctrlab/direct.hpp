#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ctrlab/endpoint.hpp"

namespace ctrlab {

struct SolveOptions {
  double penalty_init = 10.0;
  double penalty_growth = 10.0;
  int max_outer = 30;
  int max_inner = 400;
  double grad_tol = 1e-7;        // L^2 norm of the augmented-Lagrangian gradient
  double constraint_tol = 1e-8;  // |E(u) - x|, scaled by max(1, |x - x0|)
  int multistart_count = 16;
  std::uint64_t seed = 1;
  int threads = 1;
  int lbfgs_memory = 12;
  int polish_steps = 6;  // Gauss-Newton feasibility projections after the outer loop

  void validate() const;
};

// Relative cost gap defining "near-optimal" candidates.
inline constexpr double kNearOptimalGap = 1e-3;
// Relative L^2 distance below which two candidates are the same minimizer.
inline constexpr double kClusterRadius = 1e-2;

struct Candidate {
  Control control;
  double endpoint_residual = std::numeric_limits<double>::infinity();
  double cost_value = std::numeric_limits<double>::infinity();
  bool converged = false;
  // Final-time covector with lambda dE = dC (negated augmented-Lagrangian multiplier).
  Vector multiplier;
  double stationarity = std::numeric_limits<double>::infinity();
  int start_index = -1;  // -1 for user seeds
  int iterations = 0;
};

enum class SolveStatus { kOk, kUnreachable };

struct CandidateSet {
  Vector target;
  SolveStatus status = SolveStatus::kUnreachable;
  std::vector<Candidate> candidates;          // converged only, ascending cost
  std::vector<std::vector<int>> clusters;     // indices into candidates
  int attempted = 0;

  double best_cost() const;
  // Candidates whose cost is within kNearOptimalGap (1 + |V|) of the best.
  std::vector<int> near_optimal() const;
  // Clusters that contain at least one near-optimal candidate.
  int near_optimal_cluster_count() const;
};

// Single local solve from `start` (augmented Lagrangian, L-BFGS inner loop with
// backtracking, Gauss-Newton feasibility polish).
Candidate local_solve(const ProblemSpec& spec, const Vector& target, const Control& start,
                      const SolveOptions& opts);

// Multistart: every user seed plus opts.multistart_count Gaussian starts scaled
// by |x - x0| / T. Deterministic for a given seed, independent of thread count.
CandidateSet solve_fixed_endpoint(const ProblemSpec& spec, const Vector& target, const SolveOptions& opts,
                                  std::span<const Control> seeds = {});

// Minimum cost over converged candidates, +infinity if none.
double value_estimate(const ProblemSpec& spec, const Vector& target, const SolveOptions& opts,
                      std::span<const Control> seeds = {});

// Single-linkage clustering by L^2 distance < kClusterRadius * max(1, |u|).
std::vector<std::vector<int>> cluster_candidates(const std::vector<Candidate>& candidates);

}  // namespace ctrlab
