#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "ctrlab/direct.hpp"
#include "ctrlab/extremal.hpp"

namespace ctrlab {

// Normalized least-squares residual below which a control "admits a normal lift".
inline constexpr double kNormalTolerance = 1e-4;

struct RankResult {
  int rank = 0;
  Vector singular_values;
};

RankResult rank_dE(const ProblemSpec& spec, const Control& u);

enum class MultiplierKind { kNormal, kAbnormal };

struct Multiplier {
  Vector lambda_final;  // covector at x = E(u)
  int nu = -1;          // -1 normal, 0 abnormal
  double residual = 0.0;
  MultiplierKind kind() const { return nu == 0 ? MultiplierKind::kAbnormal : MultiplierKind::kNormal; }
};

struct MultiplierAnalysis {
  Multiplier normal;               // least-squares fit, always present; admitted iff residual <= tolerance
  std::vector<Multiplier> abnormal;  // unit left-singular vectors with sigma < tau * sigma_max
  int rank = 0;
  int state_dim = 0;

  bool is_normal() const { return normal.residual <= kNormalTolerance; }
  bool is_abnormal() const { return !abnormal.empty(); }
  bool strictly_normal() const { return is_normal() && rank == state_dim; }
  bool strictly_abnormal() const { return is_abnormal() && !is_normal(); }
  // All multipliers that are admitted.
  std::vector<Multiplier> list() const;
};

// Lagrange multipliers of u as a candidate for reaching x (x is only used to
// check that E(u) = x up to the chart scale).
MultiplierAnalysis multipliers(const ProblemSpec& spec, const Control& u, const Vector& x);

struct AbnormalStructure {
  Matrix kernel_basis;                 // m x (m - rank), orthonormal columns
  std::optional<Vector> normal_shift;  // eta_x when a normal multiplier exists
  Matrix pulled_back_basis;            // kernel basis transported to the fiber at x0
  std::optional<Vector> pulled_back_shift;
  // Dimension of eta + ker (dE)^* (or of the kernel when strictly abnormal).
  int dimension() const { return static_cast<int>(kernel_basis.cols()); }
  bool affine() const { return normal_shift.has_value(); }
};

AbnormalStructure xi_space(const ProblemSpec& spec, const Control& u, const Vector& x);

enum class Verdict { kTrue, kFalse, kInconclusive };
enum class Confidence { kCertifiedNumeric, kHeuristic, kInconclusive };

std::string_view to_string(Verdict v);
std::string_view to_string(Confidence c);

struct ClassifyOptions {
  SolveOptions solve;
  ShootOptions shoot;
  bool run_shooting = true;
};

struct ClassificationReport {
  Vector target;
  CandidateSet candidates;
  std::vector<int> ranks;  // per candidate
  std::vector<MultiplierAnalysis> multipliers;
  std::vector<int> near_optimal;
  int class_x = -1;  // min rank over near-optimal candidates, -1 if unreached
  AbnormalStructure xi;
  Verdict fair = Verdict::kInconclusive;
  Verdict tame = Verdict::kInconclusive;
  Verdict smooth = Verdict::kInconclusive;
  bool conjugate_cleared = false;
  std::vector<double> conjugate;  // conjugate times along the shot extremal
  std::optional<ExtremalArc> extremal;
  std::optional<Vector> lambda_final;  // normal covector of the best candidate
  Confidence confidence = Confidence::kInconclusive;
  int hormander_rank = -1;  // weak Hormander rank at the target, default depth
  std::vector<std::string> notes;
};

ClassificationReport classify_point(const ProblemSpec& spec, const Vector& target, const ClassifyOptions& opts,
                                    std::span<const Control> seeds = {});

}  // namespace ctrlab
