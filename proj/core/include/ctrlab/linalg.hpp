#pragma once

#include <Eigen/Core>

namespace ctrlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Relative singular-value cutoff used for every rank decision.
inline constexpr double kRankTolerance = 1e-8;

struct RankInfo {
  int rank = 0;
  Vector singular_values;  // descending
  double threshold = 0.0;  // absolute cutoff that was applied
};

// Numeric rank: count of sigma >= tol * sigma_max (sigma_max replaced by 1 when
// every singular value is zero).
RankInfo numeric_rank(const Matrix& a, double relative_tolerance = kRankTolerance);

// Orthonormal basis (columns) of the left null space {xi : xi^T a = 0} at the
// numeric-rank cutoff.
Matrix left_null_space(const Matrix& a, double relative_tolerance = kRankTolerance);

double relative_error(double value, double reference, double floor = 1e-300);

}  // namespace ctrlab
