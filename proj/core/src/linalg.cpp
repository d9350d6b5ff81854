#include "ctrlab/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

namespace ctrlab {

RankInfo numeric_rank(const Matrix& a, double relative_tolerance) {
  RankInfo info;
  if (a.size() == 0) {
    info.singular_values = Vector(0);
    return info;
  }
  Eigen::JacobiSVD<Matrix> svd(a);
  info.singular_values = svd.singularValues();
  const double top = info.singular_values.size() > 0 ? info.singular_values[0] : 0.0;
  info.threshold = relative_tolerance * (top > 0.0 ? top : 1.0);
  for (Eigen::Index i = 0; i < info.singular_values.size(); ++i) {
    if (info.singular_values[i] >= info.threshold && info.singular_values[i] > 0.0) ++info.rank;
  }
  return info;
}

Matrix left_null_space(const Matrix& a, double relative_tolerance) {
  const Eigen::Index rows = a.rows();
  if (a.cols() == 0) return Matrix::Identity(rows, rows);
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU);
  const Vector& s = svd.singularValues();
  const double top = s.size() > 0 ? s[0] : 0.0;
  const double cutoff = relative_tolerance * (top > 0.0 ? top : 1.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] >= cutoff && s[i] > 0.0) ++rank;
  }
  return svd.matrixU().rightCols(rows - rank);
}

double relative_error(double value, double reference, double floor) {
  return std::abs(value - reference) / std::max(std::abs(reference), floor);
}

}  // namespace ctrlab
