#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ctrlab/kernel.hpp"
#include "ctrlab/linalg.hpp"
#include "ctrlab/polynomial.hpp"

namespace ctrlab {

// Smooth vector field on a single coordinate chart, backed by one polynomial per
// component. Jacobian and second-derivative tables are produced once by
// coefficient differentiation, so derivatives are exact.
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(std::vector<Polynomial> components);

  static VectorField zero(int dim);
  // Constant field e_axis.
  static VectorField coordinate(int dim, int axis);

  int dim() const { return static_cast<int>(components_.size()); }
  bool is_zero() const;
  const std::vector<Polynomial>& components() const { return components_; }

  Vector eval(const Vector& x) const;
  Matrix jacobian(const Vector& x) const;
  // x-derivative of the covector action x -> DX(x)^T w, i.e. sum_j w_j Hess X_j(x).
  Matrix weighted_hessian(const Vector& x, const Vector& w) const;

 private:
  std::vector<Polynomial> components_;
  std::vector<std::vector<Polynomial>> first_;                 // [j][k] = d X_j / d x_k
  std::vector<std::vector<std::vector<Polynomial>>> second_;  // [j][k][l]
};

// Symbolic bracket [X, Y] = DY X - DX Y as a new polynomial field.
VectorField bracket(const VectorField& x_field, const VectorField& y_field);

// Pointwise bracket DY(x) X(x) - DX(x) Y(x).
Vector lie_bracket(const VectorField& x_field, const VectorField& y_field, const Vector& x);

class Potential {
 public:
  Potential() = default;
  explicit Potential(Polynomial q, std::optional<double> upper_bound_hint = std::nullopt);

  static Potential zero(int dim);

  bool is_zero() const { return q_.is_zero(); }
  const Polynomial& polynomial() const { return q_; }
  std::optional<double> upper_bound_hint() const { return upper_bound_hint_; }

  double eval(const Vector& x) const { return q_.eval(x); }
  Vector gradient(const Vector& x) const;
  Matrix hessian(const Vector& x) const;

 private:
  Polynomial q_;
  std::vector<Polynomial> gradient_;
  std::vector<std::vector<Polynomial>> hessian_;
  std::optional<double> upper_bound_hint_;
};

// Axis-aligned box in which numerics are trusted.
struct Box {
  Vector lower;
  Vector upper;

  bool contains(const Vector& x) const;
  bool empty() const;
};

// The affine system  x' = X0(x) + sum_i u_i X_i(x)  together with the potential
// of the running cost (u^2 - Q(x)) / 2.
class ControlSystem {
 public:
  ControlSystem(std::string name, VectorField drift, std::vector<VectorField> controls,
                Potential potential, Box chart);

  const std::string& name() const { return name_; }
  int state_dim() const { return drift_.dim(); }
  int control_dim() const { return static_cast<int>(controls_.size()); }
  const VectorField& drift() const { return drift_; }
  const VectorField& control_field(int i) const { return controls_.at(i); }
  const std::vector<VectorField>& control_fields() const { return controls_; }
  const Potential& potential() const { return potential_; }
  const Box& chart() const { return chart_; }
  bool has_drift() const { return !drift_.is_zero(); }

  // X0(x) + sum_i u_i X_i(x)
  Vector velocity(const Vector& x, const Vector& u) const;
  // D_x of velocity
  Matrix velocity_jacobian(const Vector& x, const Vector& u) const;
  // m x d matrix with columns X_i(x)
  Matrix control_matrix(const Vector& x) const;
  // Allocation-free evaluator used by the integrators.
  const SystemKernel& kernel() const { return *kernel_; }

 private:
  std::string name_;
  VectorField drift_;
  std::vector<VectorField> controls_;
  Potential potential_;
  Box chart_;
  std::shared_ptr<const SystemKernel> kernel_;
};

// Piecewise-constant representative of an L^2 control: values(k, i) is channel i
// on interval k of a uniform grid over [0, T].
class Control {
 public:
  Control() = default;
  Control(double horizon, int intervals, int channels);
  Control(double horizon, Matrix values);

  static Control constant(double horizon, int intervals, const Vector& value);
  // Inverse of flat(): row-major (interval-major) layout.
  static Control from_flat(double horizon, int intervals, int channels, const Vector& flat);

  double horizon() const { return horizon_; }
  int intervals() const { return static_cast<int>(values_.rows()); }
  int channels() const { return static_cast<int>(values_.cols()); }
  double interval_length() const { return horizon_ / intervals(); }
  const Matrix& values() const { return values_; }
  Matrix& values() { return values_; }
  Vector value(int interval) const { return values_.row(interval).transpose(); }
  int interval_of(double t) const;

  Vector flat() const;
  double l2_norm_squared() const;
  double l2_norm() const;

  // Same function on a grid with `factor` times as many intervals.
  Control refined(int factor) const;

 private:
  double horizon_ = 0.0;
  Matrix values_;
};

// Exact L^2 pairing of two piecewise-constant controls on the same grid.
double l2_inner(const Control& u, const Control& v);

struct ProblemSpec {
  ControlSystem system;
  Vector x0;
  double horizon = 1.0;
  int intervals = 64;
  int substeps = 8;

  // Throws kShape / kConfig on inconsistent data.
  void validate() const;
  int state_dim() const { return system.state_dim(); }
  int control_dim() const { return system.control_dim(); }
  int total_steps() const { return intervals * substeps; }
  double step() const { return horizon / total_steps(); }
  Control zero_control() const { return Control(horizon, intervals, control_dim()); }
  ProblemSpec with_intervals(int n) const;
  ProblemSpec with_horizon(double t) const;
};

struct HormanderRank {
  int rank = 0;
  int depth = 0;
  int generators = 0;  // number of bracket fields evaluated
};

// Dimension of span{ ad_{Z1} ... ad_{Zk} X_i (x) : k <= depth, Z in {X0..Xd}, i >= 1 }.
// This is the ideal generated by the control fields, which equals the Lie algebra
// generated by the (ad X0)^j X_i. Reported as "rank at this depth"; a deficient
// value never proves the condition fails at higher depth.
HormanderRank weak_hormander_rank(const ControlSystem& system, const Vector& x, int depth);

inline constexpr int kDefaultBracketDepth = 4;

// Samples Q on a lattice of the chart and reports the largest value when it
// exceeds the declared upper bound hint. Empty when the hint holds (or is absent).
std::optional<double> potential_bound_violation(const ControlSystem& system, int samples_per_axis = 9);

}  // namespace ctrlab
