#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "ctrlab/model.hpp"

namespace ctrlab {

// Any state component beyond this magnitude counts as blow-up.
inline constexpr double kBlowupMagnitude = 1e8;

// Admissible trajectory on the RK4 node grid (intervals * substeps + 1 nodes).
// blowup == true means the control is numerically outside the admissible set;
// the node arrays then stop at the last accepted node.
struct Trajectory {
  std::vector<double> times;
  Matrix states;  // m x nodes
  Control control;
  int substeps = 1;
  bool blowup = false;
  // int_0^T Q(x_u(t)) dt, RK4 (Simpson on stage states) quadrature.
  double potential_integral = 0.0;

  int nodes() const { return static_cast<int>(times.size()); }
  Vector state(int node) const { return states.col(node); }
  Vector final_state() const { return states.col(states.cols() - 1); }
};

Trajectory integrate(const ProblemSpec& spec, const Control& u);

// Fundamental matrices M(0, t_k) of the linearized flow along a trajectory,
// integrated with the same RK4 stages as the state. pushforward(s, t) is the
// differential of the flow from time s to time t.
class VariationalFlow {
 public:
  VariationalFlow(Trajectory base, std::vector<Matrix> fundamental);

  const Trajectory& base() const { return base_; }
  int nodes() const { return base_.nodes(); }
  const Matrix& fundamental(int node) const { return fundamental_.at(node); }

  // Index of the stored node at time t; kShape if t is not a node.
  int node_index(double t) const;

  Matrix pushforward(int s_node, int t_node) const;
  Matrix pushforward_at(double s, double t) const { return pushforward(node_index(s), node_index(t)); }

  // Adjoint action: the covector p at time t pulled back to time s,
  // i.e. p^T pushforward(s, t).
  Vector pullback_covector(int s_node, int t_node, const Vector& p) const;
  Vector pullback_covector_at(double s, double t, const Vector& p) const {
    return pullback_covector(node_index(s), node_index(t), p);
  }

 private:
  Trajectory base_;
  std::vector<Matrix> fundamental_;
};

// Throws kInadmissibleControl when the trajectory blows up.
VariationalFlow integrate_variational(const ProblemSpec& spec, const Control& u);

// Exact linearization of the discrete RK4 map, one block per control interval,
// for the state augmented with the running potential integral y = (x, z),
// z' = Q(x).
struct DiscreteLinearization {
  Trajectory trajectory;
  std::vector<Matrix> interval_jacobian;     // (m+1) x (m+1): d y_{k+1} / d y_k
  std::vector<Matrix> interval_sensitivity;  // (m+1) x d:     d y_{k+1} / d u_k
};

DiscreteLinearization linearize(const ProblemSpec& spec, const Control& u);

// RK4 with a time-continuous control evaluated at the stage times; used to
// replay smooth controls (e.g. the control recovered along an extremal).
Trajectory integrate_open_loop(const ProblemSpec& spec, const std::function<Vector(double)>& control,
                               int steps);

// Columns: t, x1..xm.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace ctrlab
