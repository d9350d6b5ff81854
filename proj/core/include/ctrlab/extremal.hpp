#pragma once

#include <vector>

#include "ctrlab/model.hpp"

namespace ctrlab {

// H(p, x) = <p, X0(x)> + 1/2 sum_i <p, X_i(x)>^2 + 1/2 Q(x)
double hamiltonian(const ControlSystem& system, const Vector& p, const Vector& x);

// Normal extremal (x(t), p(t)) on the RK4 node grid, with the control
// u_i = <p, X_i(x)> recovered at every node.
struct ExtremalArc {
  std::vector<double> times;
  Matrix states;    // m x nodes
  Matrix costates;  // m x nodes
  Matrix controls;  // d x nodes
  Matrix control_rates;  // d x nodes, du/dt along the arc
  Vector initial_covector;
  double cost = 0.0;  // 1/2 int (|u|^2 - Q(x)) dt along the arc
  bool blowup = false;

  int nodes() const { return static_cast<int>(times.size()); }
  Vector final_state() const { return states.col(states.cols() - 1); }
  // Cubic Hermite interpolation of the recovered control (uses control_rates).
  Vector control_at(double t) const;
  // max_k |H(p_k, x_k) - H(p_0, x_0)| / (1 + |H(p_0, x_0)|)
  double hamiltonian_drift(const ControlSystem& system) const;
};

// Normal extremal from (x0, p0) over [0, T] on the spec's node grid.
ExtremalArc normal_arc(const ProblemSpec& spec, const Vector& p0);

// pi(e^{tH}(p0, x0)); t in [0, T], step no larger than the spec's RK4 step.
Vector exponential(const ProblemSpec& spec, double t, const Vector& p0);

// d x(t) / d p0 (and d x(t) / d x0) at every node of the spec grid.
struct ExpJacobian {
  std::vector<double> times;
  std::vector<Matrix> dxdp;
  std::vector<Matrix> dxdx0;
};

ExpJacobian exp_jacobian(const ProblemSpec& spec, const Vector& p0);

// Relative threshold on the smallest singular value of dx/dp0 (against the
// largest singular value met along the arc).
inline constexpr double kConjugateTolerance = 1e-6;

// Times in (0, T] at which dx/dp0 degenerates: determinant sign changes (refined
// by bisection) and interior minima of the smallest singular value below
// tolerance (refined by golden section).
std::vector<double> conjugate_times(const ProblemSpec& spec, const Vector& p0);

struct ShootOptions {
  int max_iterations = 40;
  double tolerance = 1e-8;  // |F| <= tolerance * max(1, |x - x0|)
};

// Damped Newton on F(p0) = exponential(T, p0) - x. Throws kConjugateObstruction
// when dx/dp0 at T is singular, kShootFailed when the iteration stalls.
ExtremalArc shoot(const ProblemSpec& spec, const Vector& target, const Vector& p0_init,
                  const ShootOptions& opts = {});

// Initial covector of the normal lift of a control with final multiplier
// lambda_T (lambda_T dE = dC): p(0) = Phi(T,0)^T lambda_T + 1/2 int Phi(t,0)^T grad Q dt,
// taken from the discrete flow.
Vector initial_covector(const ProblemSpec& spec, const Control& u, const Vector& lambda_final);

}  // namespace ctrlab
