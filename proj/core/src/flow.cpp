#include "ctrlab/flow.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include <Eigen/LU>

#include "ctrlab/error.hpp"

namespace ctrlab {
namespace {

bool admissible_state(const ControlSystem& sys, const Vector& x) {
  if (!x.allFinite()) return false;
  if ((x.array().abs() > kBlowupMagnitude).any()) return false;
  return sys.chart().contains(x);
}

// Scratch buffers for one RK4 step, reused across the whole integration.
struct StepWorkspace {
  StepWorkspace(int m, int d, int cols)
      : xs(m), jac(m, m), ctrl(m, d), grad(m), ys(m + 1, cols), acc(m + 1, cols) {
    for (auto& v : k) v.resize(m);
    for (auto& g : dk) g.resize(m + 1, cols);
  }
  Vector xs;
  Vector k[4];
  double dz[4] = {0, 0, 0, 0};
  Matrix jac;
  Matrix ctrl;
  Vector grad;
  Matrix ys;
  Matrix acc;
  Matrix dk[4];
};

// One RK4 step of y = (x, z), z' = Q(x). When `tangent` is non-null it holds
// (m+1) x c directions in y, advanced with the same stages so the result is the
// exact derivative of the discrete step. With `control_columns` the last d
// columns are directions in u instead (zero initial y-component).
void rk4_step(const SystemKernel& ker, Vector& x, double& z, const Vector& u, double h, Matrix* tangent,
              bool control_columns, StepWorkspace& ws) {
  const int m = ker.state_dim();
  const int d = ker.control_dim();
  const bool with_potential = ker.has_potential();
  static constexpr double kStage[4] = {0.0, 0.5, 0.5, 1.0};

  for (int s = 0; s < 4; ++s) {
    if (s == 0) {
      ws.xs = x;
    } else {
      ws.xs = x + (kStage[s] * h) * ws.k[s - 1];
    }
    ker.velocity(ws.xs.data(), u.data(), ws.k[s].data());
    ws.dz[s] = with_potential ? ker.potential(ws.xs.data()) : 0.0;
    if (tangent == nullptr) continue;

    if (s == 0) {
      ws.ys = *tangent;
    } else {
      ws.ys = *tangent + (kStage[s] * h) * ws.dk[s - 1];
    }
    // dF = A ys + B du with A = [[Df, 0], [grad Q^T, 0]], B = [[X_i], [0]].
    Matrix& dk = ws.dk[s];
    ker.jacobian(ws.xs.data(), u.data(), ws.jac.data());
    dk.topRows(m).noalias() = ws.jac * ws.ys.topRows(m);
    if (control_columns) {
      ker.control_matrix(ws.xs.data(), ws.ctrl.data());
      dk.topRightCorner(m, d) += ws.ctrl;
    }
    if (with_potential) {
      ker.potential_gradient(ws.xs.data(), ws.grad.data());
      dk.row(m).noalias() = ws.grad.transpose() * ws.ys.topRows(m);
    } else {
      dk.row(m).setZero();
    }
  }

  if (tangent != nullptr) {
    ws.acc = ws.dk[0] + ws.dk[3];
    ws.acc += 2.0 * (ws.dk[1] + ws.dk[2]);
    *tangent += (h / 6.0) * ws.acc;
  }
  x += (h / 6.0) * (ws.k[0] + 2.0 * ws.k[1] + 2.0 * ws.k[2] + ws.k[3]);
  z += (h / 6.0) * (ws.dz[0] + 2.0 * ws.dz[1] + 2.0 * ws.dz[2] + ws.dz[3]);
}

void check_grid(const ProblemSpec& spec, const Control& u) {
  if (u.intervals() != spec.intervals || u.channels() != spec.control_dim() ||
      std::abs(u.horizon() - spec.horizon) > 1e-14 * spec.horizon) {
    throw Error(ErrorCategory::kShape, "control grid does not match the problem grid");
  }
  if (spec.x0.size() != spec.state_dim()) throw Error(ErrorCategory::kShape, "x0 has wrong dimension");
}

Trajectory start_trajectory(const ProblemSpec& spec, const Control& u) {
  Trajectory tr{.times = {}, .states = Matrix(spec.state_dim(), spec.total_steps() + 1), .control = u,
                .substeps = spec.substeps};
  tr.times.reserve(spec.total_steps() + 1);
  tr.times.push_back(0.0);
  tr.states.col(0) = spec.x0;
  return tr;
}

void truncate_on_blowup(Trajectory& tr) {
  tr.blowup = true;
  tr.states.conservativeResize(Eigen::NoChange, tr.nodes());
}

}  // namespace

Trajectory integrate(const ProblemSpec& spec, const Control& u) {
  check_grid(spec, u);
  const ControlSystem& sys = spec.system;
  Trajectory tr = start_trajectory(spec, u);
  if (!admissible_state(sys, spec.x0)) {
    truncate_on_blowup(tr);
    return tr;
  }
  const double h = spec.step();
  StepWorkspace ws(spec.state_dim(), spec.control_dim(), 0);
  Vector x = spec.x0;
  double z = 0.0;
  int node = 0;
  for (int k = 0; k < spec.intervals; ++k) {
    const Vector uk = u.value(k);
    for (int s = 0; s < spec.substeps; ++s) {
      rk4_step(sys.kernel(), x, z, uk, h, nullptr, false, ws);
      ++node;
      if (!admissible_state(sys, x)) {
        truncate_on_blowup(tr);
        return tr;
      }
      tr.times.push_back(node == spec.total_steps() ? spec.horizon : node * h);
      tr.states.col(node) = x;
    }
  }
  tr.potential_integral = z;
  return tr;
}

VariationalFlow::VariationalFlow(Trajectory base, std::vector<Matrix> fundamental)
    : base_(std::move(base)), fundamental_(std::move(fundamental)) {
  if (static_cast<int>(fundamental_.size()) != base_.nodes()) {
    throw Error(ErrorCategory::kShape, "variational flow: one fundamental matrix per node required");
  }
}

int VariationalFlow::node_index(double t) const {
  const auto& times = base_.times;
  const double horizon = base_.control.horizon();
  const double h = horizon / (base_.control.intervals() * base_.substeps);
  const long k = std::lround(t / h);
  if (k < 0 || k >= static_cast<long>(times.size()) || std::abs(times[k] - t) > 1e-9 * horizon) {
    throw Error(ErrorCategory::kShape, "time is not a stored trajectory node");
  }
  return static_cast<int>(k);
}

Matrix VariationalFlow::pushforward(int s_node, int t_node) const {
  const Matrix& ms = fundamental(s_node);
  const Matrix& mt = fundamental(t_node);
  if (s_node == t_node) return Matrix::Identity(ms.rows(), ms.cols());
  Eigen::FullPivLU<Matrix> lu(ms.transpose());
  if (!lu.isInvertible()) {
    throw Error(ErrorCategory::kNumericDegeneracy, "pushforward: fundamental matrix is singular");
  }
  // M(0,t) M(0,s)^{-1}, via the transposed solve M(0,s)^T X^T = M(0,t)^T.
  return lu.solve(mt.transpose()).transpose();
}

Vector VariationalFlow::pullback_covector(int s_node, int t_node, const Vector& p) const {
  return pushforward(s_node, t_node).transpose() * p;
}

VariationalFlow integrate_variational(const ProblemSpec& spec, const Control& u) {
  check_grid(spec, u);
  const ControlSystem& sys = spec.system;
  const int m = spec.state_dim();
  Trajectory tr = start_trajectory(spec, u);
  if (!admissible_state(sys, spec.x0)) {
    throw Error(ErrorCategory::kInadmissibleControl, "initial state outside the chart");
  }
  std::vector<Matrix> fundamental;
  fundamental.reserve(spec.total_steps() + 1);
  fundamental.push_back(Matrix::Identity(m, m));

  const double h = spec.step();
  Vector x = spec.x0;
  double z = 0.0;
  Matrix tangent = Matrix::Identity(m + 1, m + 1);
  StepWorkspace ws(m, spec.control_dim(), m + 1);
  int node = 0;
  for (int k = 0; k < spec.intervals; ++k) {
    const Vector uk = u.value(k);
    for (int s = 0; s < spec.substeps; ++s) {
      rk4_step(sys.kernel(), x, z, uk, h, &tangent, false, ws);
      ++node;
      if (!admissible_state(sys, x)) {
        throw Error(ErrorCategory::kInadmissibleControl, "trajectory left the chart or blew up");
      }
      tr.times.push_back(node == spec.total_steps() ? spec.horizon : node * h);
      tr.states.col(node) = x;
      fundamental.push_back(tangent.topLeftCorner(m, m));
    }
  }
  tr.potential_integral = z;
  return VariationalFlow(std::move(tr), std::move(fundamental));
}

DiscreteLinearization linearize(const ProblemSpec& spec, const Control& u) {
  check_grid(spec, u);
  const ControlSystem& sys = spec.system;
  const int m = spec.state_dim();
  const int d = spec.control_dim();
  DiscreteLinearization out{.trajectory = start_trajectory(spec, u), .interval_jacobian = {},
                            .interval_sensitivity = {}};
  Trajectory& tr = out.trajectory;
  if (!admissible_state(sys, spec.x0)) {
    throw Error(ErrorCategory::kInadmissibleControl, "initial state outside the chart");
  }
  out.interval_jacobian.reserve(spec.intervals);
  out.interval_sensitivity.reserve(spec.intervals);

  StepWorkspace ws(m, d, m + 1 + d);
  const double h = spec.step();
  Vector x = spec.x0;
  double z = 0.0;
  int node = 0;
  for (int k = 0; k < spec.intervals; ++k) {
    const Vector uk = u.value(k);
    Matrix tangent = Matrix::Zero(m + 1, m + 1 + d);
    tangent.leftCols(m + 1).setIdentity();
    for (int s = 0; s < spec.substeps; ++s) {
      rk4_step(sys.kernel(), x, z, uk, h, &tangent, true, ws);
      ++node;
      if (!admissible_state(sys, x)) {
        throw Error(ErrorCategory::kInadmissibleControl, "trajectory left the chart or blew up");
      }
      tr.times.push_back(node == spec.total_steps() ? spec.horizon : node * h);
      tr.states.col(node) = x;
    }
    out.interval_jacobian.push_back(tangent.leftCols(m + 1));
    out.interval_sensitivity.push_back(tangent.rightCols(d));
  }
  tr.potential_integral = z;
  return out;
}

Trajectory integrate_open_loop(const ProblemSpec& spec, const std::function<Vector(double)>& control,
                               int steps) {
  if (steps < 1) throw Error(ErrorCategory::kShape, "integrate_open_loop: steps must be positive");
  const ControlSystem& sys = spec.system;
  Trajectory tr{.times = {0.0}, .states = Matrix(spec.state_dim(), steps + 1),
                .control = Control(spec.horizon, steps, spec.control_dim()), .substeps = 1};
  tr.states.col(0) = spec.x0;
  const double h = spec.horizon / steps;
  Vector x = spec.x0;
  double z = 0.0;
  for (int n = 0; n < steps; ++n) {
    const double t = n * h;
    const Vector ua = control(t);
    const Vector ub = control(t + 0.5 * h);
    const Vector uc = control(t + h);
    tr.control.values().row(n) = ub.transpose();
    double q1 = 0, q2 = 0, q3 = 0, q4 = 0;
    const bool with_potential = !sys.potential().is_zero();
    const Vector k1 = sys.velocity(x, ua);
    if (with_potential) q1 = sys.potential().eval(x);
    const Vector x2 = x + 0.5 * h * k1;
    const Vector k2 = sys.velocity(x2, ub);
    if (with_potential) q2 = sys.potential().eval(x2);
    const Vector x3 = x + 0.5 * h * k2;
    const Vector k3 = sys.velocity(x3, ub);
    if (with_potential) q3 = sys.potential().eval(x3);
    const Vector x4 = x + h * k3;
    const Vector k4 = sys.velocity(x4, uc);
    if (with_potential) q4 = sys.potential().eval(x4);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    z += (h / 6.0) * (q1 + 2.0 * q2 + 2.0 * q3 + q4);
    if (!admissible_state(sys, x)) {
      truncate_on_blowup(tr);
      return tr;
    }
    tr.times.push_back(n + 1 == steps ? spec.horizon : (n + 1) * h);
    tr.states.col(n + 1) = x;
  }
  tr.potential_integral = z;
  return tr;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  const int m = static_cast<int>(trajectory.states.rows());
  out << "t";
  for (int j = 1; j <= m; ++j) out << ",x" << j;
  out << '\n';
  out << std::setprecision(17);
  for (int k = 0; k < trajectory.nodes(); ++k) {
    out << trajectory.times[k];
    for (int j = 0; j < m; ++j) out << ',' << trajectory.states(j, k);
    out << '\n';
  }
}

}  // namespace ctrlab
