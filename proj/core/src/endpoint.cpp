#include "ctrlab/endpoint.hpp"

#include "ctrlab/error.hpp"

namespace ctrlab {
namespace {

const Trajectory& require_admissible(const Trajectory& tr) {
  if (tr.blowup) throw Error(ErrorCategory::kInadmissibleControl, "control is not admissible: trajectory blew up");
  return tr;
}

double cost_from(const Trajectory& tr) {
  return 0.5 * tr.control.l2_norm_squared() - 0.5 * tr.potential_integral;
}

Matrix exact_differential(const ProblemSpec& spec, const DiscreteLinearization& lin) {
  const int m = spec.state_dim();
  const int d = spec.control_dim();
  const int n = spec.intervals;
  Matrix out(m, n * d);
  // Backward accumulation of the transition from the end of interval k to T.
  Matrix to_end = Matrix::Identity(m, m);
  for (int k = n - 1; k >= 0; --k) {
    out.middleCols(k * d, d) = to_end * lin.interval_sensitivity[k].topRows(m);
    to_end = to_end * lin.interval_jacobian[k].topLeftCorner(m, m);
  }
  return out;
}

Matrix midpoint_differential(const ProblemSpec& spec, const Control& u, const VariationalFlow& vf) {
  const ControlSystem& sys = spec.system;
  const int m = spec.state_dim();
  const int d = spec.control_dim();
  const int last = vf.nodes() - 1;
  const double w = u.interval_length();
  Matrix out(m, spec.intervals * d);
  for (int k = 0; k < spec.intervals; ++k) {
    const int begin = k * spec.substeps;
    Matrix block(m, d);
    if (spec.substeps % 2 == 0) {
      const int mid = begin + spec.substeps / 2;
      block = vf.pushforward(mid, last) * sys.control_matrix(vf.base().state(mid));
    } else {
      const int lo = begin + spec.substeps / 2;
      block = 0.5 * (vf.pushforward(lo, last) * sys.control_matrix(vf.base().state(lo)) +
                     vf.pushforward(lo + 1, last) * sys.control_matrix(vf.base().state(lo + 1)));
    }
    out.middleCols(k * d, d) = w * block;
  }
  return out;
}

}  // namespace

Vector end_point(const ProblemSpec& spec, const Control& u) {
  return require_admissible(integrate(spec, u)).final_state();
}

EndpointDifferential d_end_point(const ProblemSpec& spec, const Control& u, DifferentialScheme scheme) {
  if (scheme == DifferentialScheme::kMidpoint) {
    VariationalFlow vf = integrate_variational(spec, u);
    Matrix mat = midpoint_differential(spec, u, vf);
    return EndpointDifferential{.matrix = std::move(mat), .weight = u.interval_length(),
                                .base_control = u, .base_trajectory = vf.base()};
  }
  DiscreteLinearization lin = linearize(spec, u);
  Matrix mat = exact_differential(spec, lin);
  return EndpointDifferential{.matrix = std::move(mat), .weight = u.interval_length(), .base_control = u,
                              .base_trajectory = std::move(lin.trajectory)};
}

double cost(const ProblemSpec& spec, const Control& u) {
  return cost_from(require_admissible(integrate(spec, u)));
}

AdjointEvaluation evaluate_with_adjoint(const ProblemSpec& spec, const Control& u,
                                        const std::function<Vector(const Vector&)>& covector_of_endpoint,
                                        double cost_weight) {
  const int m = spec.state_dim();
  const int d = spec.control_dim();
  const DiscreteLinearization lin = linearize(spec, u);
  const double w = u.interval_length();

  AdjointEvaluation out;
  out.endpoint = lin.trajectory.final_state();
  out.cost = cost_from(lin.trajectory);
  out.gradient.resize(spec.intervals * d);
  const Vector endpoint_covector = covector_of_endpoint(out.endpoint);
  if (endpoint_covector.size() != m) throw Error(ErrorCategory::kShape, "endpoint covector has wrong dimension");

  // Row covector on y = (x, z); the z entry carries -cost_weight/2 because the
  // cost contains -1/2 int Q = -z/2.
  Eigen::RowVectorXd row(m + 1);
  row.head(m) = endpoint_covector.transpose();
  row[m] = -0.5 * cost_weight;
  for (int k = spec.intervals - 1; k >= 0; --k) {
    const Eigen::RowVectorXd g = row * lin.interval_sensitivity[k];
    for (int i = 0; i < d; ++i) out.gradient[k * d + i] = g[i] + cost_weight * w * u.values()(k, i);
    row = row * lin.interval_jacobian[k];
  }
  return out;
}

AdjointEvaluation evaluate_with_adjoint(const ProblemSpec& spec, const Control& u,
                                        const Vector& endpoint_covector, double cost_weight) {
  return evaluate_with_adjoint(
      spec, u, [&](const Vector&) { return endpoint_covector; }, cost_weight);
}

CostGradient d_cost(const ProblemSpec& spec, const Control& u) {
  return CostGradient{evaluate_with_adjoint(spec, u, Vector(Vector::Zero(spec.state_dim())), 1.0).gradient};
}

}  // namespace ctrlab
