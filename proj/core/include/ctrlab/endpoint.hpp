#pragma once

#include "ctrlab/flow.hpp"

namespace ctrlab {

// x_u(T). Throws kInadmissibleControl on blow-up.
Vector end_point(const ProblemSpec& spec, const Control& u);

enum class DifferentialScheme {
  kExact,     // derivative of the discrete RK4 end-point map
  kMidpoint,  // (T/N) (P_{s_k,T})_* X_i(x_u(s_k)), s_k = interval midpoint
};

// dE_u as an explicit m x (N d) matrix: column k*d + i is the response of x_u(T)
// to a unit change of u_i on interval k (the T/N weight is already included).
struct EndpointDifferential {
  Matrix matrix;
  double weight = 0.0;  // T / N
  Control base_control;
  Trajectory base_trajectory;

  Vector apply(const Control& v) const { return matrix * v.flat(); }
  // (dE_u)^* applied to a covector, as coefficients on the control grid.
  Vector adjoint(const Vector& covector) const { return matrix.transpose() * covector; }
};

EndpointDifferential d_end_point(const ProblemSpec& spec, const Control& u,
                                 DifferentialScheme scheme = DifferentialScheme::kExact);

// C_T(u) = 1/2 int (|u|^2 - Q(x_u)) dt.
double cost(const ProblemSpec& spec, const Control& u);

// Gradient of C_T in grid coordinates: pairing with v is vector . v.flat(), i.e.
// the T/N weight is already included.
struct CostGradient {
  Vector vector;

  double pairing(const Control& v) const { return vector.dot(v.flat()); }
  // L^2 Riesz representative (vector divided by T/N), laid out like Control::flat().
  Vector riesz(double weight) const { return vector / weight; }
};

// Backward costate sweep through the discrete flow: q carries the sensitivity
// of the potential integral, the gradient on interval k channel i is
// (T/N) u_{k,i} - <q, X_i> accumulated over the interval's RK4 stages.
CostGradient d_cost(const ProblemSpec& spec, const Control& u);

// One forward pass plus one backward sweep: value and gradient of
//   cost_weight * C_T(u) + <endpoint_covector, E(u)>.
// Used by the solvers to avoid forming dE explicitly.
struct AdjointEvaluation {
  Vector endpoint;
  double cost = 0.0;
  Vector gradient;  // grid coordinates, like CostGradient::vector
};

AdjointEvaluation evaluate_with_adjoint(const ProblemSpec& spec, const Control& u,
                                        const Vector& endpoint_covector, double cost_weight = 1.0);

// Same, with the endpoint covector chosen after the forward pass (e.g. a
// penalty term that depends on E(u)).
AdjointEvaluation evaluate_with_adjoint(const ProblemSpec& spec, const Control& u,
                                        const std::function<Vector(const Vector&)>& covector_of_endpoint,
                                        double cost_weight = 1.0);

}  // namespace ctrlab
