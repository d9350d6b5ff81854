#pragma once

#include <random>

#include "ctrlab/model.hpp"

namespace ctrlab::testing {

inline Box cube(int m, double half_width) {
  return Box{Vector::Constant(m, -half_width), Vector::Constant(m, half_width)};
}

// x' = u in R, with the given potential.
inline ProblemSpec scalar_spec(Polynomial q = Polynomial(1), double horizon = 1.0, int intervals = 64,
                               int substeps = 8) {
  ControlSystem sys("scalar", VectorField::zero(1), {VectorField::coordinate(1, 0)}, Potential(std::move(q)),
                    cube(1, 50.0));
  return ProblemSpec{std::move(sys), Vector::Zero(1), horizon, intervals, substeps};
}

// x' = A x with the nilpotent A = [[0, 1], [0, 0]] and a control field that
// never gets used (u = 0 in the tests).
inline ProblemSpec nilpotent_linear_spec() {
  VectorField drift({Polynomial::variable(2, 1), Polynomial(2)});
  ControlSystem sys("nilpotent", std::move(drift), {VectorField::coordinate(2, 1)}, Potential::zero(2),
                    cube(2, 50.0));
  return ProblemSpec{std::move(sys), Vector::Zero(2), 1.0, 16, 8};
}

inline Polynomial random_polynomial(std::mt19937_64& rng, int vars, int max_degree, int terms) {
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  std::uniform_int_distribution<int> power(0, max_degree);
  std::vector<Monomial> out;
  for (int t = 0; t < terms; ++t) {
    Monomial mono{coeff(rng), std::vector<int>(vars, 0)};
    int budget = max_degree;
    for (int v = 0; v < vars && budget > 0; ++v) {
      const int p = std::min(budget, power(rng));
      mono.powers[v] = p;
      budget -= p;
    }
    out.push_back(std::move(mono));
  }
  return Polynomial(vars, std::move(out));
}

inline VectorField random_field(std::mt19937_64& rng, int dim, int max_degree = 3) {
  std::vector<Polynomial> comps;
  for (int j = 0; j < dim; ++j) comps.push_back(random_polynomial(rng, dim, max_degree, 4));
  return VectorField(std::move(comps));
}

inline Vector random_vector(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

inline Control random_control(std::mt19937_64& rng, const ProblemSpec& spec, double scale = 0.5) {
  Control u = spec.zero_control();
  std::normal_distribution<double> g(0.0, scale);
  for (int k = 0; k < u.intervals(); ++k) {
    for (int i = 0; i < u.channels(); ++i) u.values()(k, i) = g(rng);
  }
  return u;
}

}  // namespace ctrlab::testing
