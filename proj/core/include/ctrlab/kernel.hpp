#pragma once

#include <vector>

#include "ctrlab/polynomial.hpp"

namespace ctrlab {

class VectorField;
class Potential;

// Flattened term tables of a control system, evaluated into caller-owned
// buffers. Built once per ControlSystem; the integrators call it on every RK4
// stage, so nothing here allocates.
class SystemKernel {
 public:
  SystemKernel(const VectorField& drift, const std::vector<VectorField>& controls, const Potential& potential);

  int state_dim() const { return m_; }
  int control_dim() const { return d_; }
  bool has_potential() const { return !pot_terms_.empty(); }

  // X0(x) + sum u_i X_i(x)                      -> out[m]
  void velocity(const double* x, const double* u, double* out) const;
  // D_x of the velocity, column-major m x m     -> out[m*m]
  void jacobian(const double* x, const double* u, double* out) const;
  // columns X_i(x), column-major m x d          -> out[m*d]
  void control_matrix(const double* x, double* out) const;
  double potential(const double* x) const;
  void potential_gradient(const double* x, double* out) const;

 private:
  struct Term {
    double coeff;
    int field;  // 0 drift, i for X_i, -1 potential
    int slot;   // output index
    int factor_begin;
    int factor_end;
  };
  struct Factor {
    int var;
    int power;
  };

  void add_polynomial(std::vector<Term>& table, const Polynomial& p, int field, int slot);
  double monomial(const Term& t, const double* x) const;

  int m_ = 0;
  int d_ = 0;
  std::vector<Factor> factors_;
  std::vector<Term> vel_terms_;
  std::vector<Term> jac_terms_;
  std::vector<Term> pot_terms_;
  std::vector<Term> grad_terms_;
};

}  // namespace ctrlab
