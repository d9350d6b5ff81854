#include "ctrlab/kernel.hpp"

#include <algorithm>

#include "ctrlab/model.hpp"

namespace ctrlab {

SystemKernel::SystemKernel(const VectorField& drift, const std::vector<VectorField>& controls,
                           const Potential& potential)
    : m_(drift.dim()), d_(static_cast<int>(controls.size())) {
  for (int f = 0; f <= d_; ++f) {
    const VectorField& field = f == 0 ? drift : controls[f - 1];
    for (int j = 0; j < m_; ++j) {
      const Polynomial& p = field.components()[j];
      add_polynomial(vel_terms_, p, f, j);
      for (int k = 0; k < m_; ++k) add_polynomial(jac_terms_, p.derivative(k), f, j + m_ * k);
    }
  }
  add_polynomial(pot_terms_, potential.polynomial(), -1, 0);
  if (!potential.is_zero()) {
    for (int k = 0; k < m_; ++k) add_polynomial(grad_terms_, potential.polynomial().derivative(k), -1, k);
  }
}

void SystemKernel::add_polynomial(std::vector<Term>& table, const Polynomial& p, int field, int slot) {
  for (const auto& mono : p.terms()) {
    const int begin = static_cast<int>(factors_.size());
    for (int v = 0; v < static_cast<int>(mono.powers.size()); ++v) {
      if (mono.powers[v] > 0) factors_.push_back(Factor{v, mono.powers[v]});
    }
    table.push_back(Term{mono.coeff, field, slot, begin, static_cast<int>(factors_.size())});
  }
}

double SystemKernel::monomial(const Term& t, const double* x) const {
  double v = t.coeff;
  for (int f = t.factor_begin; f < t.factor_end; ++f) {
    const double base = x[factors_[f].var];
    for (int p = 0; p < factors_[f].power; ++p) v *= base;
  }
  return v;
}

void SystemKernel::velocity(const double* x, const double* u, double* out) const {
  std::fill(out, out + m_, 0.0);
  for (const Term& t : vel_terms_) {
    const double w = t.field == 0 ? 1.0 : u[t.field - 1];
    if (w != 0.0) out[t.slot] += w * monomial(t, x);
  }
}

void SystemKernel::jacobian(const double* x, const double* u, double* out) const {
  std::fill(out, out + m_ * m_, 0.0);
  for (const Term& t : jac_terms_) {
    const double w = t.field == 0 ? 1.0 : u[t.field - 1];
    if (w != 0.0) out[t.slot] += w * monomial(t, x);
  }
}

void SystemKernel::control_matrix(const double* x, double* out) const {
  std::fill(out, out + m_ * d_, 0.0);
  for (const Term& t : vel_terms_) {
    if (t.field > 0) out[t.slot + m_ * (t.field - 1)] += monomial(t, x);
  }
}

double SystemKernel::potential(const double* x) const {
  double v = 0.0;
  for (const Term& t : pot_terms_) v += monomial(t, x);
  return v;
}

void SystemKernel::potential_gradient(const double* x, double* out) const {
  std::fill(out, out + m_, 0.0);
  for (const Term& t : grad_terms_) out[t.slot] += monomial(t, x);
}

}  // namespace ctrlab
