#pragma once

#include <vector>

#include <Eigen/Core>

namespace ctrlab {

struct Monomial {
  double coeff = 0.0;
  std::vector<int> powers;  // one exponent per variable
};

// Sparse multivariate polynomial with real coefficients. Terms are kept merged
// and sorted by exponent vector, so two equal polynomials have identical term
// lists and evaluation order is deterministic.
class Polynomial {
 public:
  explicit Polynomial(int num_vars = 0);
  Polynomial(int num_vars, std::vector<Monomial> terms);

  static Polynomial constant(int num_vars, double value);
  static Polynomial variable(int num_vars, int index);

  int num_vars() const { return num_vars_; }
  int degree() const;
  bool is_zero() const { return terms_.empty(); }
  const std::vector<Monomial>& terms() const { return terms_; }

  double eval(const Eigen::VectorXd& x) const;
  Polynomial derivative(int var) const;

  Polynomial operator+(const Polynomial& other) const;
  Polynomial operator-(const Polynomial& other) const;
  Polynomial operator*(const Polynomial& other) const;
  Polynomial operator*(double scale) const;
  Polynomial operator-() const { return *this * -1.0; }

  bool operator==(const Polynomial& other) const;

 private:
  void canonicalize();

  int num_vars_;
  std::vector<Monomial> terms_;
};

}  // namespace ctrlab
