#include "ctrlab/polynomial.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "ctrlab/error.hpp"

namespace ctrlab {

Polynomial::Polynomial(int num_vars) : num_vars_(num_vars) {
  if (num_vars < 0) {
    throw Error(ErrorCategory::kShape, "polynomial: negative variable count");
  }
}

Polynomial::Polynomial(int num_vars, std::vector<Monomial> terms)
    : num_vars_(num_vars), terms_(std::move(terms)) {
  for (const auto& t : terms_) {
    if (static_cast<int>(t.powers.size()) != num_vars_) {
      throw Error(ErrorCategory::kShape,
                  "polynomial: exponent vector length does not match variable count");
    }
    if (std::any_of(t.powers.begin(), t.powers.end(), [](int p) { return p < 0; })) {
      throw Error(ErrorCategory::kShape, "polynomial: negative exponent");
    }
  }
  canonicalize();
}

Polynomial Polynomial::constant(int num_vars, double value) {
  return Polynomial(num_vars, {Monomial{value, std::vector<int>(num_vars, 0)}});
}

Polynomial Polynomial::variable(int num_vars, int index) {
  std::vector<int> powers(num_vars, 0);
  powers.at(index) = 1;
  return Polynomial(num_vars, {Monomial{1.0, std::move(powers)}});
}

void Polynomial::canonicalize() {
  std::map<std::vector<int>, double> merged;
  for (auto& t : terms_) merged[t.powers] += t.coeff;
  terms_.clear();
  for (auto& [powers, coeff] : merged) {
    if (coeff != 0.0) terms_.push_back(Monomial{coeff, powers});
  }
}

int Polynomial::degree() const {
  int deg = 0;
  for (const auto& t : terms_) {
    deg = std::max(deg, std::accumulate(t.powers.begin(), t.powers.end(), 0));
  }
  return deg;
}

double Polynomial::eval(const Eigen::VectorXd& x) const {
  if (x.size() != num_vars_) {
    throw Error(ErrorCategory::kShape, "polynomial: state length mismatch");
  }
  double sum = 0.0;
  for (const auto& t : terms_) {
    double term = t.coeff;
    for (int v = 0; v < num_vars_; ++v) {
      for (int p = 0; p < t.powers[v]; ++p) term *= x[v];
    }
    sum += term;
  }
  return sum;
}

Polynomial Polynomial::derivative(int var) const {
  if (var < 0 || var >= num_vars_) {
    throw Error(ErrorCategory::kShape, "polynomial: derivative variable out of range");
  }
  std::vector<Monomial> out;
  for (const auto& t : terms_) {
    if (t.powers[var] == 0) continue;
    Monomial d{t.coeff * t.powers[var], t.powers};
    d.powers[var] -= 1;
    out.push_back(std::move(d));
  }
  return Polynomial(num_vars_, std::move(out));
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
  if (other.num_vars_ != num_vars_) {
    throw Error(ErrorCategory::kShape, "polynomial: variable count mismatch");
  }
  std::vector<Monomial> out = terms_;
  out.insert(out.end(), other.terms_.begin(), other.terms_.end());
  return Polynomial(num_vars_, std::move(out));
}

Polynomial Polynomial::operator-(const Polynomial& other) const { return *this + (-other); }

Polynomial Polynomial::operator*(const Polynomial& other) const {
  if (other.num_vars_ != num_vars_) {
    throw Error(ErrorCategory::kShape, "polynomial: variable count mismatch");
  }
  std::vector<Monomial> out;
  out.reserve(terms_.size() * other.terms_.size());
  for (const auto& a : terms_) {
    for (const auto& b : other.terms_) {
      Monomial prod{a.coeff * b.coeff, a.powers};
      for (int v = 0; v < num_vars_; ++v) prod.powers[v] += b.powers[v];
      out.push_back(std::move(prod));
    }
  }
  return Polynomial(num_vars_, std::move(out));
}

Polynomial Polynomial::operator*(double scale) const {
  std::vector<Monomial> out = terms_;
  for (auto& t : out) t.coeff *= scale;
  return Polynomial(num_vars_, std::move(out));
}

bool Polynomial::operator==(const Polynomial& other) const {
  if (num_vars_ != other.num_vars_ || terms_.size() != other.terms_.size()) return false;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (terms_[i].coeff != other.terms_[i].coeff || terms_[i].powers != other.terms_[i].powers) {
      return false;
    }
  }
  return true;
}

}  // namespace ctrlab
