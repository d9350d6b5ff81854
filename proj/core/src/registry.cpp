#include "ctrlab/registry.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/LU>

#include "ctrlab/error.hpp"

namespace ctrlab {
namespace {

Polynomial poly(int vars, std::initializer_list<std::pair<double, std::vector<int>>> terms) {
  std::vector<Monomial> out;
  for (const auto& [c, p] : terms) out.push_back(Monomial{c, p});
  return Polynomial(vars, std::move(out));
}

Box cube(int m, double half_width) {
  return Box{Vector::Constant(m, -half_width), Vector::Constant(m, half_width)};
}

std::optional<double> lq_value(const ProblemSpec& spec, const Vector& x) {
  const double d = x[0] - spec.x0[0];
  return d * d / (2.0 * spec.horizon);
}

std::optional<double> double_integrator_value(const ProblemSpec& spec, const Vector& x) {
  const double t = spec.horizon;
  Matrix a(2, 2);
  a << 1.0, t, 0.0, 1.0;  // exp(tA)
  const Vector xi = x - a * spec.x0;
  return 0.5 * xi.dot(double_integrator_gramian(t).inverse() * xi);
}

std::optional<double> heisenberg_value(const ProblemSpec& spec, const Vector& x) {
  // Only points on the vertical axis above the origin have the isoperimetric
  // closed form: squared distance 4 pi |z|.
  if (spec.x0.norm() != 0.0 || x[0] != 0.0 || x[1] != 0.0) return std::nullopt;
  return 4.0 * std::numbers::pi * std::abs(x[2]) / (2.0 * spec.horizon);
}

Benchmark lq_scalar() {
  ControlSystem sys("lq-scalar", VectorField::zero(1), {VectorField::coordinate(1, 0)}, Potential::zero(1),
                    cube(1, 10.0));
  return Benchmark{
      .name = "lq-scalar",
      .description = "x' = u, Q = 0",
      .spec = ProblemSpec{std::move(sys), Vector::Zero(1), 1.0, 64, 8},
      .sample_targets = {Vector::Constant(1, 0.5), Vector::Constant(1, 1.0), Vector::Constant(1, -0.75)},
      .value_oracle = &lq_value,
      .provenance = "minimum-energy control of x' = u is constant; V(x) = (x - x0)^2 / 2T",
  };
}

Benchmark double_integrator() {
  VectorField drift({poly(2, {{1.0, {0, 1}}}), Polynomial(2)});
  ControlSystem sys("double-integrator", std::move(drift), {VectorField::coordinate(2, 1)}, Potential::zero(2),
                    cube(2, 50.0));
  Vector a(2), b(2), c(2);
  a << 0.5, 1.0;
  b << -0.3, 0.4;
  c << 0.2, -0.8;
  return Benchmark{
      .name = "double-integrator",
      .description = "x1' = x2, x2' = u, Q = 0",
      .spec = ProblemSpec{std::move(sys), Vector::Zero(2), 1.0, 64, 8},
      .sample_targets = {a, b, c},
      .value_oracle = &double_integrator_value,
      .provenance = "V(x) = xi^T G^{-1} xi / 2 with the controllability Gramian G",
  };
}

Benchmark oscillator_potential() {
  // Q = x^2 is bounded above only on the chart: Q <= 400 on [-20, 20].
  ControlSystem sys("oscillator-potential", VectorField::zero(1), {VectorField::coordinate(1, 0)},
                    Potential(poly(1, {{1.0, {2}}}), 400.0), cube(1, 20.0));
  return Benchmark{
      .name = "oscillator-potential",
      .description = "x' = u, Q = x^2 (normal extremals x = p0 sin t)",
      .spec = ProblemSpec{std::move(sys), Vector::Zero(1), 1.0, 64, 8},
      .sample_targets = {Vector::Constant(1, 0.5), Vector::Constant(1, 1.0), Vector::Constant(1, -0.4)},
      .value_oracle = nullptr,
      .provenance = "d x(t) / d p0 = sin t: first conjugate time pi",
  };
}

Benchmark heisenberg() {
  VectorField x1({Polynomial::constant(3, 1.0), Polynomial(3), poly(3, {{-0.5, {0, 1, 0}}})});
  VectorField x2({Polynomial(3), Polynomial::constant(3, 1.0), poly(3, {{0.5, {1, 0, 0}}})});
  ControlSystem sys("heisenberg", VectorField::zero(3), {x1, x2}, Potential::zero(3), cube(3, 10.0));
  Vector a(3), b(3), c(3);
  a << 0.6, 0.2, 0.05;
  b << -0.4, 0.5, -0.03;
  c << 0.3, -0.6, 0.02;
  return Benchmark{
      .name = "heisenberg",
      .description = "X1 = dx - y/2 dz, X2 = dy + x/2 dz",
      .spec = ProblemSpec{std::move(sys), Vector::Zero(3), 1.0, 64, 8},
      .sample_targets = {a, b, c},
      .value_oracle = &heisenberg_value,
      .provenance = "V(0,0,z) = 4 pi |z| / 2T (isoperimetric circle)",
  };
}

Benchmark martinet() {
  VectorField x1 = VectorField::coordinate(3, 0);
  VectorField x2({Polynomial(3), Polynomial::constant(3, 1.0), poly(3, {{1.0, {2, 0, 0}}})});
  ControlSystem sys("martinet", VectorField::zero(3), {x1, x2}, Potential::zero(3), cube(3, 10.0));
  Vector a(3), b(3), c(3);
  a << 0.5, 0.6, 0.08;
  b << -0.5, 0.4, 0.06;
  c << 0.7, -0.3, 0.1;
  return Benchmark{
      .name = "martinet",
      .description = "X1 = dx, X2 = dy + x^2 dz (abnormal line x = z = 0)",
      .spec = ProblemSpec{std::move(sys), Vector::Zero(3), 1.0, 64, 8},
      .sample_targets = {a, b, c},
      .value_oracle = nullptr,
      .provenance = "u = (0, 1) from the origin has rank-2 differential with kernel dz",
  };
}

Benchmark drifted_heisenberg() {
  VectorField x1({Polynomial::constant(3, 1.0), Polynomial(3), poly(3, {{-0.5, {0, 1, 0}}})});
  VectorField x2({Polynomial(3), Polynomial::constant(3, 1.0), poly(3, {{0.5, {1, 0, 0}}})});
  VectorField drift({Polynomial::constant(3, 0.5), Polynomial(3), Polynomial(3)});
  ControlSystem sys("drifted-heisenberg", std::move(drift), {x1, x2}, Potential::zero(3), cube(3, 10.0));
  Vector a(3), b(3), c(3);
  a << 0.9, 0.3, 0.05;
  b << 0.2, -0.4, -0.04;
  c << 0.6, 0.5, 0.1;
  return Benchmark{
      .name = "drifted-heisenberg",
      .description = "Heisenberg fields with constant drift X0 = dx / 2",
      .spec = ProblemSpec{std::move(sys), Vector::Zero(3), 1.0, 64, 8},
      .sample_targets = {a, b, c},
      .value_oracle = nullptr,
      .provenance = "no closed form; exercised through cross-method and refinement checks",
  };
}

}  // namespace

std::vector<std::string> benchmark_names() {
  return {"lq-scalar", "double-integrator", "oscillator-potential", "heisenberg", "martinet",
          "drifted-heisenberg"};
}

Benchmark make_benchmark(const std::string& name) {
  if (name == "lq-scalar") return lq_scalar();
  if (name == "double-integrator") return double_integrator();
  if (name == "oscillator-potential") return oscillator_potential();
  if (name == "heisenberg") return heisenberg();
  if (name == "martinet") return martinet();
  if (name == "drifted-heisenberg") return drifted_heisenberg();
  throw Error(ErrorCategory::kConfig, "unknown builtin system '" + name + "'");
}

Matrix double_integrator_gramian(double horizon) {
  const double t = horizon;
  Matrix g(2, 2);
  g << t * t * t / 3.0, t * t / 2.0, t * t / 2.0, t;
  return g;
}

}  // namespace ctrlab
