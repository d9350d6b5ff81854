#include <doctest.h>

#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "ctrlab/error.hpp"
#include "ctrlab/flow.hpp"
#include "ctrlab/registry.hpp"
#include "support.hpp"

using namespace ctrlab;
using ctrlab::testing::random_control;
using ctrlab::testing::random_vector;

TEST_CASE("integrate examples") {
  SUBCASE("zero dynamics stay at x0") {
    auto spec = make_benchmark("heisenberg").spec;
    spec.x0 = Eigen::Vector3d(0.1, -0.2, 0.3);
    const Trajectory tr = integrate(spec, spec.zero_control());
    CHECK_FALSE(tr.blowup);
    CHECK(tr.nodes() == spec.total_steps() + 1);
    for (int k = 0; k < tr.nodes(); ++k) CHECK((tr.state(k) - spec.x0).norm() == 0.0);
    CHECK(tr.times.front() == 0.0);
    CHECK(tr.times.back() == spec.horizon);
  }
  SUBCASE("constant control on x' = u") {
    const auto spec = ctrlab::testing::scalar_spec(Polynomial(1), 2.0);
    const Trajectory tr = integrate(spec, Control::constant(2.0, spec.intervals, Vector::Constant(1, 0.7)));
    CHECK(std::abs(tr.final_state()[0] - 1.4) < 1e-12);
  }
  SUBCASE("double integrator with u = 1") {
    const auto spec = make_benchmark("double-integrator").spec;
    const Trajectory tr = integrate(spec, Control::constant(1.0, spec.intervals, Vector::Constant(1, 1.0)));
    CHECK(std::abs(tr.final_state()[0] - 0.5) < 1e-10);
    CHECK(std::abs(tr.final_state()[1] - 1.0) < 1e-10);
  }
}

TEST_CASE("blowup is flagged instead of diverging") {
  const auto spec = make_benchmark("lq-scalar").spec;  // chart [-10, 10]
  const Trajectory tr = integrate(spec, Control::constant(1.0, spec.intervals, Vector::Constant(1, 20.0)));
  CHECK(tr.blowup);
  CHECK(tr.nodes() < spec.total_steps() + 1);
  CHECK(tr.states.allFinite());
  try {
    integrate_variational(spec, Control::constant(1.0, spec.intervals, Vector::Constant(1, 20.0)));
    FAIL("expected inadmissible control");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::kInadmissibleControl);
  }
}

TEST_CASE("grid mismatch is a shape error") {
  const auto spec = make_benchmark("lq-scalar").spec;
  try {
    integrate(spec, Control(1.0, 32, 1));
    FAIL("expected shape error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::kShape);
  }
}

TEST_CASE("pushforward examples") {
  SUBCASE("identity at s = t and M(0,0) = I") {
    const auto spec = make_benchmark("martinet").spec;
    std::mt19937_64 rng(1);
    const VariationalFlow vf = integrate_variational(spec, random_control(rng, spec));
    CHECK(vf.fundamental(0).isIdentity(0.0));
    CHECK(vf.pushforward(37, 37).isIdentity(0.0));
    CHECK(vf.pushforward_at(0.25, 0.25).isIdentity(0.0));
  }
  SUBCASE("linear drift matches the matrix exponential") {
    const auto spec = ctrlab::testing::nilpotent_linear_spec();
    const VariationalFlow vf = integrate_variational(spec, spec.zero_control());
    Matrix a(2, 2);
    a << 0, 1, 0, 0;
    for (double t : {0.25, 0.5, 1.0}) {
      const Matrix expected = (t * a).exp();
      CHECK((vf.pushforward_at(0.0, t) - expected).norm() < 1e-8);
    }
  }
  SUBCASE("scalar x' = u has trivial pushforward and pullback") {
    const auto spec = ctrlab::testing::scalar_spec();
    std::mt19937_64 rng(2);
    const VariationalFlow vf = integrate_variational(spec, random_control(rng, spec));
    CHECK(vf.pushforward(10, 400)(0, 0) == doctest::Approx(1.0));
    CHECK(vf.pullback_covector(10, 400, Vector::Constant(1, 2.5))[0] == doctest::Approx(2.5));
  }
  SUBCASE("times that are not nodes are rejected") {
    const auto spec = ctrlab::testing::scalar_spec();
    const VariationalFlow vf = integrate_variational(spec, spec.zero_control());
    CHECK_THROWS_AS(vf.pushforward_at(0.0, 0.1234567), Error);
  }
}

TEST_CASE("flow composition and covector duality on random node triples") {
  std::mt19937_64 rng(42);
  for (const auto& name : benchmark_names()) {
    const auto b = make_benchmark(name);
    const VariationalFlow vf = integrate_variational(b.spec, random_control(rng, b.spec, 0.4));
    std::uniform_int_distribution<int> node(0, vf.nodes() - 1);
    for (int trial = 0; trial < 10; ++trial) {
      int r = node(rng), s = node(rng), t = node(rng);
      const Matrix lhs = vf.pushforward(s, t) * vf.pushforward(r, s);
      CHECK((lhs - vf.pushforward(r, t)).norm() <= 1e-9);

      const Vector p = random_vector(rng, b.spec.state_dim());
      const Vector v = random_vector(rng, b.spec.state_dim());
      const double a = vf.pullback_covector(s, t, p).dot(v);
      const double c = p.dot(vf.pushforward(s, t) * v);
      CHECK(std::abs(a - c) <= 1e-12 * std::max(1.0, std::abs(c)));
    }
    CHECK(vf.pullback_covector(5, 5, Vector::Ones(b.spec.state_dim())) == Vector::Ones(b.spec.state_dim()));
  }
}

TEST_CASE("RK4 is fourth order on a nonlinear scalar field") {
  // With piecewise-constant controls the benchmark fields are integrated
  // exactly, so the order check uses x' = u (1 + x^2), solved by tan.
  auto spec = make_benchmark("oscillator-potential").spec.with_intervals(4);
  Control u(1.0, 4, 1);
  u.values() << 1.0, -2.0, 0.5, 3.0;
  // Drive the state with a genuinely nonlinear field: x' = u (1 + x^2).
  VectorField field({Polynomial::constant(1, 1.0) + Polynomial::variable(1, 0) * Polynomial::variable(1, 0)});
  ControlSystem sys("nonlinear", VectorField::zero(1), {field}, spec.system.potential(), spec.system.chart());
  ProblemSpec base{sys, Vector::Constant(1, 0.1), 1.0, 4, 2};
  auto run = [&](int substeps) {
    ProblemSpec s = base;
    s.substeps = substeps;
    return integrate(s, u).final_state()[0];
  };
  const double reference = std::tan(std::atan(0.1) + 0.625);
  CHECK(std::abs(run(2048) - reference) < 1e-13);
  const double e1 = std::abs(run(16) - reference);
  const double e2 = std::abs(run(32) - reference);
  const double ratio = e1 / e2;
  CHECK(ratio >= 8.0);
  CHECK(ratio <= 32.0);
}

TEST_CASE("fundamental matrix matches finite differences in x0") {
  std::mt19937_64 rng(17);
  for (const auto& name : benchmark_names()) {
    const auto b = make_benchmark(name);
    const Control u = random_control(rng, b.spec, 0.5);
    ProblemSpec spec = b.spec;
    spec.x0 = random_vector(rng, spec.state_dim(), 0.3);
    const VariationalFlow vf = integrate_variational(spec, u);
    const Matrix& m = vf.fundamental(vf.nodes() - 1);
    const double eps = 1e-5;
    for (int j = 0; j < spec.state_dim(); ++j) {
      ProblemSpec plus = spec, minus = spec;
      plus.x0[j] += eps;
      minus.x0[j] -= eps;
      const Vector fd = (integrate(plus, u).final_state() - integrate(minus, u).final_state()) / (2 * eps);
      CHECK((fd - m.col(j)).norm() <= 1e-4 * std::max(1.0, m.col(j).norm()));
    }
    // Invertibility along the arc.
    for (int k = 0; k < vf.nodes(); k += 64) {
      Eigen::JacobiSVD<Matrix> svd(vf.fundamental(k));
      const Vector sv = svd.singularValues();
      CHECK(sv[sv.size() - 1] > 0.0);
      CHECK(std::isfinite(sv[0] / sv[sv.size() - 1]));
    }
  }
}

TEST_CASE("open-loop integration of a smooth control") {
  // u = (cos t, sin t) on Heisenberg traces x = sin t, y = 1 - cos t,
  // z = (t - sin t) / 2.
  const auto spec = make_benchmark("heisenberg").spec;
  const Trajectory tr = integrate_open_loop(
      spec, [](double t) { return Vector(Eigen::Vector2d(std::cos(t), std::sin(t))); }, 512);
  CHECK_FALSE(tr.blowup);
  for (int k : {0, 100, 512}) {
    const double t = tr.times[k];
    CHECK(std::abs(tr.states(0, k) - std::sin(t)) < 1e-10);
    CHECK(std::abs(tr.states(1, k) - (1 - std::cos(t))) < 1e-10);
    CHECK(std::abs(tr.states(2, k) - 0.5 * (t - std::sin(t))) < 1e-10);
  }
}

TEST_CASE("trajectory CSV columns") {
  const auto spec = make_benchmark("double-integrator").spec.with_intervals(2);
  ProblemSpec s = spec;
  s.substeps = 1;
  const Trajectory tr = integrate(s, Control::constant(1.0, 2, Vector::Constant(1, 1.0)));
  std::ostringstream out;
  write_trajectory_csv(out, tr);
  std::istringstream in(out.str());
  std::string header, line;
  std::getline(in, header);
  CHECK(header == "t,x1,x2");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
}
