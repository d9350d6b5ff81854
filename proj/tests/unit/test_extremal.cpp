#include <doctest.h>

#include <numbers>

#include "ctrlab/direct.hpp"
#include "ctrlab/error.hpp"
#include "ctrlab/extremal.hpp"
#include "ctrlab/flow.hpp"
#include "ctrlab/registry.hpp"
#include "support.hpp"

using namespace ctrlab;

TEST_CASE("hamiltonian examples") {
  const auto osc = make_benchmark("oscillator-potential").spec;
  const Vector x = Vector::Constant(1, 0.7);
  CHECK(hamiltonian(osc.system, Vector::Zero(1), x) == doctest::Approx(0.5 * 0.49));

  const auto lq = make_benchmark("lq-scalar").spec;
  CHECK(hamiltonian(lq.system, Vector::Constant(1, 3.0), x) == doctest::Approx(4.5));

  const auto heis = make_benchmark("heisenberg").spec;
  CHECK(hamiltonian(heis.system, Eigen::Vector3d(1, 0, 0), Vector::Zero(3)) == doctest::Approx(0.5));

  const auto di = make_benchmark("double-integrator").spec;
  // <p, X0> + <p, X1>^2 / 2 at x = (0, 2), p = (1, 3): 2 + 4.5
  CHECK(hamiltonian(di.system, Eigen::Vector2d(1, 3), Eigen::Vector2d(0, 2)) == doctest::Approx(6.5));
}

TEST_CASE("exponential examples") {
  auto lq = make_benchmark("lq-scalar").spec;
  lq.x0 = Vector::Constant(1, 0.25);
  CHECK(exponential(lq, 0.0, Vector::Constant(1, 2.0))[0] == 0.25);
  CHECK(exponential(lq, 0.8, Vector::Constant(1, 2.0))[0] == doctest::Approx(0.25 + 1.6).epsilon(1e-12));

  const auto osc = make_benchmark("oscillator-potential").spec.with_horizon(4.0);
  for (double t : {0.5, 1.7, std::numbers::pi, 4.0}) {
    CHECK(std::abs(exponential(osc, t, Vector::Constant(1, 0.6))[0] - 0.6 * std::sin(t)) < 1e-8);
  }
  CHECK_THROWS_AS(exponential(osc, 5.0, Vector::Ones(1)), Error);
}

TEST_CASE("exp_jacobian examples") {
  const auto lq = make_benchmark("lq-scalar").spec;
  const ExpJacobian j = exp_jacobian(lq, Vector::Constant(1, 0.4));
  CHECK(j.dxdp.front().norm() == 0.0);
  CHECK(j.dxdx0.front().isIdentity(0.0));
  for (std::size_t k = 0; k < j.times.size(); k += 50) CHECK(j.dxdp[k](0, 0) == doctest::Approx(j.times[k]));

  std::mt19937_64 rng(21);
  for (const auto& name : benchmark_names()) {
    const auto spec = make_benchmark(name).spec;
    const Vector p0 = ctrlab::testing::random_vector(rng, spec.state_dim(), 0.4);
    const ExpJacobian ej = exp_jacobian(spec, p0);
    const double eps = 1e-6;
    for (int c = 0; c < spec.state_dim(); ++c) {
      Vector e = Vector::Zero(spec.state_dim());
      e[c] = eps;
      const Vector fd = (exponential(spec, spec.horizon, p0 + e) - exponential(spec, spec.horizon, p0 - e)) / (2 * eps);
      CHECK((fd - ej.dxdp.back().col(c)).norm() <= 1e-4 * std::max(1.0, fd.norm()));
    }
  }
}

TEST_CASE("conjugate_times examples") {
  const auto osc = make_benchmark("oscillator-potential").spec.with_horizon(4.0);
  const auto times = conjugate_times(osc, Vector::Constant(1, 0.3));
  REQUIRE(times.size() == 1);
  CHECK(std::abs(times[0] - std::numbers::pi) <= 1e-3);

  const auto lq = make_benchmark("lq-scalar").spec;
  CHECK(conjugate_times(lq, Vector::Constant(1, 1.3)).empty());

  const auto di = make_benchmark("double-integrator").spec;
  CHECK(conjugate_times(di, Eigen::Vector2d(0.7, -1.2)).empty());

  // Heisenberg: the first conjugate time of a geodesic with angular speed |p_z|
  // is 2 pi / |p_z|.
  const auto heis = make_benchmark("heisenberg").spec.with_horizon(1.0);
  const auto ht = conjugate_times(heis, Eigen::Vector3d(1.0, 0.0, 8.0));
  REQUIRE(!ht.empty());
  CHECK(std::abs(ht[0] - 2 * std::numbers::pi / 8.0) <= 1e-3);
}

TEST_CASE("shoot examples") {
  auto lq = make_benchmark("lq-scalar").spec;
  lq.x0 = Vector::Constant(1, -0.5);
  for (double start : {-3.0, 0.0, 5.0}) {
    const ExtremalArc arc = shoot(lq, Vector::Constant(1, 0.7), Vector::Constant(1, start));
    CHECK(arc.initial_covector[0] == doctest::Approx(1.2));
  }

  const auto heis = make_benchmark("heisenberg").spec;
  const ExtremalArc rest = shoot(heis, heis.x0, Eigen::Vector3d(0.3, -0.2, 0.0));
  CHECK(rest.initial_covector.norm() < 1e-8);

  const auto di = make_benchmark("double-integrator");
  const Vector x = di.sample_targets[1];
  const ExtremalArc arc = shoot(di.spec, x, Vector::Zero(2));
  SolveOptions opts;
  opts.multistart_count = 2;
  CHECK(std::abs(arc.cost - value_estimate(di.spec, x, opts)) < 1e-3);
  CHECK((arc.final_state() - x).norm() < 1e-8 * std::max(1.0, x.norm()));
}

TEST_CASE("shooting into a focal point is a conjugate obstruction") {
  const auto osc = make_benchmark("oscillator-potential").spec.with_horizon(std::numbers::pi);
  try {
    shoot(osc, Vector::Constant(1, 0.5), Vector::Constant(1, 0.1));
    FAIL("expected conjugate obstruction");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::kConjugateObstruction);
  }
  const auto lq = make_benchmark("lq-scalar").spec;
  ShootOptions few;
  few.max_iterations = 0;
  try {
    shoot(lq, Vector::Constant(1, 0.5), Vector::Zero(1), few);
    FAIL("expected shoot failure");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::kShootFailed);
  }
}

TEST_CASE("energy is conserved and the recovered control reproduces the arc") {
  std::mt19937_64 rng(33);
  for (const auto& name : benchmark_names()) {
    const auto spec = make_benchmark(name).spec;
    const Vector p0 = ctrlab::testing::random_vector(rng, spec.state_dim(), 0.5);
    const ExtremalArc arc = normal_arc(spec, p0);
    REQUIRE_FALSE(arc.blowup);
    CHECK(arc.hamiltonian_drift(spec.system) <= 1e-6);
    // u_i = <p, X_i(x)> holds at every node by construction.
    for (int k = 0; k < arc.nodes(); k += 37) {
      const Vector u = spec.system.control_matrix(arc.states.col(k)).transpose() * arc.costates.col(k);
      CHECK((u - arc.controls.col(k)).norm() < 1e-12 * (1 + u.norm()));
    }
    const Trajectory replay = integrate_open_loop(
        spec, [&](double t) { return arc.control_at(t); }, spec.total_steps());
    REQUIRE_FALSE(replay.blowup);
    CHECK((replay.states - arc.states).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("short normal arcs are not beaten by the direct solver") {
  const auto base = make_benchmark("martinet").spec;
  const Vector p0 = Eigen::Vector3d(0.6, 0.8, 1.5);
  const double tau = 0.25;
  const auto spec = base.with_horizon(tau).with_intervals(32);
  const ExtremalArc arc = normal_arc(spec, p0);
  SolveOptions opts;
  opts.multistart_count = 4;
  const double direct = value_estimate(spec, arc.final_state(), opts);
  CHECK(direct >= arc.cost - 1e-4);
}

TEST_CASE("initial covector from the direct solution seeds shooting") {
  const auto b = make_benchmark("heisenberg");
  const Vector x = b.sample_targets[0];
  SolveOptions opts;
  opts.multistart_count = 3;
  const CandidateSet set = solve_fixed_endpoint(b.spec, x, opts);
  REQUIRE(!set.candidates.empty());
  const Candidate& best = set.candidates.front();
  const Vector p0 = initial_covector(b.spec, best.control, best.multiplier);
  CHECK((exponential(b.spec, b.spec.horizon, p0) - x).norm() < 1e-3);
  const ExtremalArc arc = shoot(b.spec, x, p0);
  CHECK((arc.initial_covector - p0).norm() < 1e-2 * (1 + p0.norm()));
  CHECK(std::abs(arc.cost - best.cost_value) < 1e-3);

  // Scalar LQ: p is constant and equals the control.
  const auto lq = make_benchmark("lq-scalar").spec;
  const Control u = Control::constant(1.0, 64, Vector::Constant(1, 0.9));
  CHECK(initial_covector(lq, u, Vector::Constant(1, 0.9))[0] == doctest::Approx(0.9));
}

TEST_CASE("extremal arc interpolation") {
  const auto osc = make_benchmark("oscillator-potential").spec.with_horizon(2.0);
  const ExtremalArc arc = normal_arc(osc, Vector::Constant(1, 0.5));
  // u = p = 0.5 cos t
  for (double t : {0.0, 0.3333, 1.0, 1.99, 2.0}) CHECK(std::abs(arc.control_at(t)[0] - 0.5 * std::cos(t)) < 1e-8);
  CHECK(std::abs(arc.cost - 0.5 * (0.25 * std::sin(2.0 * 2.0) / 2.0)) < 1e-8);
}
