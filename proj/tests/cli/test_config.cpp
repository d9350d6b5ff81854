#include <doctest.h>

#include <string>

#include "ctrlab/error.hpp"
#include "ctrlab_tools/config.hpp"

using namespace ctrlab;
using ctrlab::tools::parse_config;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::kConfig);
    return e.what();
  }
  FAIL("expected a config error");
  return {};
}

}  // namespace

TEST_CASE("builtin systems with overrides") {
  const auto cfg = parse_config("system: heisenberg\nT: 2.0\nN: 16\nsubsteps: 4\ntarget: [0.1, 0.2, 0.3]\n");
  CHECK(cfg.system_label == "heisenberg");
  CHECK(cfg.spec.horizon == 2.0);
  CHECK(cfg.spec.intervals == 16);
  CHECK(cfg.spec.substeps == 4);
  REQUIRE(cfg.target);
  CHECK((*cfg.target)[2] == 0.3);
  CHECK(parse_config("system: {builtin: martinet}\n").spec.state_dim() == 3);
}

TEST_CASE("polynomial tables build the same field as the builtin") {
  const auto cfg = parse_config(R"(
system:
  name: table
  dim: 2
  drift: [[[1.0, [0, 1]]], 0]
  controls:
    - [0, [[1.0, [0, 0]]]]
  potential: [[2.0, [1, 0]], [-1.0, [0, 2]]]
  chart_bounds: {lower: [-3, -3], upper: [3, 3]}
x0: [0.5, 0.0]
)");
  const ControlSystem& s = cfg.spec.system;
  Vector x(2), u(1);
  x << 0.4, -0.7;
  u << 2.0;
  const Vector v = s.velocity(x, u);
  CHECK(v[0] == doctest::Approx(-0.7));
  CHECK(v[1] == doctest::Approx(2.0));
  CHECK(s.potential().eval(x) == doctest::Approx(2.0 * 0.4 - 0.49));
  CHECK(cfg.spec.x0[0] == 0.5);
}

TEST_CASE("controls, seeds and grids") {
  const auto cfg = parse_config(R"(
system: lq-scalar
N: 8
control: {values: [[1.0], [2.0]]}
seeds: [{constant: [0.5]}]
grid:
  axes: [{coordinate: 0, lower: -1, upper: 1, resolution: 5}]
  classify: true
)");
  REQUIRE(cfg.control);
  CHECK(cfg.control->intervals() == 8);
  CHECK(cfg.control->value(3)[0] == 1.0);
  CHECK(cfg.control->value(4)[0] == 2.0);
  CHECK(cfg.seeds.size() == 1);
  REQUIRE(cfg.grid);
  CHECK(cfg.grid->size() == 5);
  CHECK(cfg.sweep_classify);
}

TEST_CASE("parse errors name the offending key") {
  CHECK(config_error("system: lq-scalar\nsolver: {multistrat: 2}\n").find("solver.multistrat") != std::string::npos);
  CHECK(config_error("system: lq-scalar\ntarget: [1, 2]\n").find("'target'") != std::string::npos);
  CHECK(config_error("system: nope\n").find("'system'") != std::string::npos);
  CHECK(config_error("system: lq-scalar\nT: fast\n").find("'T'") != std::string::npos);
  CHECK(config_error("target: [1]\n").find("'system'") != std::string::npos);
  CHECK(config_error("system: {dim: 1, controls: [[[[1.0, [5]]]]], chart_bounds: {lower: [-1], upper: [1]}}\n")
            .find("system.controls[0][0][0]") != std::string::npos);
  CHECK(config_error("system: lq-scalar\nN: 6\ncontrol: {values: [[1], [2], [3], [4]]}\n").find("control.values") !=
        std::string::npos);
  CHECK(config_error("system: lq-scalar\ngrid: {axes: [{coordinate: 0, lower: -1, upper: 1}]}\n")
            .find("grid.axes[0].resolution") != std::string::npos);
  CHECK(config_error("system: [unclosed\n").find("does not parse") != std::string::npos);
}
