#include <doctest.h>

#include <sstream>

#include "ctrlab/io.hpp"
#include "ctrlab/registry.hpp"

using namespace ctrlab;

TEST_CASE("infinite values are null in JSON and inf in CSV") {
  CHECK(number_or_null(std::numeric_limits<double>::infinity()).is_null());
  CHECK(number_or_null(1.5).get<double>() == 1.5);
  CHECK(csv_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(csv_number(0.1) == "0.10000000000000001");
  CHECK(std::stod(csv_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("matrices serialize row-major") {
  Matrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const auto j = to_json(m);
  CHECK(j.size() == 2);
  CHECK(j[1][0].get<double>() == 4.0);
  std::ostringstream out;
  write_matrix_csv(out, m);
  CHECK(out.str() == "1,2,3\n4,5,6\n");
}

TEST_CASE("control and value-map CSV layouts") {
  Matrix v(2, 2);
  v << 1, 2, 3, 4;
  std::ostringstream out;
  write_control_csv(out, Control(1.0, v));
  CHECK(out.str() == "interval,t_start,t_end,u1,u2\n0,0,0.5,1,2\n1,0.5,1,3,4\n");

  ValueMap map{.grid = GridSpec{{GridAxis{0, 0.0, 1.0, 2}}, Vector::Zero(1)},
               .values = {0.5, std::numeric_limits<double>::infinity()},
               .labels = {CellLabel::kSmooth, CellLabel::kUnreached},
               .jump_flags = {false, true},
               .controls = {std::nullopt, std::nullopt},
               .multipliers = {std::nullopt, std::nullopt}};
  std::ostringstream heat;
  write_value_map_csv(heat, map);
  CHECK(heat.str() == "x,y,V,label,jump\n0,,0.5,smooth,0\n1,,inf,unreached,1\n");

  const auto summary = summary_json(map, ContinuityDiagnostics{});
  CHECK(summary["values"][1].is_null());
  CHECK(summary["labels"]["smooth"].get<int>() == 1);
}

TEST_CASE("classification report JSON is deterministic and hides matrices at low verbosity") {
  const auto spec = make_benchmark("lq-scalar").spec.with_intervals(8);
  ClassifyOptions opts;
  opts.solve.multistart_count = 2;
  const auto rep = classify_point(spec, Vector::Constant(1, 0.5), opts);
  const auto quiet = to_json(rep, spec.system, 1);
  const auto loud = to_json(rep, spec.system, 2);
  CHECK_FALSE(quiet.contains("xi"));
  CHECK(loud.contains("xi"));
  CHECK_FALSE(quiet["solve"]["candidates"][0].contains("control"));
  CHECK(loud["solve"]["candidates"][0].contains("control"));
  CHECK(quiet["smooth"] == "true");
  CHECK(quiet["class"] == 1);

  const auto again = to_json(classify_point(spec, Vector::Constant(1, 0.5), opts), spec.system, 1);
  CHECK(quiet.dump() == again.dump());
}

TEST_CASE("extremal arc CSV has t, x, p, u columns") {
  const auto spec = make_benchmark("heisenberg").spec.with_intervals(2);
  ProblemSpec s = spec;
  s.substeps = 1;
  const ExtremalArc arc = normal_arc(s, Eigen::Vector3d(1, 0, 0));
  std::ostringstream out;
  write_arc_csv(out, arc);
  std::string header;
  std::istringstream in(out.str());
  std::getline(in, header);
  CHECK(header == "t,x1,x2,x3,p1,p2,p3,u1,u2");
}

TEST_CASE("JSON numbers use 17 significant digits") {
  const nlohmann::json j{{"a", 0.1}, {"b", {1, 2.5}}, {"c", nullptr}, {"d", "x\"y"}};
  CHECK(dump_json(j) ==
        "{\n  \"a\": 0.10000000000000001,\n  \"b\": [\n    1,\n    2.5\n  ],\n  \"c\": null,\n  \"d\": \"x\\\"y\"\n}\n");
  CHECK(nlohmann::json::parse(dump_json(j)) == j);
}
