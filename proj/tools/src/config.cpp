#include "ctrlab_tools/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "ctrlab/error.hpp"
#include "ctrlab/registry.hpp"

namespace ctrlab::tools {
namespace {

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw Error(ErrorCategory::kConfig, "config key '" + key + "': " + what);
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void allow_only(const YAML::Node& node, const std::string& where, std::initializer_list<const char*> keys) {
  if (!node.IsMap()) fail(where.empty() ? "<root>" : where, "expected a table");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) fail(join(where, key), "unknown key");
  }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) fail(key, "expected a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(key, "cannot convert '" + node.Scalar() + "'");
  }
}

template <typename T>
T value_or(const YAML::Node& parent, const std::string& where, const char* key, T fallback) {
  const YAML::Node n = parent[key];
  return n ? scalar<T>(n, join(where, key)) : fallback;
}

Vector vector_of(const YAML::Node& node, const std::string& key, int expected = -1) {
  if (!node.IsSequence()) fail(key, "expected a list of numbers");
  Vector v(static_cast<Eigen::Index>(node.size()));
  for (std::size_t i = 0; i < node.size(); ++i) v[i] = scalar<double>(node[i], key + "[" + std::to_string(i) + "]");
  if (expected >= 0 && v.size() != expected) {
    fail(key, "expected " + std::to_string(expected) + " entries, got " + std::to_string(v.size()));
  }
  return v;
}

// Polynomial table: list of [coefficient, [p1, ..., pm]] rows; an empty list
// or 0 is the zero polynomial.
Polynomial polynomial_of(const YAML::Node& node, const std::string& key, int m) {
  if (node.IsScalar()) return Polynomial::constant(m, scalar<double>(node, key));
  if (!node.IsSequence()) fail(key, "expected a coefficient table");
  std::vector<Monomial> terms;
  for (std::size_t t = 0; t < node.size(); ++t) {
    const std::string k = key + "[" + std::to_string(t) + "]";
    const YAML::Node row = node[t];
    if (!row.IsSequence() || row.size() != 2) fail(k, "expected [coefficient, [powers]]");
    Monomial mono{scalar<double>(row[0], k), {}};
    if (!row[1].IsSequence() || static_cast<int>(row[1].size()) != m) {
      fail(k, "expected " + std::to_string(m) + " exponents");
    }
    int degree = 0;
    for (std::size_t v = 0; v < row[1].size(); ++v) {
      const int p = scalar<int>(row[1][v], k);
      if (p < 0) fail(k, "negative exponent");
      mono.powers.push_back(p);
      degree += p;
    }
    if (degree > 4) fail(k, "degree above 4");
    terms.push_back(std::move(mono));
  }
  return Polynomial(m, std::move(terms));
}

VectorField field_of(const YAML::Node& node, const std::string& key, int m) {
  if (!node.IsSequence() || static_cast<int>(node.size()) != m) {
    fail(key, "expected " + std::to_string(m) + " component tables");
  }
  std::vector<Polynomial> comps;
  for (int j = 0; j < m; ++j) comps.push_back(polynomial_of(node[j], key + "[" + std::to_string(j) + "]", m));
  return VectorField(std::move(comps));
}

ControlSystem custom_system(const YAML::Node& node) {
  allow_only(node, "system", {"name", "dim", "drift", "controls", "potential", "potential_upper_bound", "chart_bounds"});
  if (!node["dim"]) fail("system.dim", "required for polynomial systems");
  const int m = scalar<int>(node["dim"], "system.dim");
  if (m < 1) fail("system.dim", "must be positive");
  const std::string name = value_or<std::string>(node, "system", "name", "custom");
  VectorField drift = node["drift"] ? field_of(node["drift"], "system.drift", m) : VectorField::zero(m);
  if (!node["controls"] || !node["controls"].IsSequence() || node["controls"].size() == 0) {
    fail("system.controls", "expected a non-empty list of fields");
  }
  std::vector<VectorField> controls;
  for (std::size_t i = 0; i < node["controls"].size(); ++i) {
    controls.push_back(field_of(node["controls"][i], "system.controls[" + std::to_string(i) + "]", m));
  }
  Polynomial q = node["potential"] ? polynomial_of(node["potential"], "system.potential", m) : Polynomial(m);
  std::optional<double> hint;
  if (node["potential_upper_bound"]) hint = scalar<double>(node["potential_upper_bound"], "system.potential_upper_bound");
  if (!node["chart_bounds"]) fail("system.chart_bounds", "required for polynomial systems");
  const YAML::Node cb = node["chart_bounds"];
  allow_only(cb, "system.chart_bounds", {"lower", "upper"});
  Box chart{vector_of(cb["lower"], "system.chart_bounds.lower", m), vector_of(cb["upper"], "system.chart_bounds.upper", m)};
  return ControlSystem(name, std::move(drift), std::move(controls), Potential(std::move(q), hint), std::move(chart));
}

Control control_of(const YAML::Node& node, const std::string& key, const ProblemSpec& spec) {
  allow_only(node, key, {"constant", "values"});
  if (node["constant"]) {
    return Control::constant(spec.horizon, spec.intervals,
                             vector_of(node["constant"], key + ".constant", spec.control_dim()));
  }
  if (!node["values"] || !node["values"].IsSequence()) fail(key, "expected 'constant' or 'values'");
  const YAML::Node rows = node["values"];
  Matrix v(static_cast<Eigen::Index>(rows.size()), spec.control_dim());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    v.row(static_cast<Eigen::Index>(k)) =
        vector_of(rows[k], key + ".values[" + std::to_string(k) + "]", spec.control_dim()).transpose();
  }
  if (v.rows() < 1) fail(key + ".values", "needs at least one interval");
  return Control(spec.horizon, std::move(v));
}

void read_solver(const YAML::Node& node, SolveOptions& o) {
  allow_only(node, "solver", {"multistart", "seed", "threads", "penalty_init", "penalty_growth", "max_outer",
                              "max_inner", "grad_tol", "constraint_tol", "lbfgs_memory", "polish_steps"});
  o.multistart_count = value_or(node, "solver", "multistart", o.multistart_count);
  o.seed = value_or<std::uint64_t>(node, "solver", "seed", o.seed);
  o.threads = value_or(node, "solver", "threads", o.threads);
  o.penalty_init = value_or(node, "solver", "penalty_init", o.penalty_init);
  o.penalty_growth = value_or(node, "solver", "penalty_growth", o.penalty_growth);
  o.max_outer = value_or(node, "solver", "max_outer", o.max_outer);
  o.max_inner = value_or(node, "solver", "max_inner", o.max_inner);
  o.grad_tol = value_or(node, "solver", "grad_tol", o.grad_tol);
  o.constraint_tol = value_or(node, "solver", "constraint_tol", o.constraint_tol);
  o.lbfgs_memory = value_or(node, "solver", "lbfgs_memory", o.lbfgs_memory);
  o.polish_steps = value_or(node, "solver", "polish_steps", o.polish_steps);
  o.validate();
}

GridSpec grid_of(const YAML::Node& node, RunConfig& cfg) {
  allow_only(node, "grid", {"axes", "fixed", "classify", "warm_start", "refine_lsc"});
  const int m = cfg.spec.state_dim();
  GridSpec g;
  if (!node["axes"] || !node["axes"].IsSequence()) fail("grid.axes", "expected a list of one or two axes");
  for (std::size_t a = 0; a < node["axes"].size(); ++a) {
    const std::string key = "grid.axes[" + std::to_string(a) + "]";
    const YAML::Node ax = node["axes"][a];
    allow_only(ax, key, {"coordinate", "lower", "upper", "resolution"});
    for (const char* required : {"coordinate", "lower", "upper", "resolution"}) {
      if (!ax[required]) fail(join(key, required), "required");
    }
    g.axes.push_back(GridAxis{scalar<int>(ax["coordinate"], key + ".coordinate"),
                              scalar<double>(ax["lower"], key + ".lower"), scalar<double>(ax["upper"], key + ".upper"),
                              scalar<int>(ax["resolution"], key + ".resolution")});
  }
  g.fixed = node["fixed"] ? vector_of(node["fixed"], "grid.fixed", m) : cfg.spec.x0;
  cfg.sweep_classify = value_or(node, "grid", "classify", false);
  cfg.warm_start = value_or(node, "grid", "warm_start", true);
  cfg.refine_lsc = value_or(node, "grid", "refine_lsc", false);
  g.validate(cfg.spec.system);
  return g;
}

ProblemSpec builtin_spec(const std::string& name, const std::string& key) {
  try {
    return make_benchmark(name).spec;
  } catch (const Error& e) {
    fail(key, e.what());
  }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  YAML::Node loaded;
  try {
    loaded = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCategory::kConfig, std::string("config does not parse: ") + e.what());
  }
  if (!loaded || loaded.IsNull()) loaded = YAML::Node(YAML::NodeType::Map);
  const YAML::Node root = loaded;  // const lookups never insert keys
  allow_only(root, "", {"system", "x0", "T", "N", "substeps", "chart_bounds", "target", "solver", "shoot", "control",
                        "seeds", "grid", "hormander", "bench"});

  if (!root["system"]) fail("system", "required");
  const YAML::Node sys = root["system"];
  std::optional<ProblemSpec> base;
  std::string label;
  if (sys.IsScalar()) {
    label = scalar<std::string>(sys, "system");
    base = builtin_spec(label, "system");
  } else if (sys.IsMap() && sys["builtin"]) {
    allow_only(sys, "system", {"builtin"});
    label = scalar<std::string>(sys["builtin"], "system.builtin");
    base = builtin_spec(label, "system.builtin");
  } else {
    ControlSystem cs = custom_system(sys);
    label = cs.name();
    const int m = cs.state_dim();
    base = ProblemSpec{std::move(cs), Vector::Zero(m), 1.0, 64, 8};
  }

  RunConfig cfg{.spec = *base, .system_label = label};
  ProblemSpec& spec = cfg.spec;
  const int m = spec.state_dim();
  if (root["chart_bounds"]) {
    const YAML::Node cb = root["chart_bounds"];
    allow_only(cb, "chart_bounds", {"lower", "upper"});
    Box chart{vector_of(cb["lower"], "chart_bounds.lower", m), vector_of(cb["upper"], "chart_bounds.upper", m)};
    const ControlSystem& s = spec.system;
    spec.system = ControlSystem(s.name(), s.drift(), s.control_fields(), s.potential(), std::move(chart));
  }
  if (root["x0"]) spec.x0 = vector_of(root["x0"], "x0", m);
  spec.horizon = value_or(root, "", "T", spec.horizon);
  spec.intervals = value_or(root, "", "N", spec.intervals);
  spec.substeps = value_or(root, "", "substeps", spec.substeps);
  try {
    spec.validate();
  } catch (const Error& e) {
    fail("system", e.what());
  }

  if (root["target"]) cfg.target = vector_of(root["target"], "target", m);
  if (root["solver"]) read_solver(root["solver"], cfg.solve);
  if (root["shoot"]) {
    const YAML::Node s = root["shoot"];
    allow_only(s, "shoot", {"p0", "max_iterations", "tolerance"});
    if (s["p0"]) cfg.p0 = vector_of(s["p0"], "shoot.p0", m);
    cfg.shoot.max_iterations = value_or(s, "shoot", "max_iterations", cfg.shoot.max_iterations);
    cfg.shoot.tolerance = value_or(s, "shoot", "tolerance", cfg.shoot.tolerance);
  }
  if (root["control"]) cfg.control = control_of(root["control"], "control", spec);
  if (cfg.control && spec.intervals % cfg.control->intervals() != 0) {
    fail("control.values", "number of intervals must divide N");
  }
  if (cfg.control && cfg.control->intervals() != spec.intervals) {
    cfg.control = cfg.control->refined(spec.intervals / cfg.control->intervals());
  }
  if (root["seeds"]) {
    if (!root["seeds"].IsSequence()) fail("seeds", "expected a list of controls");
    for (std::size_t i = 0; i < root["seeds"].size(); ++i) {
      cfg.seeds.push_back(control_of(root["seeds"][i], "seeds[" + std::to_string(i) + "]", spec));
    }
  }
  if (root["grid"]) cfg.grid = grid_of(root["grid"], cfg);
  if (root["hormander"]) {
    const YAML::Node h = root["hormander"];
    allow_only(h, "hormander", {"depth", "point"});
    cfg.hormander_depth = value_or(h, "hormander", "depth", cfg.hormander_depth);
    if (cfg.hormander_depth < 0) fail("hormander.depth", "must be nonnegative");
    if (h["point"]) cfg.point = vector_of(h["point"], "hormander.point", m);
  }
  if (root["bench"]) {
    const YAML::Node b = root["bench"];
    allow_only(b, "bench", {"systems", "directions"});
    if (b["systems"]) {
      if (!b["systems"].IsSequence()) fail("bench.systems", "expected a list of names");
      for (std::size_t i = 0; i < b["systems"].size(); ++i) {
        const auto name = scalar<std::string>(b["systems"][i], "bench.systems[" + std::to_string(i) + "]");
        builtin_spec(name, "bench.systems[" + std::to_string(i) + "]");
        cfg.bench_systems.push_back(name);
      }
    }
    cfg.bench_directions = value_or(b, "bench", "directions", cfg.bench_directions);
  }
  cfg.text = text;
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::kConfig, "cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

RunConfig default_bench_config() { return parse_config("system: lq-scalar\n"); }

}  // namespace ctrlab::tools
