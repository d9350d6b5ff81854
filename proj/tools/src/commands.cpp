#include "ctrlab_tools/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include <Eigen/Core>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include "ctrlab/endpoint.hpp"
#include "ctrlab/io.hpp"
#include "ctrlab/registry.hpp"
#include "ctrlab/version.hpp"
#include "ctrlab_tools/config.hpp"

namespace ctrlab::tools {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct OracleFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Context {
  const CliOptions& options;
  RunConfig config;
  fs::path out;
  std::ostream& log;
};

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCategory::kConfig, "cannot write '" + path.string() + "'");
  f << contents;
}

template <typename Writer>
void write_csv(const fs::path& path, Writer&& writer) {
  std::ostringstream s;
  writer(s);
  write_file(path, s.str());
}

const Vector& require_target(const RunConfig& cfg) {
  if (!cfg.target) throw Error(ErrorCategory::kConfig, "config key 'target': required for this command");
  return *cfg.target;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

std::string vec_str(const Vector& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + ")";
}

// --- simulate -------------------------------------------------------------

std::string simulate(Context& ctx) {
  const ProblemSpec& spec = ctx.config.spec;
  const Control u = ctx.config.control.value_or(spec.zero_control());
  const Trajectory tr = integrate(spec, u);
  write_csv(ctx.out / "trajectory.csv", [&](std::ostream& s) { write_trajectory_csv(s, tr); });
  json result{{"system", ctx.config.system_label},
              {"blowup", tr.blowup},
              {"nodes", tr.nodes()},
              {"final_state", to_json(tr.final_state())},
              {"potential_integral", number_or_null(tr.potential_integral)}};
  if (!tr.blowup) result["cost"] = number_or_null(cost(spec, u));
  write_file(ctx.out / "result.json", dump_json(result));
  if (tr.blowup) throw Error(ErrorCategory::kInadmissibleControl, "trajectory left the chart or blew up");
  return "simulate " + ctx.config.system_label + ": x(T) = " + vec_str(tr.final_state());
}

// --- solve ----------------------------------------------------------------

std::string solve(Context& ctx) {
  const ProblemSpec& spec = ctx.config.spec;
  const Vector& x = require_target(ctx.config);
  const CandidateSet set = solve_fixed_endpoint(spec, x, ctx.config.solve, ctx.config.seeds);
  write_file(ctx.out / "candidates.json", dump_json(to_json(set, ctx.options.verbosity >= 2)));
  if (set.status != SolveStatus::kOk) {
    throw Error(ErrorCategory::kUnreachable, "no start converged to " + vec_str(x));
  }
  write_csv(ctx.out / "best_control.csv", [&](std::ostream& s) { write_control_csv(s, set.candidates.front().control); });
  return "solve " + ctx.config.system_label + ": V" + vec_str(x) + " ~ " + fmt(set.best_cost()) + " (" +
         std::to_string(set.candidates.size()) + "/" + std::to_string(set.attempted) + " starts converged)";
}

// --- shoot ----------------------------------------------------------------

std::string shoot_cmd(Context& ctx) {
  const ProblemSpec& spec = ctx.config.spec;
  const Vector& x = require_target(ctx.config);
  Vector p0;
  std::string origin = "config";
  if (ctx.config.p0) {
    p0 = *ctx.config.p0;
  } else {
    // Start Newton from the covector of the best direct solution.
    const CandidateSet set = solve_fixed_endpoint(spec, x, ctx.config.solve, ctx.config.seeds);
    if (set.status != SolveStatus::kOk) throw Error(ErrorCategory::kUnreachable, "no direct solution to start from");
    const Candidate& best = set.candidates.front();
    p0 = initial_covector(spec, best.control, best.multiplier);
    origin = "direct";
  }
  const ExtremalArc arc = shoot(spec, x, p0, ctx.config.shoot);
  const std::vector<double> conj = conjugate_times(spec, arc.initial_covector);
  json j = to_json(arc, spec.system);
  j["target"] = to_json(x);
  j["p0_start"] = to_json(p0);
  j["p0_origin"] = origin;
  j["conjugate_times"] = conj;
  write_file(ctx.out / "extremal.json", dump_json(j));
  write_csv(ctx.out / "arc.csv", [&](std::ostream& s) { write_arc_csv(s, arc); });
  return "shoot " + ctx.config.system_label + ": cost " + fmt(arc.cost) + ", " + std::to_string(conj.size()) +
         " conjugate time(s) in (0, T]";
}

// --- classify -------------------------------------------------------------

std::string classify(Context& ctx) {
  const ProblemSpec& spec = ctx.config.spec;
  const Vector& x = require_target(ctx.config);
  ClassifyOptions co{.solve = ctx.config.solve, .shoot = ctx.config.shoot};
  const ClassificationReport rep = classify_point(spec, x, co, ctx.config.seeds);
  write_file(ctx.out / "report.json", dump_json(to_json(rep, spec.system, ctx.options.verbosity)));
  if (rep.candidates.status == SolveStatus::kOk) {
    write_csv(ctx.out / "best_control.csv",
              [&](std::ostream& s) { write_control_csv(s, rep.candidates.candidates.front().control); });
  }
  if (rep.extremal) write_csv(ctx.out / "arc.csv", [&](std::ostream& s) { write_arc_csv(s, *rep.extremal); });
  return "classify " + ctx.config.system_label + " " + vec_str(x) + ": class " + std::to_string(rep.class_x) +
         ", fair " + std::string(to_string(rep.fair)) + ", tame " + std::string(to_string(rep.tame)) + ", smooth " +
         std::string(to_string(rep.smooth)) + " [" + std::string(to_string(rep.confidence)) + "]";
}

// --- sweep ----------------------------------------------------------------

std::string sweep(Context& ctx) {
  const RunConfig& cfg = ctx.config;
  if (!cfg.grid) throw Error(ErrorCategory::kConfig, "config key 'grid': required for sweep");
  SweepOptions so{.solve = cfg.solve,
                  .classify_options = ClassifyOptions{.solve = cfg.solve, .shoot = cfg.shoot},
                  .classify = cfg.sweep_classify,
                  .warm_start = cfg.warm_start,
                  .threads = cfg.solve.threads};
  // Each cell solve stays single-threaded; parallelism is across cells.
  so.solve.threads = 1;
  so.classify_options.solve.threads = 1;
  ValueMap map = value_map(cfg.spec, *cfg.grid, so);
  std::function<double(const Vector&)> refine;
  if (cfg.refine_lsc) {
    const ProblemSpec fine = cfg.spec.with_intervals(2 * cfg.spec.intervals);
    refine = [&, fine](const Vector& x) { return value_estimate(fine, x, so.solve); };
  }
  const ContinuityDiagnostics diag = continuity_diagnostics(map, refine);
  map.jump_flags = diag.jump;
  write_csv(ctx.out / "heatmap.csv", [&](std::ostream& s) { write_value_map_csv(s, map); });
  write_file(ctx.out / "summary.json", dump_json(summary_json(map, diag)));
  const auto reached = std::count_if(map.values.begin(), map.values.end(), [](double v) { return std::isfinite(v); });
  return "sweep " + cfg.system_label + ": " + std::to_string(reached) + "/" + std::to_string(map.grid.size()) +
         " cells reached, " + std::to_string(diag.jump_count) + " jump flag(s)";
}

// --- hormander ------------------------------------------------------------

std::string hormander(Context& ctx) {
  const ProblemSpec& spec = ctx.config.spec;
  const Vector x = ctx.config.point.value_or(spec.x0);
  const HormanderRank r = weak_hormander_rank(spec.system, x, ctx.config.hormander_depth);
  const bool full = r.rank == spec.state_dim();
  json j{{"system", ctx.config.system_label},
         {"point", to_json(x)},
         {"depth", r.depth},
         {"rank", r.rank},
         {"state_dim", spec.state_dim()},
         {"generators", r.generators},
         {"full_rank", full}};
  if (!full) j["note"] = "rank deficient at this depth only; higher brackets are not examined";
  write_file(ctx.out / "hormander.json", dump_json(j));
  return "hormander " + ctx.config.system_label + ": rank " + std::to_string(r.rank) + "/" +
         std::to_string(spec.state_dim()) + " at depth " + std::to_string(r.depth);
}

// --- bench ----------------------------------------------------------------

struct Check {
  std::string system;
  std::string name;
  double value;
  double tolerance;
  bool pass;
  std::string detail;
};

// Worst relative central-difference error of dE and dC over random directions.
std::pair<double, double> differential_errors(const ProblemSpec& spec, int directions, std::mt19937_64& rng) {
  const double eps = 1e-6;
  std::normal_distribution<double> g;
  const int n = spec.intervals * spec.control_dim();
  Vector flat(n);
  for (auto& v : flat) v = 0.3 * g(rng);
  const Control u = Control::from_flat(spec.horizon, spec.intervals, spec.control_dim(), flat);
  const EndpointDifferential de = d_end_point(spec, u);
  const CostGradient dc = d_cost(spec, u);
  double worst_e = 0.0, worst_c = 0.0;
  for (int k = 0; k < directions; ++k) {
    Vector dir(n);
    for (auto& v : dir) v = g(rng);
    dir /= dir.norm() * std::sqrt(spec.horizon / spec.intervals);  // unit L^2 norm
    const Control plus = Control::from_flat(spec.horizon, spec.intervals, spec.control_dim(), flat + eps * dir);
    const Control minus = Control::from_flat(spec.horizon, spec.intervals, spec.control_dim(), flat - eps * dir);
    const Vector fd_e = (end_point(spec, plus) - end_point(spec, minus)) / (2 * eps);
    const Vector an_e = de.matrix * dir;
    worst_e = std::max(worst_e, (fd_e - an_e).norm() / std::max(1e-3, an_e.norm()));
    const double fd_c = (cost(spec, plus) - cost(spec, minus)) / (2 * eps);
    const double an_c = dc.vector.dot(dir);
    worst_c = std::max(worst_c, std::abs(fd_c - an_c) / std::max(1e-3, std::abs(an_c)));
  }
  return {worst_e, worst_c};
}

std::string bench(Context& ctx) {
  const RunConfig& cfg = ctx.config;
  std::vector<std::string> names = cfg.bench_systems.empty() ? benchmark_names() : cfg.bench_systems;
  std::vector<Check> checks;
  std::mt19937_64 rng(cfg.solve.seed);
  SolveOptions so = cfg.solve;
  so.multistart_count = std::min(so.multistart_count, 4);

  for (const auto& name : names) {
    const Benchmark b = make_benchmark(name);
    const ProblemSpec& spec = b.spec;
    const Trajectory tr = integrate(spec, spec.zero_control());
    checks.push_back({name, "integrate-zero", tr.blowup ? 1.0 : 0.0, 0.0, !tr.blowup, "u = 0 stays admissible"});

    const auto [err_e, err_c] = differential_errors(spec, cfg.bench_directions, rng);
    checks.push_back({name, "d_end_point-fd", err_e, 1e-5, err_e <= 1e-5, "relative central-difference error"});
    checks.push_back({name, "d_cost-fd", err_c, 1e-5, err_c <= 1e-5, "relative central-difference error"});

    if (b.value_oracle) {
      for (const Vector& x : b.sample_targets) {
        const std::optional<double> exact = b.value_oracle(spec, x);
        if (!exact) continue;
        const double v = value_estimate(spec, x, so);
        const double e = std::abs(v - *exact);
        checks.push_back({name, "value-oracle", e, 1e-3, e <= 1e-3, "target " + vec_str(x)});
      }
    }

    const Vector& x = b.sample_targets.front();
    const CandidateSet set = solve_fixed_endpoint(spec, x, so);
    if (set.status != SolveStatus::kOk) {
      checks.push_back({name, "direct-vs-shoot", INFINITY, 1e-3, false, "direct solve did not converge"});
      continue;
    }
    const Candidate& best = set.candidates.front();
    try {
      const ExtremalArc arc = shoot(spec, x, initial_covector(spec, best.control, best.multiplier), cfg.shoot);
      const double gap = std::abs(arc.cost - best.cost_value);
      checks.push_back({name, "direct-vs-shoot", gap, 1e-3, gap <= 1e-3, "target " + vec_str(x)});
      const double drift = arc.hamiltonian_drift(spec.system);
      checks.push_back({name, "hamiltonian-drift", drift, 1e-6, drift <= 1e-6, "relative drift along the arc"});
    } catch (const Error& e) {
      checks.push_back({name, "direct-vs-shoot", INFINITY, 1e-3, false,
                        std::string(to_string(e.category())) + ": " + e.what()});
    }
  }

  if (std::find(names.begin(), names.end(), "oscillator-potential") != names.end()) {
    const ProblemSpec spec = make_benchmark("oscillator-potential").spec.with_horizon(4.0);
    const std::vector<double> conj = conjugate_times(spec, Vector::Constant(1, 1.0));
    const double e = conj.empty() ? INFINITY : std::abs(conj.front() - std::numbers::pi);
    checks.push_back({"oscillator-potential", "first-conjugate-time", e, 1e-3, e <= 1e-3, "T = 4, expected pi"});
  }

  int failed = 0;
  json rows = json::array();
  const bool table = ctx.options.verbosity >= 1;
  if (table) {
    ctx.log << std::left << std::setw(22) << "system" << std::setw(22) << "check" << std::setw(16) << "value"
            << std::setw(10) << "tol" << "result\n";
  }
  for (const auto& c : checks) {
    failed += !c.pass;
    if (table || !c.pass) {
      ctx.log << std::left << std::setw(22) << c.system << std::setw(22) << c.name << std::setw(16) << fmt(c.value)
              << std::setw(10) << fmt(c.tolerance) << (c.pass ? "PASS" : "FAIL") << "\n";
    }
    rows.push_back(json{{"system", c.system},
                        {"check", c.name},
                        {"value", number_or_null(c.value)},
                        {"tolerance", c.tolerance},
                        {"pass", c.pass},
                        {"detail", c.detail}});
  }
  write_file(ctx.out / "bench.json",
             dump_json(json{{"checks", rows}, {"passed", static_cast<int>(checks.size()) - failed}, {"failed", failed}}));
  if (failed > 0) throw OracleFailure(std::to_string(failed) + " oracle check(s) failed");
  return "bench: " + std::to_string(checks.size()) + " checks passed";
}

std::string eigen_version() {
  return std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
         std::to_string(EIGEN_MINOR_VERSION);
}

json manifest(const Context& ctx) {
  return json{{"command", ctx.options.command},
              {"system", ctx.config.system_label},
              {"config_sha256", sha256_hex(ctx.config.text)},
              {"seed", ctx.config.solve.seed},
              {"threads", ctx.config.solve.threads},
              {"verbosity", ctx.options.verbosity},
              {"versions",
               json{{"ctrlab", kVersion},
                    {"eigen", eigen_version()},
                    {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}}};
}

using Handler = std::string (*)(Context&);

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> table{
      {"bench", &bench},       {"classify", &classify}, {"hormander", &hormander}, {"shoot", &shoot_cmd},
      {"simulate", &simulate}, {"solve", &solve},       {"sweep", &sweep}};
  return table;
}

}  // namespace

std::vector<std::string> command_names() {
  std::vector<std::string> out;
  for (const auto& [name, _] : handlers()) out.push_back(name);
  return out;
}

int exit_code(ErrorCategory category) { return 10 + static_cast<int>(category); }

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::ostringstream s;
  for (unsigned int i = 0; i < len; ++i) s << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return s.str();
}

int run(const CliOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const auto it = handlers().find(options.command);
    if (it == handlers().end()) throw Error(ErrorCategory::kConfig, "unknown command '" + options.command + "'");
    if (options.config_path.empty() && options.command != "bench") {
      throw Error(ErrorCategory::kConfig, "--config is required for '" + options.command + "'");
    }
    RunConfig cfg = options.config_path.empty() ? default_bench_config() : load_config(options.config_path);
    if (options.seed) cfg.solve.seed = *options.seed;
    if (options.threads) {
      if (*options.threads < 1) throw Error(ErrorCategory::kConfig, "--threads must be at least 1");
      cfg.solve.threads = *options.threads;
    }
    const fs::path dir = options.out_dir.empty() ? fs::path("out") / options.command : fs::path(options.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCategory::kConfig, "cannot create output directory '" + dir.string() + "'");

    Context ctx{options, std::move(cfg), dir, out};
    write_file(dir / "manifest.json", dump_json(manifest(ctx)));
    const std::string summary = it->second(ctx);
    out << summary << "\n";
    return 0;
  } catch (const Error& e) {
    err << "error[" << to_string(e.category()) << "]: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const OracleFailure& e) {
    err << "bench: " << e.what() << "\n";
    return kExitOracleFailure;
  } catch (const std::exception& e) {
    err << "error[internal]: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace ctrlab::tools
