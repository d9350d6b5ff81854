#include "ctrlab/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace ctrlab {

using nlohmann::json;

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_or_null(v[i]));
  return out;
}

json to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(to_json(Vector(m.row(r).transpose())));
  return out;
}

json to_json(const Candidate& c, bool include_control) {
  json out{{"cost", number_or_null(c.cost_value)},
           {"endpoint_residual", number_or_null(c.endpoint_residual)},
           {"converged", c.converged},
           {"stationarity", number_or_null(c.stationarity)},
           {"multiplier", to_json(c.multiplier)},
           {"l2_norm", c.control.l2_norm()},
           {"start_index", c.start_index},
           {"iterations", c.iterations}};
  if (include_control) out["control"] = to_json(c.control.values());
  return out;
}

json to_json(const CandidateSet& set, bool include_controls) {
  json cands = json::array();
  for (const auto& c : set.candidates) cands.push_back(to_json(c, include_controls));
  return json{{"target", to_json(set.target)},
              {"status", set.status == SolveStatus::kOk ? "ok" : "unreachable"},
              {"value", number_or_null(set.best_cost())},
              {"attempted", set.attempted},
              {"candidates", cands},
              {"clusters", set.clusters},
              {"near_optimal", set.near_optimal()}};
}

json to_json(const MultiplierAnalysis& a) {
  json abnormal = json::array();
  for (const auto& m : a.abnormal) {
    abnormal.push_back(json{{"covector", to_json(m.lambda_final)}, {"residual", number_or_null(m.residual)}});
  }
  return json{{"rank", a.rank},
              {"normal", json{{"covector", to_json(a.normal.lambda_final)},
                              {"residual", number_or_null(a.normal.residual)},
                              {"admitted", a.is_normal()}}},
              {"abnormal", abnormal},
              {"strictly_normal", a.strictly_normal()},
              {"strictly_abnormal", a.strictly_abnormal()}};
}

json to_json(const ExtremalArc& arc, const ControlSystem& system) {
  return json{{"initial_covector", to_json(arc.initial_covector)},
              {"final_state", to_json(arc.final_state())},
              {"cost", number_or_null(arc.cost)},
              {"hamiltonian_drift", number_or_null(arc.hamiltonian_drift(system))},
              {"blowup", arc.blowup},
              {"nodes", arc.nodes()}};
}

json to_json(const ClassificationReport& rep, const ControlSystem& system, int verbosity) {
  json mults = json::array();
  for (const auto& m : rep.multipliers) mults.push_back(to_json(m));
  json out{{"target", to_json(rep.target)},
           {"solve", to_json(rep.candidates, verbosity >= 2)},
           {"ranks", rep.ranks},
           {"class", rep.class_x},
           {"multipliers", mults},
           {"fair", std::string(to_string(rep.fair))},
           {"tame", std::string(to_string(rep.tame))},
           {"smooth", std::string(to_string(rep.smooth))},
           {"conjugate_cleared", rep.conjugate_cleared},
           {"conjugate_times", rep.conjugate},
           {"confidence", std::string(to_string(rep.confidence))},
           {"hormander_rank", rep.hormander_rank},
           {"xi_dimension", rep.xi.dimension()},
           {"xi_affine", rep.xi.affine()},
           {"notes", rep.notes}};
  out["lambda_final"] = rep.lambda_final ? to_json(*rep.lambda_final) : json(nullptr);
  if (rep.extremal) out["extremal"] = to_json(*rep.extremal, system);
  if (verbosity >= 2) {
    out["xi"] = json{{"kernel_basis", to_json(rep.xi.kernel_basis)},
                     {"pulled_back_basis", to_json(rep.xi.pulled_back_basis)}};
    if (rep.xi.normal_shift) out["xi"]["normal_shift"] = to_json(*rep.xi.normal_shift);
    if (rep.xi.pulled_back_shift) out["xi"]["pulled_back_shift"] = to_json(*rep.xi.pulled_back_shift);
  }
  return out;
}

json summary_json(const ValueMap& map, const ContinuityDiagnostics& diag) {
  json axes = json::array();
  for (const auto& ax : map.grid.axes) {
    axes.push_back(json{{"coordinate", ax.coordinate}, {"lower", ax.lower}, {"upper", ax.upper},
                        {"resolution", ax.resolution}});
  }
  json counts = json::object();
  for (CellLabel l : {CellLabel::kFair, CellLabel::kTame, CellLabel::kSmooth, CellLabel::kAbnormalFlagged,
                      CellLabel::kInconclusive, CellLabel::kUnreached}) {
    counts[std::string(to_string(l))] = std::count(map.labels.begin(), map.labels.end(), l);
  }
  json values = json::array();
  for (double v : map.values) values.push_back(number_or_null(v));
  return json{{"axes", axes},
              {"fixed", to_json(map.grid.fixed)},
              {"values", values},
              {"labels", counts},
              {"kappa", diag.kappa},
              {"jump_count", diag.jump_count},
              {"lsc_violation_count", diag.lsc_violation_count},
              {"suspect_tame_count", diag.suspect_tame_count}};
}

namespace {

void dump_into(std::string& out, const json& j, int indent, int level) {
  const std::string pad(static_cast<std::size_t>(indent * (level + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent * level), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad + json(key).dump() + ": ";
        dump_into(out, value, indent, level + 1);
      }
      out += "\n" + close_pad + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        dump_into(out, j[i], indent, level + 1);
      }
      out += "\n" + close_pad + "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_json(const json& j, int indent) {
  std::string out;
  dump_into(out, j, indent, 0);
  out += '\n';
  return out;
}

std::string csv_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_control_csv(std::ostream& out, const Control& u) {
  out << "interval,t_start,t_end";
  for (int i = 1; i <= u.channels(); ++i) out << ",u" << i;
  out << '\n';
  for (int k = 0; k < u.intervals(); ++k) {
    out << k << ',' << csv_number(k * u.interval_length()) << ',' << csv_number((k + 1) * u.interval_length());
    for (int i = 0; i < u.channels(); ++i) out << ',' << csv_number(u.values()(k, i));
    out << '\n';
  }
}

void write_arc_csv(std::ostream& out, const ExtremalArc& arc) {
  const auto m = arc.states.rows();
  const auto d = arc.controls.rows();
  out << "t";
  for (Eigen::Index j = 1; j <= m; ++j) out << ",x" << j;
  for (Eigen::Index j = 1; j <= m; ++j) out << ",p" << j;
  for (Eigen::Index j = 1; j <= d; ++j) out << ",u" << j;
  out << '\n';
  for (int k = 0; k < arc.nodes(); ++k) {
    out << csv_number(arc.times[k]);
    for (Eigen::Index j = 0; j < m; ++j) out << ',' << csv_number(arc.states(j, k));
    for (Eigen::Index j = 0; j < m; ++j) out << ',' << csv_number(arc.costates(j, k));
    for (Eigen::Index j = 0; j < d; ++j) out << ',' << csv_number(arc.controls(j, k));
    out << '\n';
  }
}

void write_value_map_csv(std::ostream& out, const ValueMap& map) {
  const GridSpec& g = map.grid;
  out << "x,y,V,label,jump\n";
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const int c = g.index(i, j);
      out << csv_number(g.axes[0].at(i)) << ',';
      if (g.axes.size() > 1) out << csv_number(g.axes[1].at(j));
      out << ',' << csv_number(map.values[c]) << ',' << to_string(map.labels[c]) << ','
          << (map.jump_flags[c] ? 1 : 0) << '\n';
    }
  }
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << csv_number(m(r, c));
    out << '\n';
  }
}

}  // namespace ctrlab
