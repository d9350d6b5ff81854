#include "ctrlab/classify.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "ctrlab/error.hpp"

namespace ctrlab {
namespace {

constexpr double kEndpointSlack = 1e-4;

struct Analysis {
  EndpointDifferential de;
  Vector cost_gradient;
};

Analysis analyze(const ProblemSpec& spec, const Control& u) {
  Analysis a{.de = d_end_point(spec, u), .cost_gradient = d_cost(spec, u).vector};
  return a;
}

MultiplierAnalysis multipliers_from(const Analysis& a, int m) {
  const double sqrt_w = std::sqrt(a.de.weight);
  // Work in the L^2 dual norm: grid coordinates scaled by 1/sqrt(T/N).
  const Matrix jt = a.de.matrix.transpose() / sqrt_w;
  const Vector g = a.cost_gradient / sqrt_w;

  MultiplierAnalysis out;
  out.state_dim = m;
  Eigen::JacobiSVD<Matrix> svd(jt, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double top = s.size() > 0 ? s[0] : 0.0;
  const double cutoff = kRankTolerance * (top > 0.0 ? top : 1.0);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] >= cutoff && s[i] > 0.0) ++out.rank;
  }
  svd.setThreshold(kRankTolerance);
  const Vector lambda = svd.solve(g);
  out.normal = Multiplier{.lambda_final = lambda, .nu = -1,
                          .residual = (jt * lambda - g).norm() / (1.0 + g.norm())};
  // Left-singular vectors of dE are the right-singular vectors of dE^T; on very
  // short grids (N d < m) the trailing columns have no singular value and are
  // kernel directions as well.
  const Matrix& v = svd.matrixV();
  for (Eigen::Index i = 0; i < m; ++i) {
    const double sigma = i < s.size() ? s[i] : 0.0;
    if (sigma < cutoff || sigma == 0.0) {
      const Vector xi = v.col(i).normalized();
      out.abnormal.push_back(Multiplier{.lambda_final = xi, .nu = 0, .residual = (jt * xi).norm()});
    }
  }
  return out;
}

void check_endpoint(const Trajectory& tr, const Vector& x) {
  if (x.size() != tr.states.rows()) throw Error(ErrorCategory::kShape, "target has wrong dimension");
  if ((tr.final_state() - x).norm() > kEndpointSlack * std::max(1.0, x.norm())) {
    throw Error(ErrorCategory::kShape, "control does not steer x0 to the given point");
  }
}

AbnormalStructure xi_from(const ProblemSpec& spec, const Control& u, const MultiplierAnalysis& mult) {
  const int m = spec.state_dim();
  AbnormalStructure out;
  out.kernel_basis = Matrix(m, static_cast<Eigen::Index>(mult.abnormal.size()));
  for (std::size_t i = 0; i < mult.abnormal.size(); ++i) out.kernel_basis.col(i) = mult.abnormal[i].lambda_final;
  if (mult.is_normal()) out.normal_shift = mult.normal.lambda_final;

  const VariationalFlow vf = integrate_variational(spec, u);
  const int last = vf.nodes() - 1;
  out.pulled_back_basis = Matrix(m, out.kernel_basis.cols());
  for (Eigen::Index i = 0; i < out.kernel_basis.cols(); ++i) {
    out.pulled_back_basis.col(i) = vf.pullback_covector(0, last, out.kernel_basis.col(i));
  }
  if (out.normal_shift) out.pulled_back_shift = vf.pullback_covector(0, last, *out.normal_shift);
  return out;
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kTrue:
      return "true";
    case Verdict::kFalse:
      return "false";
    case Verdict::kInconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

std::string_view to_string(Confidence c) {
  switch (c) {
    case Confidence::kCertifiedNumeric:
      return "certified-numeric";
    case Confidence::kHeuristic:
      return "heuristic";
    case Confidence::kInconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

std::vector<Multiplier> MultiplierAnalysis::list() const {
  std::vector<Multiplier> out;
  if (is_normal()) out.push_back(normal);
  out.insert(out.end(), abnormal.begin(), abnormal.end());
  return out;
}

RankResult rank_dE(const ProblemSpec& spec, const Control& u) {
  const EndpointDifferential de = d_end_point(spec, u);
  const RankInfo info = numeric_rank(de.matrix);
  return RankResult{info.rank, info.singular_values};
}

MultiplierAnalysis multipliers(const ProblemSpec& spec, const Control& u, const Vector& x) {
  const Analysis a = analyze(spec, u);
  check_endpoint(a.de.base_trajectory, x);
  return multipliers_from(a, spec.state_dim());
}

AbnormalStructure xi_space(const ProblemSpec& spec, const Control& u, const Vector& x) {
  const Analysis a = analyze(spec, u);
  check_endpoint(a.de.base_trajectory, x);
  const MultiplierAnalysis mult = multipliers_from(a, spec.state_dim());
  return xi_from(spec, u, mult);
}

ClassificationReport classify_point(const ProblemSpec& spec, const Vector& target, const ClassifyOptions& opts,
                                    std::span<const Control> seeds) {
  const int m = spec.state_dim();
  ClassificationReport rep;
  rep.target = target;
  rep.hormander_rank = weak_hormander_rank(spec.system, target, kDefaultBracketDepth).rank;
  rep.candidates = solve_fixed_endpoint(spec, target, opts.solve, seeds);

  if (rep.candidates.status == SolveStatus::kUnreachable) {
    rep.notes.push_back("no converged candidate: unreachable or solver failure");
    // The indirect route can still exhibit a conjugate obstruction.
    if (opts.run_shooting) {
      try {
        const ExtremalArc arc = shoot(spec, target, Vector::Zero(m), opts.shoot);
        rep.conjugate = conjugate_times(spec, arc.initial_covector);
        rep.extremal = arc;
        rep.conjugate_cleared = rep.conjugate.empty();
        if (!rep.conjugate_cleared) {
          rep.smooth = Verdict::kFalse;
          rep.notes.push_back("shot extremal passes a conjugate point before T");
        }
      } catch (const Error& e) {
        rep.notes.push_back(std::string("shooting failed: ") + e.what());
      }
    }
    rep.confidence = Confidence::kInconclusive;
    return rep;
  }

  const auto& cands = rep.candidates.candidates;
  std::vector<Analysis> analyses;
  for (const auto& c : cands) {
    analyses.push_back(analyze(spec, c.control));
    rep.multipliers.push_back(multipliers_from(analyses.back(), m));
    rep.ranks.push_back(rep.multipliers.back().rank);
  }
  rep.near_optimal = rep.candidates.near_optimal();
  int min_rank_index = rep.near_optimal.front();
  rep.class_x = rep.ranks[min_rank_index];
  for (int i : rep.near_optimal) {
    if (rep.ranks[i] < rep.class_x) {
      rep.class_x = rep.ranks[i];
      min_rank_index = i;
    }
  }
  rep.xi = xi_from(spec, cands[min_rank_index].control, rep.multipliers[min_rank_index]);

  rep.tame = rep.class_x == m ? Verdict::kTrue : Verdict::kFalse;

  const MultiplierAnalysis& best = rep.multipliers.front();
  const int clusters = rep.candidates.near_optimal_cluster_count();
  if (clusters > 1) {
    rep.fair = Verdict::kFalse;
    rep.notes.push_back("several distinct near-optimal minimizers");
  } else {
    rep.fair = best.is_normal() ? Verdict::kTrue : Verdict::kFalse;
  }
  if (best.is_normal()) rep.lambda_final = best.normal.lambda_final;

  bool cross_checked = false;
  if (rep.fair == Verdict::kTrue && rep.tame == Verdict::kTrue && best.strictly_normal()) {
    if (opts.run_shooting) {
      try {
        const Vector p0 = initial_covector(spec, cands.front().control, best.normal.lambda_final);
        ExtremalArc arc = shoot(spec, target, p0, opts.shoot);
        rep.conjugate = conjugate_times(spec, arc.initial_covector);
        rep.conjugate_cleared = rep.conjugate.empty();
        const double v = rep.candidates.best_cost();
        cross_checked = std::abs(arc.cost - v) <= kNearOptimalGap * (1.0 + std::abs(v));
        if (!cross_checked) rep.notes.push_back("shot extremal cost differs from the direct value");
        rep.extremal = std::move(arc);
        rep.smooth = rep.conjugate_cleared ? Verdict::kTrue : Verdict::kFalse;
      } catch (const Error& e) {
        rep.notes.push_back(std::string("shooting failed: ") + e.what());
        if (e.category() == ErrorCategory::kConjugateObstruction) {
          rep.conjugate_cleared = false;
          rep.smooth = Verdict::kFalse;
        }
      }
    }
  } else {
    rep.smooth = Verdict::kFalse;
  }

  const bool decided = rep.fair != Verdict::kInconclusive && rep.tame != Verdict::kInconclusive &&
                       rep.smooth != Verdict::kInconclusive;
  rep.confidence = decided && cross_checked ? Confidence::kCertifiedNumeric : Confidence::kHeuristic;
  return rep;
}

}  // namespace ctrlab
