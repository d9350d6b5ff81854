#include "ctrlab/direct.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>
#include <thread>

#include <Eigen/SVD>

#include "ctrlab/error.hpp"

namespace ctrlab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Augmented Lagrangian h(u) = C(u) + lambda^T r + rho/2 |r|^2, r = E(u) - x,
// in L^2-isometric coordinates y = sqrt(T/N) u.
class AugmentedLagrangian {
 public:
  AugmentedLagrangian(const ProblemSpec& spec, const Vector& target)
      : spec_(spec), target_(target), sqrt_w_(std::sqrt(spec.horizon / spec.intervals)) {}

  void set(const Vector& lambda, double rho) {
    lambda_ = lambda;
    rho_ = rho;
  }

  Control control_of(const Vector& y) const {
    return Control::from_flat(spec_.horizon, spec_.intervals, spec_.control_dim(), y / sqrt_w_);
  }
  Vector coords_of(const Control& u) const { return u.flat() * sqrt_w_; }

  double value(const Vector& y) const {
    const Trajectory tr = integrate(spec_, control_of(y));
    if (tr.blowup) return kInf;
    const Vector r = tr.final_state() - target_;
    const double c = 0.5 * tr.control.l2_norm_squared() - 0.5 * tr.potential_integral;
    return c + lambda_.dot(r) + 0.5 * rho_ * r.squaredNorm();
  }

  // Returns +inf (and leaves grad untouched) on blow-up.
  double value_and_gradient(const Vector& y, Vector& grad, Vector* residual = nullptr) const {
    AdjointEvaluation ev;
    try {
      ev = evaluate_with_adjoint(
          spec_, control_of(y),
          [&](const Vector& endpoint) -> Vector { return lambda_ + rho_ * (endpoint - target_); }, 1.0);
    } catch (const Error& e) {
      if (e.category() == ErrorCategory::kInadmissibleControl) return kInf;
      throw;
    }
    const Vector r = ev.endpoint - target_;
    if (residual != nullptr) *residual = r;
    grad = ev.gradient / sqrt_w_;
    return ev.cost + lambda_.dot(r) + 0.5 * rho_ * r.squaredNorm();
  }

 private:
  const ProblemSpec& spec_;
  const Vector& target_;
  double sqrt_w_;
  Vector lambda_;
  double rho_ = 0.0;
};

struct InnerResult {
  Vector y;
  double value = kInf;
  double grad_norm = kInf;
  int iterations = 0;
};

// L-BFGS with Armijo backtracking (factor 1/2); restarts from steepest descent
// when the quasi-Newton direction fails to descend.
InnerResult minimize_lbfgs(const AugmentedLagrangian& f, Vector y, double tol, int max_iter, int memory) {
  InnerResult res;
  Vector g;
  double fy = f.value_and_gradient(y, g);
  if (!std::isfinite(fy)) {
    res.y = y;
    return res;
  }
  std::deque<Vector> s_hist, z_hist;
  std::deque<double> rho_hist;
  int it = 0;
  for (; it < max_iter; ++it) {
    if (g.norm() <= tol) break;
    // Two-loop recursion.
    Vector q = g;
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * z_hist[i];
    }
    if (!s_hist.empty()) q *= s_hist.back().dot(z_hist.back()) / z_hist.back().squaredNorm();
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * z_hist[i].dot(q);
      q += s_hist[i] * (alpha[i] - beta);
    }
    Vector dir = -q;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      s_hist.clear();
      z_hist.clear();
      rho_hist.clear();
      dir = -g;
      slope = -g.squaredNorm();
    }
    double step = 1.0;
    if (s_hist.empty()) step = std::min(1.0, 1.0 / std::max(g.norm(), 1e-300));
    Vector y_new;
    double f_new = kInf;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      y_new = y + step * dir;
      f_new = f.value(y_new);
      if (std::isfinite(f_new) && f_new <= fy + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (s_hist.empty()) break;  // steepest descent failed too
      s_hist.clear();
      z_hist.clear();
      rho_hist.clear();
      continue;
    }
    Vector g_new;
    f_new = f.value_and_gradient(y_new, g_new);
    if (!std::isfinite(f_new)) break;
    const Vector s = y_new - y;
    const Vector z = g_new - g;
    const double sz = s.dot(z);
    if (sz > 1e-14 * s.norm() * z.norm()) {
      s_hist.push_back(s);
      z_hist.push_back(z);
      rho_hist.push_back(1.0 / sz);
      if (static_cast<int>(s_hist.size()) > memory) {
        s_hist.pop_front();
        z_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    const bool stalled = std::abs(fy - f_new) <= 1e-16 * (1.0 + std::abs(fy));
    y = std::move(y_new);
    g = std::move(g_new);
    fy = f_new;
    if (stalled) break;
  }
  res.y = std::move(y);
  res.value = fy;
  res.grad_norm = g.norm();
  res.iterations = it;
  return res;
}

// Minimum-L^2-norm correction onto {E = x} with the linearized constraint.
Control feasibility_polish(const ProblemSpec& spec, const Vector& target, Control u, int steps) {
  double residual = kInf;
  for (int it = 0; it < steps; ++it) {
    EndpointDifferential de;
    try {
      de = d_end_point(spec, u);
    } catch (const Error&) {
      break;
    }
    const Vector r = de.base_trajectory.final_state() - target;
    residual = r.norm();
    if (residual == 0.0) break;
    // The L^2 metric is a multiple of the identity in grid coordinates, so the
    // Euclidean minimum-norm solution is also the L^2 one.
    Eigen::JacobiSVD<Matrix> svd(de.matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-10);
    const Vector delta = -svd.solve(r);  // minimum-norm solution of J delta = -r
    Control trial = Control::from_flat(u.horizon(), u.intervals(), u.channels(), u.flat() + delta);
    const Trajectory tr = integrate(spec, trial);
    if (tr.blowup) break;
    const double new_residual = (tr.final_state() - target).norm();
    if (!(new_residual < residual)) break;
    u = std::move(trial);
    residual = new_residual;
  }
  return u;
}

double target_scale(const ProblemSpec& spec, const Vector& target) {
  return std::max(1.0, (target - spec.x0).norm());
}

Candidate finish_candidate(const ProblemSpec& spec, const Vector& target, Control u, const SolveOptions& opts,
                           int iterations) {
  Candidate c;
  c.control = std::move(u);
  c.iterations = iterations;
  AdjointEvaluation ev;
  EndpointDifferential de;
  try {
    ev = evaluate_with_adjoint(spec, c.control, Vector(Vector::Zero(spec.state_dim())), 1.0);
    de = d_end_point(spec, c.control);
  } catch (const Error& e) {
    if (e.category() == ErrorCategory::kInadmissibleControl) return c;
    throw;
  }
  c.endpoint_residual = (ev.endpoint - target).norm();
  c.cost_value = ev.cost;
  // lambda dE = dC in the L^2 dual norm (grid coordinates scaled by 1/sqrt(w)).
  const double sqrt_w = std::sqrt(de.weight);
  Eigen::JacobiSVD<Matrix> svd(de.matrix.transpose() / sqrt_w, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector rhs = ev.gradient / sqrt_w;
  c.multiplier = svd.solve(rhs);
  c.stationarity = (de.matrix.transpose() * c.multiplier / sqrt_w - rhs).norm() / (1.0 + rhs.norm());
  c.converged = c.endpoint_residual <= opts.constraint_tol * target_scale(spec, target);
  return c;
}

}  // namespace

void SolveOptions::validate() const {
  if (!(penalty_init > 0.0) || !(penalty_growth > 1.0) || max_outer < 1 || max_inner < 1 ||
      !(grad_tol > 0.0) || !(constraint_tol > 0.0) || multistart_count < 0 || threads < 1 ||
      lbfgs_memory < 1 || polish_steps < 0) {
    throw Error(ErrorCategory::kConfig, "solver options out of range");
  }
}

Candidate local_solve(const ProblemSpec& spec, const Vector& target, const Control& start,
                      const SolveOptions& opts) {
  opts.validate();
  const int m = spec.state_dim();
  AugmentedLagrangian al(spec, target);
  Vector lambda = Vector::Zero(m);
  double rho = opts.penalty_init;
  Vector y = al.coords_of(start);
  const double ctol = opts.constraint_tol * target_scale(spec, target);
  double prev_residual = kInf;
  int iterations = 0;
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    al.set(lambda, rho);
    const double inner_tol = std::max(opts.grad_tol, 1e-2 * std::pow(0.1, outer));
    InnerResult inner = minimize_lbfgs(al, y, inner_tol, opts.max_inner, opts.lbfgs_memory);
    iterations += inner.iterations;
    if (!std::isfinite(inner.value)) break;
    y = inner.y;
    Vector g, r;
    al.value_and_gradient(y, g, &r);
    const double residual = r.norm();
    if (residual <= ctol && g.norm() <= opts.grad_tol) break;
    lambda += rho * r;
    if (residual > 0.25 * prev_residual) rho *= opts.penalty_growth;
    rho = std::min(rho, 1e12);
    prev_residual = residual;
  }
  Control u = al.control_of(y);
  u = feasibility_polish(spec, target, std::move(u), opts.polish_steps);
  return finish_candidate(spec, target, std::move(u), opts, iterations);
}

double CandidateSet::best_cost() const { return candidates.empty() ? kInf : candidates.front().cost_value; }

std::vector<int> CandidateSet::near_optimal() const {
  std::vector<int> out;
  if (candidates.empty()) return out;
  const double best = best_cost();
  const double gap = kNearOptimalGap * (1.0 + std::abs(best));
  for (int i = 0; i < static_cast<int>(candidates.size()); ++i) {
    if (candidates[i].cost_value <= best + gap) out.push_back(i);
  }
  return out;
}

int CandidateSet::near_optimal_cluster_count() const {
  const auto near = near_optimal();
  int count = 0;
  for (const auto& cluster : clusters) {
    if (std::any_of(cluster.begin(), cluster.end(),
                    [&](int i) { return std::find(near.begin(), near.end(), i) != near.end(); })) {
      ++count;
    }
  }
  return count;
}

std::vector<std::vector<int>> cluster_candidates(const std::vector<Candidate>& candidates) {
  const int n = static_cast<int>(candidates.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Control& a = candidates[i].control;
      const Control& b = candidates[j].control;
      const double dist = std::sqrt((a.values() - b.values()).squaredNorm() * a.interval_length());
      const double radius = kClusterRadius * std::max({1.0, a.l2_norm(), b.l2_norm()});
      if (dist < radius) parent[find(i)] = find(j);
    }
  }
  std::vector<std::vector<int>> clusters;
  std::vector<int> slot(n, -1);
  for (int i = 0; i < n; ++i) {
    const int root = find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(clusters.size());
      clusters.emplace_back();
    }
    clusters[slot[root]].push_back(i);
  }
  return clusters;
}

CandidateSet solve_fixed_endpoint(const ProblemSpec& spec, const Vector& target, const SolveOptions& opts,
                                  std::span<const Control> seeds) {
  opts.validate();
  spec.validate();
  if (target.size() != spec.state_dim()) throw Error(ErrorCategory::kShape, "target has wrong dimension");
  if (!spec.system.chart().contains(target)) throw Error(ErrorCategory::kConfig, "target outside chart bounds");

  std::vector<Control> starts;
  for (const auto& s : seeds) {
    if (s.intervals() == spec.intervals) {
      starts.push_back(s);
    } else if (spec.intervals % s.intervals() == 0) {
      starts.push_back(s.refined(spec.intervals / s.intervals()));
    } else {
      throw Error(ErrorCategory::kShape, "seed grid does not embed in the problem grid");
    }
  }
  const int num_seeds = static_cast<int>(starts.size());
  const double scale = (target - spec.x0).norm() / spec.horizon;
  for (int s = 0; s < opts.multistart_count; ++s) {
    std::mt19937_64 rng(opts.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(s));
    std::normal_distribution<double> normal(0.0, 1.0);
    Control c = spec.zero_control();
    for (int k = 0; k < c.intervals(); ++k) {
      for (int i = 0; i < c.channels(); ++i) c.values()(k, i) = scale * normal(rng);
    }
    starts.push_back(std::move(c));
  }

  std::vector<Candidate> results(starts.size());
  auto run = [&](std::size_t i) {
    results[i] = local_solve(spec, target, starts[i], opts);
    results[i].start_index = static_cast<int>(i) - num_seeds;
  };
  const int threads = std::min<int>(opts.threads, static_cast<int>(starts.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < starts.size(); ++i) run(i);
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < starts.size(); i += threads) run(i);
      });
    }
  }

  CandidateSet out;
  out.target = target;
  out.attempted = static_cast<int>(starts.size());
  for (auto& c : results) {
    if (c.converged) out.candidates.push_back(std::move(c));
  }
  std::stable_sort(out.candidates.begin(), out.candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.cost_value < b.cost_value; });
  out.clusters = cluster_candidates(out.candidates);
  out.status = out.candidates.empty() ? SolveStatus::kUnreachable : SolveStatus::kOk;
  return out;
}

double value_estimate(const ProblemSpec& spec, const Vector& target, const SolveOptions& opts,
                      std::span<const Control> seeds) {
  return solve_fixed_endpoint(spec, target, opts, seeds).best_cost();
}

}  // namespace ctrlab
