#include "ctrlab/extremal.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "ctrlab/error.hpp"
#include "ctrlab/flow.hpp"

namespace ctrlab {
namespace {

// Phase point w = (x, p) plus the running cost c.
struct HamiltonianRhs {
  const ControlSystem& sys;

  // Returns (dx, dp); dc receives the Lagrangian 1/2 (|u|^2 - Q).
  Vector operator()(const Vector& w, double& dc) const {
    const int m = sys.state_dim();
    const Vector x = w.head(m);
    const Vector p = w.tail(m);
    Vector dx = sys.drift().eval(x);
    Vector dp = -sys.drift().jacobian(x).transpose() * p;
    double usq = 0.0;
    for (const auto& f : sys.control_fields()) {
      const Vector xi = f.eval(x);
      const double h = p.dot(xi);
      usq += h * h;
      dx += h * xi;
      dp -= h * (f.jacobian(x).transpose() * p);
    }
    double q = 0.0;
    if (!sys.potential().is_zero()) {
      q = sys.potential().eval(x);
      dp -= 0.5 * sys.potential().gradient(x);
    }
    dc = 0.5 * (usq - q);
    Vector out(2 * m);
    out << dx, dp;
    return out;
  }

  Matrix jacobian(const Vector& w) const {
    const int m = sys.state_dim();
    const Vector x = w.head(m);
    const Vector p = w.tail(m);
    const Matrix a0 = sys.drift().jacobian(x);
    Matrix xx = a0;
    Matrix xp = Matrix::Zero(m, m);
    Matrix px = -sys.drift().weighted_hessian(x, p);
    for (const auto& f : sys.control_fields()) {
      const Vector xi = f.eval(x);
      const Matrix dxi = f.jacobian(x);
      const double h = p.dot(xi);
      const Vector dh = dxi.transpose() * p;  // d h / d x
      xx += h * dxi + xi * dh.transpose();
      xp += xi * xi.transpose();
      px -= h * f.weighted_hessian(x, p) + dh * dh.transpose();
    }
    if (!sys.potential().is_zero()) px -= 0.5 * sys.potential().hessian(x);
    Matrix out(2 * m, 2 * m);
    out << xx, xp, px, -xx.transpose();
    return out;
  }
};

bool finite_in_chart(const ControlSystem& sys, const Vector& w) {
  const int m = sys.state_dim();
  return w.allFinite() && (w.array().abs() <= kBlowupMagnitude).all() && sys.chart().contains(w.head(m));
}

void rk4_hamiltonian(const HamiltonianRhs& rhs, Vector& w, double& c, double h, Matrix* tangent) {
  double c1, c2, c3, c4;
  const Vector w1 = w;
  const Vector k1 = rhs(w1, c1);
  const Vector w2 = w + 0.5 * h * k1;
  const Vector k2 = rhs(w2, c2);
  const Vector w3 = w + 0.5 * h * k2;
  const Vector k3 = rhs(w3, c3);
  const Vector w4 = w + h * k3;
  const Vector k4 = rhs(w4, c4);
  if (tangent != nullptr) {
    const Matrix& g = *tangent;
    const Matrix d1 = rhs.jacobian(w1) * g;
    const Matrix d2 = rhs.jacobian(w2) * (g + 0.5 * h * d1);
    const Matrix d3 = rhs.jacobian(w3) * (g + 0.5 * h * d2);
    const Matrix d4 = rhs.jacobian(w4) * (g + h * d3);
    *tangent = g + (h / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4);
  }
  w += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  c += (h / 6.0) * (c1 + 2.0 * c2 + 2.0 * c3 + c4);
}

Vector phase_point(const ProblemSpec& spec, const Vector& p0) {
  if (p0.size() != spec.state_dim()) throw Error(ErrorCategory::kShape, "covector has wrong dimension");
  Vector w(2 * spec.state_dim());
  w << spec.x0, p0;
  return w;
}

int steps_for(const ProblemSpec& spec, double t) {
  return std::max(1, static_cast<int>(std::ceil(t / spec.step() - 1e-9)));
}

void fill_controls(const ControlSystem& sys, ExtremalArc& arc, int node) {
  const HamiltonianRhs rhs{sys};
  const int m = sys.state_dim();
  const Vector x = arc.states.col(node);
  const Vector p = arc.costates.col(node);
  Vector w(2 * m);
  w << x, p;
  double unused;
  const Vector dw = rhs(w, unused);
  for (int i = 0; i < sys.control_dim(); ++i) {
    const VectorField& f = sys.control_field(i);
    const Vector xi = f.eval(x);
    arc.controls(i, node) = p.dot(xi);
    arc.control_rates(i, node) = dw.tail(m).dot(xi) + p.dot(f.jacobian(x) * dw.head(m));
  }
}

// Determinant of dx/dp0 at time t_node + delta, integrating one partial step.
struct PartialStep {
  const HamiltonianRhs& rhs;
  Vector w;
  Matrix tangent;
  int m;

  Matrix dxdp(double delta) const {
    if (delta <= 0.0) return tangent.block(0, m, m, m);
    Vector ww = w;
    Matrix g = tangent;
    double c = 0.0;
    rk4_hamiltonian(rhs, ww, c, delta, &g);
    return g.block(0, m, m, m);
  }
};

double smallest_singular_value(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()[svd.singularValues().size() - 1];
}

}  // namespace

double hamiltonian(const ControlSystem& system, const Vector& p, const Vector& x) {
  if (p.size() != system.state_dim() || x.size() != system.state_dim()) {
    throw Error(ErrorCategory::kShape, "hamiltonian: dimension mismatch");
  }
  double h = p.dot(system.drift().eval(x));
  for (const auto& f : system.control_fields()) {
    const double hi = p.dot(f.eval(x));
    h += 0.5 * hi * hi;
  }
  if (!system.potential().is_zero()) h += 0.5 * system.potential().eval(x);
  return h;
}

Vector ExtremalArc::control_at(double t) const {
  const int n = nodes();
  if (n == 1) return controls.col(0);
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  int k = static_cast<int>(it - times.begin()) - 1;
  k = std::clamp(k, 0, n - 2);
  const double h = times[k + 1] - times[k];
  const double s = (t - times[k]) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  const double h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s);
  const double h11 = s * s * (s - 1);
  return h00 * controls.col(k) + h10 * h * control_rates.col(k) + h01 * controls.col(k + 1) +
         h11 * h * control_rates.col(k + 1);
}

double ExtremalArc::hamiltonian_drift(const ControlSystem& system) const {
  const double h0 = hamiltonian(system, costates.col(0), states.col(0));
  double worst = 0.0;
  for (int k = 1; k < nodes(); ++k) {
    worst = std::max(worst, std::abs(hamiltonian(system, costates.col(k), states.col(k)) - h0));
  }
  return worst / (1.0 + std::abs(h0));
}

ExtremalArc normal_arc(const ProblemSpec& spec, const Vector& p0) {
  const ControlSystem& sys = spec.system;
  const int m = spec.state_dim();
  const int steps = spec.total_steps();
  const HamiltonianRhs rhs{sys};
  ExtremalArc arc;
  arc.initial_covector = p0;
  arc.states.resize(m, steps + 1);
  arc.costates.resize(m, steps + 1);
  arc.controls.resize(spec.control_dim(), steps + 1);
  arc.control_rates.resize(spec.control_dim(), steps + 1);
  Vector w = phase_point(spec, p0);
  arc.times.push_back(0.0);
  arc.states.col(0) = spec.x0;
  arc.costates.col(0) = p0;
  fill_controls(sys, arc, 0);
  const double h = spec.step();
  double c = 0.0;
  for (int n = 1; n <= steps; ++n) {
    rk4_hamiltonian(rhs, w, c, h, nullptr);
    if (!finite_in_chart(sys, w)) {
      arc.blowup = true;
      arc.states.conservativeResize(Eigen::NoChange, n);
      arc.costates.conservativeResize(Eigen::NoChange, n);
      arc.controls.conservativeResize(Eigen::NoChange, n);
      arc.control_rates.conservativeResize(Eigen::NoChange, n);
      break;
    }
    arc.times.push_back(n == steps ? spec.horizon : n * h);
    arc.states.col(n) = w.head(m);
    arc.costates.col(n) = w.tail(m);
    fill_controls(sys, arc, n);
  }
  arc.cost = c;
  return arc;
}

Vector exponential(const ProblemSpec& spec, double t, const Vector& p0) {
  if (t < 0.0 || t > spec.horizon * (1 + 1e-12)) throw Error(ErrorCategory::kShape, "exponential: t outside [0, T]");
  Vector w = phase_point(spec, p0);
  if (t == 0.0) return spec.x0;
  const HamiltonianRhs rhs{spec.system};
  const int steps = steps_for(spec, t);
  const double h = t / steps;
  double c = 0.0;
  for (int n = 0; n < steps; ++n) {
    rk4_hamiltonian(rhs, w, c, h, nullptr);
    if (!finite_in_chart(spec.system, w)) {
      throw Error(ErrorCategory::kInadmissibleControl, "exponential: extremal left the chart");
    }
  }
  return w.head(spec.state_dim());
}

ExpJacobian exp_jacobian(const ProblemSpec& spec, const Vector& p0) {
  const int m = spec.state_dim();
  const HamiltonianRhs rhs{spec.system};
  const int steps = spec.total_steps();
  const double h = spec.step();
  Vector w = phase_point(spec, p0);
  Matrix tangent = Matrix::Identity(2 * m, 2 * m);
  ExpJacobian out;
  out.times.push_back(0.0);
  out.dxdp.push_back(Matrix::Zero(m, m));
  out.dxdx0.push_back(Matrix::Identity(m, m));
  double c = 0.0;
  for (int n = 1; n <= steps; ++n) {
    rk4_hamiltonian(rhs, w, c, h, &tangent);
    if (!finite_in_chart(spec.system, w)) {
      throw Error(ErrorCategory::kInadmissibleControl, "exp_jacobian: extremal left the chart");
    }
    out.times.push_back(n == steps ? spec.horizon : n * h);
    out.dxdp.push_back(tangent.block(0, m, m, m));
    out.dxdx0.push_back(tangent.block(0, 0, m, m));
  }
  return out;
}

std::vector<double> conjugate_times(const ProblemSpec& spec, const Vector& p0) {
  const int m = spec.state_dim();
  const HamiltonianRhs rhs{spec.system};
  const int steps = spec.total_steps();
  const double h = spec.step();

  // Forward pass keeping phase point and tangent at every node for refinement.
  std::vector<Vector> ws{phase_point(spec, p0)};
  std::vector<Matrix> tangents{Matrix::Identity(2 * m, 2 * m)};
  std::vector<double> det{0.0}, smin{0.0};
  double smax = 0.0;
  for (int n = 1; n <= steps; ++n) {
    Vector w = ws.back();
    Matrix g = tangents.back();
    double c = 0.0;
    rk4_hamiltonian(rhs, w, c, h, &g);
    if (!finite_in_chart(spec.system, w)) break;
    const Matrix j = g.block(0, m, m, m);
    Eigen::JacobiSVD<Matrix> svd(j);
    det.push_back(j.determinant());
    smin.push_back(svd.singularValues()[m - 1]);
    smax = std::max(smax, svd.singularValues()[0]);
    ws.push_back(std::move(w));
    tangents.push_back(std::move(g));
  }
  const double tau = kConjugateTolerance * (smax > 0.0 ? smax : 1.0);
  const int last = static_cast<int>(ws.size()) - 1;
  auto time_of = [&](int n) { return n * h; };

  std::vector<double> out;
  for (int n = 2; n <= last; ++n) {
    const PartialStep from{rhs, ws[n - 1], tangents[n - 1], m};
    if (det[n] == 0.0) {
      out.push_back(time_of(n));
      continue;
    }
    if (det[n - 1] * det[n] < 0.0) {
      double lo = 0.0, hi = h;
      const double sign_lo = det[n - 1];
      for (int it = 0; it < 60 && hi - lo > 1e-13 * spec.horizon; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double dm = from.dxdp(mid).determinant();
        if (dm == 0.0) {
          lo = hi = mid;
          break;
        }
        ((dm > 0.0) == (sign_lo > 0.0) ? lo : hi) = mid;
      }
      const double t_star = time_of(n - 1) + 0.5 * (lo + hi);
      if (smallest_singular_value(from.dxdp(0.5 * (lo + hi))) < tau) out.push_back(t_star);
      continue;
    }
    // Touching zero without a sign change: interior local minimum of sigma_min.
    if (n < last && smin[n] < smin[n - 1] && smin[n] <= smin[n + 1]) {
      const PartialStep left{rhs, ws[n - 1], tangents[n - 1], m};
      double a = 0.0, b = 2.0 * h;
      const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
      auto f = [&](double s) { return smallest_singular_value(left.dxdp(s)); };
      double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
      double f1 = f(c1), f2 = f(c2);
      for (int it = 0; it < 80 && b - a > 1e-12 * spec.horizon; ++it) {
        if (f1 < f2) {
          b = c2;
          c2 = c1;
          f2 = f1;
          c1 = b - gr * (b - a);
          f1 = f(c1);
        } else {
          a = c1;
          c1 = c2;
          f1 = f2;
          c2 = a + gr * (b - a);
          f2 = f(c2);
        }
      }
      const double s = 0.5 * (a + b);
      if (f(s) < tau) out.push_back(time_of(n - 1) + s);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(), [&](double a, double b) { return std::abs(a - b) < 1e-9; }),
            out.end());
  return out;
}

ExtremalArc shoot(const ProblemSpec& spec, const Vector& target, const Vector& p0_init, const ShootOptions& opts) {
  const int m = spec.state_dim();
  if (target.size() != m) throw Error(ErrorCategory::kShape, "shoot: target has wrong dimension");
  if (!spec.system.chart().contains(target)) throw Error(ErrorCategory::kConfig, "shoot: target outside chart");
  const double tol = opts.tolerance * std::max(1.0, (target - spec.x0).norm());
  auto residual_of = [&](const Vector& p0, Vector& f) {
    try {
      f = exponential(spec, spec.horizon, p0) - target;
      return f.norm();
    } catch (const Error& e) {
      if (e.category() == ErrorCategory::kInadmissibleControl) return std::numeric_limits<double>::infinity();
      throw;
    }
  };
  Vector p0 = p0_init;
  Vector f;
  double norm = residual_of(p0, f);
  if (!std::isfinite(norm)) throw Error(ErrorCategory::kShootFailed, "shoot: initial covector leaves the chart");
  for (int it = 0; it < opts.max_iterations && norm > tol; ++it) {
    const ExpJacobian ej = exp_jacobian(spec, p0);
    double arc_scale = 0.0;
    for (const Matrix& b : ej.dxdp) arc_scale = std::max(arc_scale, b.norm());
    Eigen::JacobiSVD<Matrix> svd(ej.dxdp.back(), Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    if (s[m - 1] <= kConjugateTolerance * arc_scale) {
      throw Error(ErrorCategory::kConjugateObstruction, "shoot: dx/dp0 is singular at T (conjugate point)");
    }
    const Vector step = svd.solve(-f);
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      Vector f_new;
      const Vector candidate = p0 + alpha * step;
      const double n_new = residual_of(candidate, f_new);
      if (n_new < norm) {
        p0 = candidate;
        f = f_new;
        norm = n_new;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }
  if (!(norm <= tol)) {
    throw Error(ErrorCategory::kShootFailed, "shoot: Newton iteration did not reach the target");
  }
  return normal_arc(spec, p0);
}

Vector initial_covector(const ProblemSpec& spec, const Control& u, const Vector& lambda_final) {
  const int m = spec.state_dim();
  const DiscreteLinearization lin = linearize(spec, u);
  Eigen::RowVectorXd row(m + 1);
  row.head(m) = lambda_final.transpose();
  row[m] = 0.5;
  for (int k = spec.intervals - 1; k >= 0; --k) row = row * lin.interval_jacobian[k];
  return row.head(m).transpose();
}

}  // namespace ctrlab
