#include "ctrlab/model.hpp"

#include <algorithm>
#include <cmath>

#include "ctrlab/error.hpp"

namespace ctrlab {

VectorField::VectorField(std::vector<Polynomial> components) : components_(std::move(components)) {
  const int m = dim();
  for (const auto& c : components_) {
    if (c.num_vars() != m) {
      throw Error(ErrorCategory::kShape, "vector field: component variable count differs from dimension");
    }
  }
  first_.resize(m);
  second_.resize(m);
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < m; ++k) first_[j].push_back(components_[j].derivative(k));
    second_[j].resize(m);
    for (int k = 0; k < m; ++k) {
      for (int l = 0; l < m; ++l) second_[j][k].push_back(first_[j][k].derivative(l));
    }
  }
}

VectorField VectorField::zero(int dim) {
  return VectorField(std::vector<Polynomial>(dim, Polynomial(dim)));
}

VectorField VectorField::coordinate(int dim, int axis) {
  std::vector<Polynomial> comps(dim, Polynomial(dim));
  comps.at(axis) = Polynomial::constant(dim, 1.0);
  return VectorField(std::move(comps));
}

bool VectorField::is_zero() const {
  return std::all_of(components_.begin(), components_.end(),
                     [](const Polynomial& p) { return p.is_zero(); });
}

Vector VectorField::eval(const Vector& x) const {
  Vector out(dim());
  for (int j = 0; j < dim(); ++j) out[j] = components_[j].eval(x);
  return out;
}

Matrix VectorField::jacobian(const Vector& x) const {
  const int m = dim();
  Matrix out(m, m);
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < m; ++k) out(j, k) = first_[j][k].eval(x);
  }
  return out;
}

Matrix VectorField::weighted_hessian(const Vector& x, const Vector& w) const {
  const int m = dim();
  Matrix out = Matrix::Zero(m, m);
  for (int j = 0; j < m; ++j) {
    if (w[j] == 0.0) continue;
    for (int k = 0; k < m; ++k) {
      for (int l = 0; l < m; ++l) out(k, l) += w[j] * second_[j][k][l].eval(x);
    }
  }
  return out;
}

VectorField bracket(const VectorField& x_field, const VectorField& y_field) {
  const int m = x_field.dim();
  if (y_field.dim() != m) throw Error(ErrorCategory::kShape, "bracket: dimension mismatch");
  std::vector<Polynomial> out(m, Polynomial(m));
  const auto& xs = x_field.components();
  const auto& ys = y_field.components();
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < m; ++k) {
      out[j] = out[j] + ys[j].derivative(k) * xs[k] - xs[j].derivative(k) * ys[k];
    }
  }
  return VectorField(std::move(out));
}

Vector lie_bracket(const VectorField& x_field, const VectorField& y_field, const Vector& x) {
  if (x_field.dim() != y_field.dim() || x.size() != x_field.dim()) {
    throw Error(ErrorCategory::kShape, "lie_bracket: dimension mismatch");
  }
  return y_field.jacobian(x) * x_field.eval(x) - x_field.jacobian(x) * y_field.eval(x);
}

Potential::Potential(Polynomial q, std::optional<double> upper_bound_hint)
    : q_(std::move(q)), upper_bound_hint_(upper_bound_hint) {
  const int m = q_.num_vars();
  for (int k = 0; k < m; ++k) gradient_.push_back(q_.derivative(k));
  hessian_.resize(m);
  for (int k = 0; k < m; ++k) {
    for (int l = 0; l < m; ++l) hessian_[k].push_back(gradient_[k].derivative(l));
  }
}

Potential Potential::zero(int dim) { return Potential(Polynomial(dim)); }

Vector Potential::gradient(const Vector& x) const {
  Vector g(static_cast<Eigen::Index>(gradient_.size()));
  for (std::size_t k = 0; k < gradient_.size(); ++k) g[k] = gradient_[k].eval(x);
  return g;
}

Matrix Potential::hessian(const Vector& x) const {
  const auto m = static_cast<Eigen::Index>(hessian_.size());
  Matrix h(m, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    for (Eigen::Index l = 0; l < m; ++l) h(k, l) = hessian_[k][l].eval(x);
  }
  return h;
}

bool Box::contains(const Vector& x) const {
  if (x.size() != lower.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
  }
  return true;
}

bool Box::empty() const {
  if (lower.size() != upper.size() || lower.size() == 0) return true;
  return ((upper - lower).array() < 0.0).any();
}

ControlSystem::ControlSystem(std::string name, VectorField drift, std::vector<VectorField> controls,
                             Potential potential, Box chart)
    : name_(std::move(name)),
      drift_(std::move(drift)),
      controls_(std::move(controls)),
      potential_(std::move(potential)),
      chart_(std::move(chart)) {
  const int m = drift_.dim();
  if (m < 1) throw Error(ErrorCategory::kShape, "control system: state dimension must be positive");
  if (controls_.empty()) throw Error(ErrorCategory::kShape, "control system: needs at least one control field");
  for (const auto& f : controls_) {
    if (f.dim() != m) throw Error(ErrorCategory::kShape, "control system: control field dimension mismatch");
  }
  if (potential_.polynomial().num_vars() != m) {
    throw Error(ErrorCategory::kShape, "control system: potential dimension mismatch");
  }
  if (chart_.lower.size() != m || chart_.empty()) {
    throw Error(ErrorCategory::kShape, "control system: chart bounds empty or of wrong dimension");
  }
  kernel_ = std::make_shared<const SystemKernel>(drift_, controls_, potential_);
}

Vector ControlSystem::velocity(const Vector& x, const Vector& u) const {
  if (x.size() != state_dim() || u.size() != control_dim()) {
    throw Error(ErrorCategory::kShape, "velocity: state or control length mismatch");
  }
  Vector v(state_dim());
  kernel_->velocity(x.data(), u.data(), v.data());
  return v;
}

Matrix ControlSystem::velocity_jacobian(const Vector& x, const Vector& u) const {
  if (x.size() != state_dim() || u.size() != control_dim()) {
    throw Error(ErrorCategory::kShape, "velocity_jacobian: state or control length mismatch");
  }
  Matrix a(state_dim(), state_dim());
  kernel_->jacobian(x.data(), u.data(), a.data());
  return a;
}

Matrix ControlSystem::control_matrix(const Vector& x) const {
  if (x.size() != state_dim()) throw Error(ErrorCategory::kShape, "control_matrix: state length mismatch");
  Matrix b(state_dim(), control_dim());
  kernel_->control_matrix(x.data(), b.data());
  return b;
}

Control::Control(double horizon, int intervals, int channels)
    : horizon_(horizon), values_(Matrix::Zero(intervals, channels)) {
  if (!(horizon > 0.0) || intervals < 1 || channels < 1) {
    throw Error(ErrorCategory::kShape, "control: horizon, intervals and channels must be positive");
  }
}

Control::Control(double horizon, Matrix values) : horizon_(horizon), values_(std::move(values)) {
  if (!(horizon > 0.0) || values_.rows() < 1 || values_.cols() < 1) {
    throw Error(ErrorCategory::kShape, "control: horizon, intervals and channels must be positive");
  }
}

Control Control::constant(double horizon, int intervals, const Vector& value) {
  Control c(horizon, intervals, static_cast<int>(value.size()));
  c.values_.rowwise() = value.transpose();
  return c;
}

Control Control::from_flat(double horizon, int intervals, int channels, const Vector& flat) {
  if (flat.size() != static_cast<Eigen::Index>(intervals) * channels) {
    throw Error(ErrorCategory::kShape, "control: flat vector length mismatch");
  }
  Control c(horizon, intervals, channels);
  for (int k = 0; k < intervals; ++k) {
    for (int i = 0; i < channels; ++i) c.values_(k, i) = flat[k * channels + i];
  }
  return c;
}

int Control::interval_of(double t) const {
  const int k = static_cast<int>(std::floor(t / interval_length()));
  return std::clamp(k, 0, intervals() - 1);
}

Vector Control::flat() const {
  Vector out(values_.size());
  for (int k = 0; k < intervals(); ++k) {
    for (int i = 0; i < channels(); ++i) out[k * channels() + i] = values_(k, i);
  }
  return out;
}

double Control::l2_norm_squared() const { return values_.squaredNorm() * interval_length(); }

double Control::l2_norm() const { return std::sqrt(l2_norm_squared()); }

Control Control::refined(int factor) const {
  if (factor < 1) throw Error(ErrorCategory::kShape, "control: refinement factor must be positive");
  Control out(horizon_, intervals() * factor, channels());
  for (int k = 0; k < out.intervals(); ++k) out.values_.row(k) = values_.row(k / factor);
  return out;
}

double l2_inner(const Control& u, const Control& v) {
  if (u.intervals() != v.intervals() || u.channels() != v.channels() || u.horizon() != v.horizon()) {
    throw Error(ErrorCategory::kShape, "l2_inner: controls live on different grids");
  }
  return u.values().cwiseProduct(v.values()).sum() * u.interval_length();
}

void ProblemSpec::validate() const {
  if (x0.size() != state_dim()) throw Error(ErrorCategory::kShape, "problem: x0 has wrong dimension");
  if (!(horizon > 0.0)) throw Error(ErrorCategory::kConfig, "problem: horizon must be positive");
  if (intervals < 1) throw Error(ErrorCategory::kConfig, "problem: intervals must be positive");
  if (substeps < 1) throw Error(ErrorCategory::kConfig, "problem: substeps must be positive");
  if (!system.chart().contains(x0)) throw Error(ErrorCategory::kConfig, "problem: x0 outside chart bounds");
}

ProblemSpec ProblemSpec::with_intervals(int n) const {
  ProblemSpec out = *this;
  out.intervals = n;
  return out;
}

ProblemSpec ProblemSpec::with_horizon(double t) const {
  ProblemSpec out = *this;
  out.horizon = t;
  return out;
}

HormanderRank weak_hormander_rank(const ControlSystem& system, const Vector& x, int depth) {
  if (depth < 0) throw Error(ErrorCategory::kShape, "weak_hormander_rank: depth must be nonnegative");
  const int m = system.state_dim();
  std::vector<VectorField> letters;
  letters.push_back(system.drift());
  for (const auto& f : system.control_fields()) letters.push_back(f);

  HormanderRank out;
  out.depth = depth;
  Matrix columns(m, 0);
  auto absorb = [&](const std::vector<VectorField>& level) {
    for (const auto& f : level) {
      columns.conservativeResize(Eigen::NoChange, columns.cols() + 1);
      columns.col(columns.cols() - 1) = f.eval(x);
    }
    out.generators = static_cast<int>(columns.cols());
    out.rank = numeric_rank(columns).rank;
  };

  std::vector<VectorField> level;
  for (const auto& f : system.control_fields()) {
    if (!f.is_zero()) level.push_back(f);
  }
  absorb(level);
  for (int k = 1; k <= depth && out.rank < m && !level.empty(); ++k) {
    std::vector<VectorField> next;
    for (const auto& inner : level) {
      for (const auto& letter : letters) {
        if (letter.is_zero()) continue;
        VectorField b = bracket(letter, inner);
        if (b.is_zero()) continue;
        const bool duplicate = std::any_of(next.begin(), next.end(), [&](const VectorField& g) {
          return g.components() == b.components();
        });
        if (!duplicate) next.push_back(std::move(b));
      }
    }
    absorb(next);
    level = std::move(next);
  }
  return out;
}

std::optional<double> potential_bound_violation(const ControlSystem& system, int samples_per_axis) {
  const auto hint = system.potential().upper_bound_hint();
  if (!hint || system.potential().is_zero()) return std::nullopt;
  const int m = system.state_dim();
  const Box& box = system.chart();
  const int n = std::max(2, samples_per_axis);
  std::vector<int> idx(m, 0);
  double worst = -std::numeric_limits<double>::infinity();
  while (true) {
    Vector x(m);
    for (int j = 0; j < m; ++j) x[j] = box.lower[j] + (box.upper[j] - box.lower[j]) * idx[j] / (n - 1);
    worst = std::max(worst, system.potential().eval(x));
    int j = 0;
    while (j < m && ++idx[j] == n) idx[j++] = 0;
    if (j == m) break;
  }
  if (worst > *hint) return worst;
  return std::nullopt;
}

}  // namespace ctrlab
