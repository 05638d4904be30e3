#include "hybridproj/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hybridproj/error.hpp"

namespace hybridproj {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Relative slack used when validating a polished active-set solution.
constexpr double kPolishSlack = 1e-10;

Projection project_interval(const Vector& x0,
                            std::span<const HalfSpace* const> active,
                            const ProjectionSettings& settings) {
  double lo = -kInf;
  double hi = kInf;
  for (const HalfSpace* h : active) {
    const double a = h->normal[0];
    const double bound = h->offset / a;
    if (a > 0.0) {
      hi = std::min(hi, bound);
    } else {
      lo = std::max(lo, bound);
    }
  }
  Projection out;
  out.point = x0;
  if (lo > hi) {
    if (lo - hi > settings.tolerance) {
      fail(ErrorCode::Infeasible,
           "project_intersection: empty interval [" + std::to_string(lo) +
               ", " + std::to_string(hi) + "]");
    }
    out.point[0] = 0.5 * (lo + hi);
    return out;
  }
  out.point[0] = std::clamp(x0[0], lo, hi);
  return out;
}

double distance_violation(const HalfSpace& h, const Vector& x) {
  return h.violation(x) / h.normal.norm();
}

// Solves the equality-constrained projection on the constraints Dykstra left
// with nonzero increments. Returns true and overwrites `point` only when the
// result satisfies the KKT conditions of the full problem.
bool polish_active_set(const Vector& x0,
                       std::span<const HalfSpace* const> active,
                       const std::vector<Vector>& increments, Vector& point) {
  std::vector<const HalfSpace*> binding;
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (increments[i].squaredNorm() > 0.0) binding.push_back(active[i]);
  }
  if (binding.empty()) return false;

  const auto k = static_cast<Eigen::Index>(binding.size());
  const Eigen::Index d = x0.size();
  Eigen::MatrixXd a(k, d);
  Eigen::VectorXd b(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    a.row(r) = binding[static_cast<std::size_t>(r)]->normal.transpose();
    b[r] = binding[static_cast<std::size_t>(r)]->offset;
  }
  const Eigen::MatrixXd gram = a * a.transpose();
  const Eigen::VectorXd rhs = a * x0 - b;
  const Eigen::VectorXd lambda =
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(gram).solve(rhs);
  if (!lambda.allFinite()) return false;
  const double lambda_scale = 1.0 + lambda.cwiseAbs().maxCoeff();
  if ((lambda.array() < -kPolishSlack * lambda_scale).any()) return false;

  const Vector z = x0 - a.transpose() * lambda;
  for (Eigen::Index r = 0; r < k; ++r) {
    const double scale = 1.0 + std::abs(b[r]) + a.row(r).norm() * z.norm();
    if (std::abs(a.row(r).dot(z) - b[r]) > kPolishSlack * scale) return false;
  }
  for (const HalfSpace* h : active) {
    const double scale = 1.0 + std::abs(h->offset) + h->normal.norm() * z.norm();
    if (h->violation(z) > kPolishSlack * scale) return false;
  }
  point = z;
  return true;
}

Projection dykstra(const Vector& x0, std::span<const HalfSpace* const> active,
                   const ProjectionSettings& settings) {
  const std::size_t m = active.size();
  std::vector<Vector> increments(m, Vector::Zero(x0.size()));
  Vector x = x0;
  Vector y(x0.size());
  Projection out;
  out.status = ProjectionStatus::NonConverged;

  for (int sweep = 1; sweep <= settings.max_sweeps; ++sweep) {
    const Vector x_prev = x;
    double increment_change = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      y = x + increments[i];
      x = project_halfspace(y, *active[i]);
      Vector next = y - x;
      increment_change += (next - increments[i]).squaredNorm();
      increments[i] = std::move(next);
    }
    out.sweeps = sweep;
    if ((x - x_prev).norm() <= settings.tolerance &&
        std::sqrt(increment_change) <= settings.tolerance) {
      out.status = ProjectionStatus::Converged;
      break;
    }
  }

  if (out.status == ProjectionStatus::NonConverged) {
    double worst = 0.0;
    for (const HalfSpace* h : active) {
      worst = std::max(worst, distance_violation(*h, x));
    }
    if (worst > settings.tolerance) {
      fail(ErrorCode::Infeasible,
           "project_intersection: Dykstra did not converge in " +
               std::to_string(settings.max_sweeps) +
               " sweeps and the final iterate violates a constraint by " +
               std::to_string(worst));
    }
  }
  if (polish_active_set(x0, active, increments, x)) {
    out.status = ProjectionStatus::Converged;
  }
  out.point = std::move(x);
  return out;
}

}  // namespace

void require_same_dim(const Vector& x, const Vector& y, const char* where) {
  if (x.size() != y.size()) {
    fail(ErrorCode::DimensionMismatch,
         std::string(where) + ": dimension mismatch (" +
             std::to_string(x.size()) + " vs " + std::to_string(y.size()) +
             ")");
  }
}

bool all_finite(const Vector& x) { return x.allFinite(); }

HalfSpace::HalfSpace(Vector a, double b) : normal(std::move(a)), offset(b) {
  if (!normal.allFinite() || !std::isfinite(offset)) {
    fail(ErrorCode::InvalidArgument, "HalfSpace: non-finite normal or offset");
  }
}

Box Box::unbounded(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return Box{Vector::Constant(n, -kInf), Vector::Constant(n, kInf)};
}

Box Box::uniform(std::size_t dim, double lo, double hi) {
  const auto n = static_cast<Eigen::Index>(dim);
  return Box{Vector::Constant(n, lo), Vector::Constant(n, hi)};
}

bool Box::contains(std::span<const double> x) const {
  if (x.size() != dim()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (!(x[i] >= lower[k] && x[i] <= upper[k])) return false;
  }
  return true;
}

bool Box::contains(const Vector& x) const {
  return contains(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

std::vector<HalfSpace> Box::faces() const {
  std::vector<HalfSpace> out;
  const Eigen::Index d = lower.size();
  for (Eigen::Index i = 0; i < d; ++i) {
    if (std::isfinite(upper[i])) {
      out.emplace_back(Vector::Unit(d, i), upper[i]);
    }
    if (std::isfinite(lower[i])) {
      out.emplace_back(-Vector::Unit(d, i), -lower[i]);
    }
  }
  return out;
}

void ProjectionSettings::validate() const {
  if (!(tolerance > 0.0) || !std::isfinite(tolerance)) {
    fail(ErrorCode::InvalidArgument, "ProjectionSettings: tolerance must be > 0");
  }
  if (max_sweeps < 1) {
    fail(ErrorCode::InvalidArgument, "ProjectionSettings: max_sweeps must be >= 1");
  }
  if (!(prune_slack >= 0.0)) {
    fail(ErrorCode::InvalidArgument, "ProjectionSettings: prune_slack must be >= 0");
  }
}

double lyapunov(const Vector& x, const Vector& y) {
  require_same_dim(x, y, "lyapunov");
  return (x - y).squaredNorm();
}

HalfSpace mann_halfspace(const Vector& x_n, const Vector& y_bar, double eps) {
  require_same_dim(x_n, y_bar, "mann_halfspace");
  if (!(eps >= 0.0)) fail(ErrorCode::InvalidArgument, "mann_halfspace: eps < 0");
  return HalfSpace(2.0 * (x_n - y_bar),
                   x_n.squaredNorm() - y_bar.squaredNorm() + eps);
}

HalfSpace halpern_halfspace(const Vector& anchor, const Vector& x_n,
                            const Vector& y_bar, double alpha, double eps) {
  require_same_dim(anchor, x_n, "halpern_halfspace");
  require_same_dim(x_n, y_bar, "halpern_halfspace");
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "halpern_halfspace: alpha outside [0, 1]");
  }
  if (!(eps >= 0.0)) fail(ErrorCode::InvalidArgument, "halpern_halfspace: eps < 0");
  const double beta = 1.0 - alpha;
  Vector a = 2.0 * (alpha * anchor + beta * x_n - y_bar);
  const double b = alpha * anchor.squaredNorm() + beta * x_n.squaredNorm() -
                   y_bar.squaredNorm() + eps;
  return HalfSpace(std::move(a), b);
}

HalfSpace q_halfspace(const Vector& x_start, const Vector& x_n) {
  require_same_dim(x_start, x_n, "q_halfspace");
  Vector a = x_start - x_n;
  const double b = a.dot(x_n);
  return HalfSpace(std::move(a), b);
}

Vector project_halfspace(const Vector& x, const HalfSpace& h) {
  require_same_dim(x, h.normal, "project_halfspace");
  const double norm2 = h.normal.squaredNorm();
  if (norm2 == 0.0) {
    if (h.offset < 0.0) {
      fail(ErrorCode::EmptyHalfSpace, "project_halfspace: a = 0 with b < 0");
    }
    return x;
  }
  const double excess = h.normal.dot(x) - h.offset;
  if (excess <= 0.0) return x;
  return x - (excess / norm2) * h.normal;
}

Projection project_intersection(const Vector& x0,
                                std::span<const HalfSpace> constraints,
                                const ProjectionSettings& settings) {
  settings.validate();
  if (constraints.empty()) {
    fail(ErrorCode::InvalidArgument, "project_intersection: no constraints");
  }
  std::vector<const HalfSpace*> active;
  active.reserve(constraints.size());
  for (const HalfSpace& h : constraints) {
    require_same_dim(x0, h.normal, "project_intersection");
    if (h.degenerate()) {
      if (h.offset < 0.0) {
        fail(ErrorCode::Infeasible, "project_intersection: empty constraint (a = 0, b < 0)");
      }
      continue;
    }
    active.push_back(&h);
  }

  if (settings.prune_slack > 0.0 && active.size() > 1) {
    double diameter = 1.0;
    for (const HalfSpace* h : active) {
      diameter = std::max(diameter, std::abs(distance_violation(*h, x0)));
    }
    const double cutoff = settings.prune_slack * diameter;
    std::erase_if(active, [&](const HalfSpace* h) {
      return -distance_violation(*h, x0) > cutoff;
    });
  }

  if (active.empty()) return Projection{x0, ProjectionStatus::Exact, 0};
  if (x0.size() == 1) return project_interval(x0, active, settings);
  if (active.size() == 1) {
    return Projection{project_halfspace(x0, *active.front()),
                      ProjectionStatus::Exact, 0};
  }
  return dykstra(x0, active, settings);
}

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyHalfSpace: return "EmptyHalfSpace";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::DomainViolation: return "DomainViolation";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::ClassMismatch: return "ClassMismatch";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace hybridproj
