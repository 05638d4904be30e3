#pragma once

// Hilbert-space geometry for the hybrid projection methods. The ambient
// space is R^d with the Euclidean inner product, so the duality map is the
// identity and the Lyapunov functional is the squared distance.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace hybridproj {

using Vector = Eigen::VectorXd;

/// Throws DimensionMismatch unless both vectors have the same length.
void require_same_dim(const Vector& x, const Vector& y, const char* where);

bool all_finite(const Vector& x);

/// {v : <normal, v> <= offset}. A zero normal is the whole space when
/// offset >= 0 and the empty set otherwise.
struct HalfSpace {
  Vector normal;
  double offset = 0.0;

  HalfSpace() = default;
  HalfSpace(Vector a, double b);

  std::size_t dim() const { return static_cast<std::size_t>(normal.size()); }
  bool degenerate() const { return normal.squaredNorm() == 0.0; }
  bool empty() const { return degenerate() && offset < 0.0; }

  /// <normal, v> - offset; positive means v lies outside.
  double violation(const Vector& v) const { return normal.dot(v) - offset; }
  bool contains(const Vector& v, double slack = 0.0) const {
    return violation(v) <= slack;
  }
};

/// Axis-aligned box; infinite bounds are allowed and produce no face.
struct Box {
  Vector lower;
  Vector upper;

  static Box unbounded(std::size_t dim);
  static Box uniform(std::size_t dim, double lo, double hi);

  std::size_t dim() const { return static_cast<std::size_t>(lower.size()); }
  bool contains(const Vector& x) const;
  bool contains(std::span<const double> x) const;
  std::vector<HalfSpace> faces() const;
};

struct ProjectionSettings {
  double tolerance = 1e-12;
  int max_sweeps = 10'000;
  // Drop a constraint whose boundary lies farther than prune_slack times the
  // diameter estimate from the current point. Zero keeps every constraint.
  double prune_slack = 0.0;

  void validate() const;
};

enum class ProjectionStatus { Exact, Converged, NonConverged };

struct Projection {
  Vector point;
  ProjectionStatus status = ProjectionStatus::Exact;
  int sweeps = 0;
};

/// phi(x, y) = |x - y|^2.
double lyapunov(const Vector& x, const Vector& y);

/// {v : phi(v, y_bar) <= phi(v, x_n) + eps}.
HalfSpace mann_halfspace(const Vector& x_n, const Vector& y_bar, double eps);

/// {v : phi(v, y_bar) <= alpha phi(v, anchor) + (1 - alpha) phi(v, x_n) + eps}.
HalfSpace halpern_halfspace(const Vector& anchor, const Vector& x_n,
                            const Vector& y_bar, double alpha, double eps);

/// {v : <x_start - x_n, x_n - v> >= 0}; x_n lies on its boundary.
HalfSpace q_halfspace(const Vector& x_start, const Vector& x_n);

Vector project_halfspace(const Vector& x, const HalfSpace& h);

/// Euclidean projection of x0 onto the intersection of the half-spaces.
/// Degenerate whole-space constraints are skipped. One dimension uses the
/// closed-form interval intersection; otherwise Dykstra's cyclic algorithm.
Projection project_intersection(const Vector& x0,
                                std::span<const HalfSpace> constraints,
                                const ProjectionSettings& settings = {});

}  // namespace hybridproj
