#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "hybridproj/geometry.hpp"

namespace hybridproj {

enum class MappingClass { QuasiPhi, AsymptoticallyQuasiPhi, RelativelyNonexpansive };

const char* to_string(MappingClass c) noexcept;

/// T(x) = 0 on [0, t], s (x - t) on (t, 1]. Maps [0, 1] into itself when
/// 1 < s <= 1 / (1 - t); its only fixed point is 0.
struct PiecewiseThresholdMap {
  double t = 0.5;
  double s = 1.5;

  void validate() const;
};

/// Throws DomainViolation for x outside [0, 1]. At x == t the left branch
/// is used.
double eval_threshold(const PiecewiseThresholdMap& m, double x);

/// A(x) = M x + q with M + M^T positive semidefinite.
struct AffineMonotoneOperator {
  Eigen::MatrixXd matrix;
  Vector shift;

  std::size_t dim() const { return static_cast<std::size_t>(shift.size()); }
  Vector apply(const Vector& x) const { return matrix * x + shift; }
  void validate() const;
};

/// The unique y with y + r A(y) = x, i.e. (I + r M) y = x - r q.
Vector resolvent(const AffineMonotoneOperator& op, double r, const Vector& x);

/// k_n = 1 + c / n. c = 0 is the quasi-phi case.
struct AsymptoticConstants {
  double c = 0.0;

  double operator()(std::uint64_t n) const {
    return 1.0 + c / static_cast<double>(n);
  }
  bool trivial() const { return c == 0.0; }
};

class Mapping;

/// A finite family T_1..T_N of self-maps of a common box, stored flat so
/// that millions of threshold maps stay cheap. Immutable after construction
/// and safe to evaluate from many threads.
class MappingFamily {
 public:
  enum class Kind { Threshold, Resolvent, Identity };

  static MappingFamily threshold(std::vector<PiecewiseThresholdMap> maps);
  /// Each map i is the resolvent of operators[i] with parameter radii[i].
  static MappingFamily resolvents(std::vector<AffineMonotoneOperator> operators,
                                  std::vector<double> radii,
                                  std::optional<Box> domain = std::nullopt);
  static MappingFamily identity(std::size_t count, Box domain);

  /// Same maps, tagged asymptotically quasi-phi with k_n = 1 + c / n.
  MappingFamily with_asymptotic_constants(double c) const;

  Kind kind() const { return kind_; }
  std::size_t size() const { return size_; }
  std::size_t dim() const { return dim_; }
  const Box& domain() const { return *domain_; }
  MappingClass tag() const { return tag_; }
  double k(std::uint64_t n) const { return constants_(n); }
  const AsymptoticConstants& constants() const { return constants_; }
  std::optional<double> lipschitz(std::size_t i) const;

  std::span<const PiecewiseThresholdMap> thresholds() const { return thresholds_; }
  const AffineMonotoneOperator& op(std::size_t i) const;
  double radius(std::size_t i) const;

  /// out = T_i^power(x). Composition stops early once a fixed point is hit.
  /// Throws DomainViolation when x or any intermediate leaves the box.
  void apply(std::size_t i, std::uint64_t power, std::span<const double> x,
             std::span<double> out) const;

  Mapping at(std::size_t i) const;

 private:
  struct ResolventEntry {
    std::shared_ptr<const AffineMonotoneOperator> op;
    double radius = 1.0;
    Eigen::MatrixXd inverse;  // (I + r M)^{-1}
  };

  void apply_once(std::size_t i, std::span<const double> x,
                  std::span<double> out) const;

  Kind kind_ = Kind::Identity;
  std::size_t size_ = 0;
  std::size_t dim_ = 0;
  std::shared_ptr<const Box> domain_;
  MappingClass tag_ = MappingClass::QuasiPhi;
  AsymptoticConstants constants_;
  std::vector<PiecewiseThresholdMap> thresholds_;
  std::vector<ResolventEntry> resolvents_;
};

/// A single member of a family. Holds a pointer to the family, which must
/// outlive it.
class Mapping {
 public:
  Mapping(const MappingFamily& family, std::size_t index)
      : family_(&family), index_(index) {}

  Vector operator()(const Vector& x) const;
  const Box& domain() const { return family_->domain(); }
  double k(std::uint64_t n) const { return family_->k(n); }
  std::optional<double> lipschitz() const { return family_->lipschitz(index_); }
  MappingClass tag() const { return family_->tag(); }
  std::size_t index() const { return index_; }
  const MappingFamily& family() const { return *family_; }

 private:
  const MappingFamily* family_;
  std::size_t index_;
};

/// T applied n times to x.
Vector apply_power(const Mapping& map, std::uint64_t n, const Vector& x);

/// N threshold maps with t_i = i / (N + 1), s_i = 1 + t_i on [0, 1].
MappingFamily make_experiment_family(std::size_t count);

}  // namespace hybridproj
