#include "hybridproj/mappings.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "hybridproj/error.hpp"

namespace hybridproj {

namespace {

constexpr double kUlp = std::numeric_limits<double>::epsilon();

std::string point_string(std::span<const double> x) {
  std::string s = "(";
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(x[i]);
  }
  return s + ")";
}

}  // namespace

const char* to_string(MappingClass c) noexcept {
  switch (c) {
    case MappingClass::QuasiPhi: return "quasi-phi";
    case MappingClass::AsymptoticallyQuasiPhi: return "asymptotically-quasi-phi";
    case MappingClass::RelativelyNonexpansive: return "relatively-nonexpansive";
  }
  return "unknown";
}

void PiecewiseThresholdMap::validate() const {
  if (!(t > 0.0 && t < 1.0)) {
    fail(ErrorCode::InvalidArgument, "threshold map: t must lie in (0, 1), got " +
                                         std::to_string(t));
  }
  const double cap = 1.0 / (1.0 - t);
  if (!(s > 1.0 && s <= cap * (1.0 + 4.0 * kUlp))) {
    fail(ErrorCode::InvalidArgument, "threshold map: s must lie in (1, 1/(1-t)], got " +
                                         std::to_string(s));
  }
}

double eval_threshold(const PiecewiseThresholdMap& m, double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    fail(ErrorCode::DomainViolation,
         "threshold map evaluated outside [0, 1] at " + std::to_string(x));
  }
  return x <= m.t ? 0.0 : m.s * (x - m.t);
}

void AffineMonotoneOperator::validate() const {
  const auto d = shift.size();
  if (d < 1 || matrix.rows() != d || matrix.cols() != d) {
    fail(ErrorCode::DimensionMismatch, "affine operator: matrix must be d x d with d = |shift|");
  }
  if (!matrix.allFinite() || !shift.allFinite()) {
    fail(ErrorCode::InvalidArgument, "affine operator: non-finite entries");
  }
  const Eigen::MatrixXd sym = matrix + matrix.transpose();
  const double smallest =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .minCoeff();
  const double scale = 1.0 + sym.cwiseAbs().maxCoeff();
  if (smallest < -1e-12 * scale) {
    fail(ErrorCode::InvalidArgument,
         "affine operator: M + M^T is not positive semidefinite (min eigenvalue " +
             std::to_string(smallest) + ")");
  }
}

namespace {

Eigen::MatrixXd resolvent_inverse(const AffineMonotoneOperator& op, double r) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    fail(ErrorCode::InvalidArgument, "resolvent: r must be > 0");
  }
  const auto d = static_cast<Eigen::Index>(op.dim());
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(d, d) + r * op.matrix;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) {
    fail(ErrorCode::SingularSystem, "resolvent: I + r M is singular");
  }
  return lu.inverse();
}

}  // namespace

Vector resolvent(const AffineMonotoneOperator& op, double r, const Vector& x) {
  op.validate();
  require_same_dim(op.shift, x, "resolvent");
  const auto d = static_cast<Eigen::Index>(op.dim());
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(d, d) + r * op.matrix;
  if (!(r > 0.0) || !std::isfinite(r)) {
    fail(ErrorCode::InvalidArgument, "resolvent: r must be > 0");
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) {
    fail(ErrorCode::SingularSystem, "resolvent: I + r M is singular");
  }
  return lu.solve(x - r * op.shift);
}

MappingFamily MappingFamily::threshold(std::vector<PiecewiseThresholdMap> maps) {
  if (maps.empty()) fail(ErrorCode::InvalidArgument, "threshold family: no maps");
  for (const auto& m : maps) m.validate();
  MappingFamily f;
  f.kind_ = Kind::Threshold;
  f.size_ = maps.size();
  f.dim_ = 1;
  f.domain_ = std::make_shared<const Box>(Box::uniform(1, 0.0, 1.0));
  f.tag_ = MappingClass::QuasiPhi;
  f.thresholds_ = std::move(maps);
  return f;
}

MappingFamily MappingFamily::resolvents(std::vector<AffineMonotoneOperator> operators,
                                        std::vector<double> radii,
                                        std::optional<Box> domain) {
  if (operators.empty()) fail(ErrorCode::InvalidArgument, "resolvent family: no operators");
  if (operators.size() != radii.size()) {
    fail(ErrorCode::InvalidArgument, "resolvent family: operator and radius counts differ");
  }
  const std::size_t d = operators.front().dim();
  MappingFamily f;
  f.kind_ = Kind::Resolvent;
  f.size_ = operators.size();
  f.dim_ = d;
  f.tag_ = MappingClass::RelativelyNonexpansive;
  for (std::size_t i = 0; i < operators.size(); ++i) {
    operators[i].validate();
    if (operators[i].dim() != d) {
      fail(ErrorCode::DimensionMismatch, "resolvent family: operators differ in dimension");
    }
    ResolventEntry e;
    e.inverse = resolvent_inverse(operators[i], radii[i]);
    e.radius = radii[i];
    e.op = std::make_shared<const AffineMonotoneOperator>(std::move(operators[i]));
    f.resolvents_.push_back(std::move(e));
  }
  Box box = domain ? std::move(*domain) : Box::unbounded(d);
  if (box.dim() != d) fail(ErrorCode::DimensionMismatch, "resolvent family: box dimension");
  f.domain_ = std::make_shared<const Box>(std::move(box));
  return f;
}

MappingFamily MappingFamily::identity(std::size_t count, Box domain) {
  if (count == 0) fail(ErrorCode::InvalidArgument, "identity family: no maps");
  if (domain.dim() == 0) fail(ErrorCode::InvalidArgument, "identity family: empty box");
  MappingFamily f;
  f.kind_ = Kind::Identity;
  f.size_ = count;
  f.dim_ = domain.dim();
  f.tag_ = MappingClass::RelativelyNonexpansive;
  f.domain_ = std::make_shared<const Box>(std::move(domain));
  return f;
}

MappingFamily MappingFamily::with_asymptotic_constants(double c) const {
  if (!(c >= 0.0) || !std::isfinite(c)) {
    fail(ErrorCode::InvalidArgument, "asymptotic constants: c must be >= 0");
  }
  MappingFamily f = *this;
  f.constants_ = AsymptoticConstants{c};
  if (c > 0.0) f.tag_ = MappingClass::AsymptoticallyQuasiPhi;
  return f;
}

std::optional<double> MappingFamily::lipschitz(std::size_t i) const {
  switch (kind_) {
    case Kind::Identity:
    case Kind::Resolvent:
      return 1.0;
    case Kind::Threshold:
      // Slopes of T^n grow like s^n, so no uniform constant exists.
      (void)i;
      return std::nullopt;
  }
  return std::nullopt;
}

const AffineMonotoneOperator& MappingFamily::op(std::size_t i) const {
  return *resolvents_.at(i).op;
}

double MappingFamily::radius(std::size_t i) const { return resolvents_.at(i).radius; }

void MappingFamily::apply_once(std::size_t i, std::span<const double> x,
                               std::span<double> out) const {
  switch (kind_) {
    case Kind::Threshold:
      out[0] = eval_threshold(thresholds_[i], x[0]);
      break;
    case Kind::Resolvent: {
      const ResolventEntry& e = resolvents_[i];
      const auto d = static_cast<Eigen::Index>(dim_);
      Eigen::Map<const Vector> in(x.data(), d);
      Eigen::Map<Vector> res(out.data(), d);
      res = e.inverse * (in - e.radius * e.op->shift);
      break;
    }
    case Kind::Identity:
      std::copy(x.begin(), x.end(), out.begin());
      break;
  }
}

void MappingFamily::apply(std::size_t i, std::uint64_t power, std::span<const double> x,
                          std::span<double> out) const {
  if (i >= size_) fail(ErrorCode::InvalidArgument, "mapping index out of range");
  if (x.size() != dim_ || out.size() != dim_) {
    fail(ErrorCode::DimensionMismatch, "mapping evaluated with wrong dimension");
  }
  if (!domain_->contains(x)) {
    fail(ErrorCode::DomainViolation,
         "mapping " + std::to_string(i + 1) + " evaluated outside its domain at " +
             point_string(x));
  }
  if (power == 0) {
    std::copy(x.begin(), x.end(), out.begin());
    return;
  }
  if (dim_ == 1) {
    double cur = x[0];
    for (std::uint64_t p = 0; p < power; ++p) {
      double next = 0.0;
      apply_once(i, std::span<const double>(&cur, 1), std::span<double>(&next, 1));
      if (!domain_->contains(std::span<const double>(&next, 1))) {
        fail(ErrorCode::DomainViolation,
             "mapping " + std::to_string(i + 1) + " left its domain: " + std::to_string(next));
      }
      if (next == cur) break;
      cur = next;
    }
    out[0] = cur;
    return;
  }
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next(dim_);
  for (std::uint64_t p = 0; p < power; ++p) {
    apply_once(i, cur, next);
    if (!domain_->contains(std::span<const double>(next))) {
      fail(ErrorCode::DomainViolation,
           "mapping " + std::to_string(i + 1) + " left its domain: " + point_string(next));
    }
    if (next == cur) break;
    cur.swap(next);
  }
  std::copy(cur.begin(), cur.end(), out.begin());
}

Mapping MappingFamily::at(std::size_t i) const {
  if (i >= size_) fail(ErrorCode::InvalidArgument, "mapping index out of range");
  return Mapping(*this, i);
}

Vector Mapping::operator()(const Vector& x) const { return apply_power(*this, 1, x); }

Vector apply_power(const Mapping& map, std::uint64_t n, const Vector& x) {
  const MappingFamily& f = map.family();
  if (static_cast<std::size_t>(x.size()) != f.dim()) {
    fail(ErrorCode::DimensionMismatch, "apply_power: wrong dimension");
  }
  Vector out(x.size());
  f.apply(map.index(), n,
          std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
          std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

MappingFamily make_experiment_family(std::size_t count) {
  if (count == 0) fail(ErrorCode::InvalidArgument, "experiment family: N must be >= 1");
  std::vector<PiecewiseThresholdMap> maps(count);
  const double denom = static_cast<double>(count) + 1.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = static_cast<double>(i + 1) / denom;
    maps[i] = PiecewiseThresholdMap{t, 1.0 + t};
  }
  return MappingFamily::threshold(std::move(maps));
}

}  // namespace hybridproj
