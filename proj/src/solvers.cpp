#include "hybridproj/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "hybridproj/error.hpp"
#include "hybridproj/parallel.hpp"

namespace hybridproj {

namespace {

// Mapped points closer than this to x_n count as fixed.
constexpr double kFixedPointTol = 1e-14;
// Liu's closed form treats smaller denominators as zero.
constexpr double kLiuDenominatorTol = 1e-14;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Accumulated cuts plus the domain-box faces. In one dimension only the
// tightest upper and lower cut are kept for projection, which describes the
// same interval.
class CutStore {
 public:
  CutStore(const Box& box, std::size_t dim) : compact_(dim == 1) {
    set_ = box.faces();
    base_ = set_.size();
  }

  void add(HalfSpace h) {
    ++count_;
    if (h.degenerate()) {
      if (h.offset < 0.0) set_.push_back(std::move(h));
      return;
    }
    if (!compact_) {
      set_.push_back(std::move(h));
      return;
    }
    const double a = h.normal[0];
    const double bound = h.offset / a;
    std::optional<HalfSpace>& slot = a > 0.0 ? upper_ : lower_;
    const bool tighter = !slot || (a > 0.0 ? bound < slot->offset / slot->normal[0]
                                           : bound > slot->offset / slot->normal[0]);
    if (!tighter) return;
    slot = std::move(h);
    rebuild_compact();
  }

  std::span<const HalfSpace> constraints() const { return set_; }
  std::vector<HalfSpace>& raw() { return set_; }
  std::size_t count() const { return count_; }

 private:
  void rebuild_compact() {
    // Keep any recorded empty cuts; they sit after the faces.
    std::vector<HalfSpace> empties;
    for (std::size_t i = base_; i < set_.size(); ++i) {
      if (set_[i].degenerate()) empties.push_back(set_[i]);
    }
    set_.resize(base_);
    if (upper_) set_.push_back(*upper_);
    if (lower_) set_.push_back(*lower_);
    for (auto& e : empties) set_.push_back(std::move(e));
  }

  bool compact_;
  std::vector<HalfSpace> set_;
  std::size_t base_ = 0;
  std::size_t count_ = 0;
  std::optional<HalfSpace> upper_;
  std::optional<HalfSpace> lower_;
};

// Shared bookkeeping for every driver.
class Recorder {
 public:
  explicit Recorder(const SolverConfig& cfg) : cfg_(cfg), start_(Clock::now()) {
    report_.method = cfg.method;
    report_.dim = static_cast<std::size_t>(cfg.x_start.size());
    if (cfg.known_fixed_point) report_.max_known_violation = -std::numeric_limits<double>::infinity();
  }

  TraceRow begin_row(std::uint64_t n, const Vector& x) const {
    TraceRow row;
    row.n = n;
    row.phi_to_start = lyapunov(x, cfg_.x_start);
    if (cfg_.known_fixed_point) row.residual_to_known = (x - *cfg_.known_fixed_point).norm();
    return row;
  }

  void check_cut(const HalfSpace& h) {
    if (cfg_.known_fixed_point) {
      report_.max_known_violation =
          std::max(*report_.max_known_violation, h.violation(*cfg_.known_fixed_point));
    }
  }

  void push(TraceRow row, const Vector& x) {
    row.cumulative_seconds = seconds_since(start_);
    report_.trace.push_back(row);
    report_.trajectory.insert(report_.trajectory.end(), x.data(), x.data() + x.size());
    report_.iterations = report_.trace.size();
  }

  /// Applies the stopping rule to the new iterate. Steps with alpha = 1
  /// are vacuous (y = x) and never count as convergence by step length.
  bool converged(const Vector& x_next, double step, double alpha) const {
    if (cfg_.known_fixed_point) return (x_next - *cfg_.known_fixed_point).norm() <= cfg_.tol;
    return alpha < 1.0 && step <= cfg_.tol;
  }

  RunReport finish(Vector x, Termination t, std::string message = {}) {
    report_.final_x = std::move(x);
    report_.termination = t;
    report_.message = std::move(message);
    report_.wall_time = seconds_since(start_);
    if (report_.max_known_violation && std::isinf(*report_.max_known_violation)) {
      report_.max_known_violation = 0.0;
    }
    return std::move(report_);
  }

  RunReport& report() { return report_; }

 private:
  const SolverConfig& cfg_;
  Clock::time_point start_;
  RunReport report_;
};

enum class Anchor { Mann, Halpern };

void require_method(const SolverConfig& cfg, std::initializer_list<Method> allowed,
                    const char* driver) {
  if (std::find(allowed.begin(), allowed.end(), cfg.method) == allowed.end()) {
    fail(ErrorCode::InvalidArgument,
         std::string(driver) + " cannot run method " + to_string(cfg.method));
  }
}

void require_quasi_class(const SolverConfig& cfg) {
  if (!cfg.mappings->constants().trivial()) {
    fail(ErrorCode::ClassMismatch, std::string(to_string(cfg.method)) +
                                       " requires k_n = 1 (quasi-phi mappings), family is " +
                                       to_string(cfg.mappings->tag()));
  }
}

// Parallel hybrid iteration with nested C_n.
RunReport run_parallel(const SolverConfig& cfg, Anchor anchor, bool quasi) {
  cfg.validate();
  if (quasi) require_quasi_class(cfg);
  const MappingFamily& family = *cfg.mappings;
  const Vector& x0 = cfg.x_start;
  const bool iterate_powers = !quasi && cfg.power_mode == PowerMode::Iterated;

  Recorder rec(cfg);
  CutStore cuts(family.domain(), family.dim());
  WorkerPool pool(std::min(cfg.workers, family.size()));
  Vector x = x0;

  for (std::uint64_t n = 0; n < cfg.max_iter; ++n) {
    const std::uint64_t k = n + 1;
    const double alpha = cfg.alpha(k);
    const double eps = quasi ? 0.0 : epsilon_n(family.k(k), cfg.omega, x);
    const std::uint64_t power = iterate_powers ? k : 1;

    TraceRow row = rec.begin_row(n, x);
    row.alpha = alpha;
    row.epsilon = eps;

    const EvalBatch batch =
        evaluate_family(family, x, power, alpha, anchor == Anchor::Mann ? x : x0, pool);

    std::size_t best = 0;
    for (std::size_t i = 1; i < batch.distance2.size(); ++i) {
      if (batch.distance2[i] > batch.distance2[best]) best = i;
    }
    row.chosen_index = best + 1;

    const double worst_displacement =
        *std::max_element(batch.displacement.begin(), batch.displacement.end());
    if (worst_displacement <= kFixedPointTol) {
      row.constraints = cuts.count();
      rec.push(row, x);
      return rec.finish(x, Termination::FixedPointDetected);
    }

    const Vector y_bar = batch.output(best);
    HalfSpace cut = anchor == Anchor::Mann ? mann_halfspace(x, y_bar, eps)
                                           : halpern_halfspace(x0, x, y_bar, alpha, eps);
    rec.check_cut(cut);
    const HalfSpace newest = cut;
    cuts.add(std::move(cut));
    row.constraints = cuts.count();

    Vector x_next;
    try {
      if (cuts.constraints().empty()) {
        // Whole space: the projection of x0 is x0.
        x_next = x0;
      } else {
        Projection proj = project_intersection(x0, cuts.constraints(), cfg.projection);
        if (proj.status == ProjectionStatus::NonConverged) ++rec.report().projection_warnings;
        x_next = std::move(proj.point);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Infeasible) throw;
      rec.push(row, x);
      return rec.finish(x, Termination::ProjectionFailure, e.what());
    }

    row.step_norm = (x_next - x).norm();
    rec.push(row, x);
    if (cfg.observer) cfg.observer(IterationView{n, x, x_next, newest, cuts.constraints()});
    const bool done = rec.converged(x_next, row.step_norm, alpha);
    x = std::move(x_next);
    if (done) return rec.finish(x, Termination::Converged);
  }
  return rec.finish(x, Termination::MaxIterReached);
}

}  // namespace

const char* to_string(Method m) noexcept {
  switch (m) {
    case Method::PhmMann: return "phm-mann";
    case Method::PhmHalpern: return "phm-halpern";
    case Method::PhmQuasiMann: return "phm-quasi-mann";
    case Method::PhmQuasiHalpern: return "phm-quasi-halpern";
    case Method::Shm: return "shm";
    case Method::ShmQuasi: return "shm-quasi";
    case Method::Lsm: return "lsm";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : {Method::PhmMann, Method::PhmHalpern, Method::PhmQuasiMann,
                   Method::PhmQuasiHalpern, Method::Shm, Method::ShmQuasi, Method::Lsm}) {
    if (name == to_string(m)) return m;
  }
  return std::nullopt;
}

bool is_parallel(Method m) noexcept {
  return m == Method::PhmMann || m == Method::PhmHalpern || m == Method::PhmQuasiMann ||
         m == Method::PhmQuasiHalpern;
}

AlphaSchedule AlphaSchedule::custom(std::vector<double> table) {
  for (double a : table) {
    if (!(a >= 0.0 && a <= 1.0)) {
      fail(ErrorCode::ValidationError,
           "custom alpha table entry outside [0, 1]: " + std::to_string(a));
    }
  }
  AlphaSchedule s(Kind::Custom);
  s.table_ = std::move(table);
  return s;
}

double AlphaSchedule::operator()(std::uint64_t n) const {
  if (n == 0) fail(ErrorCode::InvalidArgument, "alpha schedule is indexed from n = 1");
  switch (kind_) {
    case Kind::Reciprocal: return 1.0 / static_cast<double>(n);
    case Kind::LogReciprocal: return 1.0 / (std::log(static_cast<double>(n)) + 2.0);
    case Kind::PowerOfTen: return std::pow(10.0, -static_cast<double>(n));
    case Kind::ConstantZero: return 0.0;
    case Kind::Custom: return n <= table_.size() ? table_[n - 1] : 0.0;
  }
  return 0.0;
}

std::string AlphaSchedule::name() const { return to_string(kind_); }

const char* to_string(AlphaSchedule::Kind k) noexcept {
  switch (k) {
    case AlphaSchedule::Kind::Reciprocal: return "reciprocal";
    case AlphaSchedule::Kind::LogReciprocal: return "log-reciprocal";
    case AlphaSchedule::Kind::PowerOfTen: return "power-of-ten";
    case AlphaSchedule::Kind::ConstantZero: return "constant-zero";
    case AlphaSchedule::Kind::Custom: return "custom";
  }
  return "unknown";
}

std::optional<AlphaSchedule::Kind> parse_schedule_kind(std::string_view name) {
  using K = AlphaSchedule::Kind;
  for (K k : {K::Reciprocal, K::LogReciprocal, K::PowerOfTen, K::ConstantZero, K::Custom}) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

const char* to_string(Termination t) noexcept {
  switch (t) {
    case Termination::Converged: return "Converged";
    case Termination::MaxIterReached: return "MaxIterReached";
    case Termination::FixedPointDetected: return "FixedPointDetected";
    case Termination::ProjectionFailure: return "ProjectionFailure";
  }
  return "unknown";
}

std::optional<Termination> parse_termination(std::string_view name) {
  for (Termination t : {Termination::Converged, Termination::MaxIterReached,
                        Termination::FixedPointDetected, Termination::ProjectionFailure}) {
    if (name == to_string(t)) return t;
  }
  return std::nullopt;
}

void SolverConfig::validate() const {
  if (!mappings) fail(ErrorCode::InvalidArgument, "SolverConfig: no mappings");
  const std::size_t d = mappings->dim();
  if (static_cast<std::size_t>(x_start.size()) != d) {
    fail(ErrorCode::DimensionMismatch, "SolverConfig: x_start has the wrong dimension");
  }
  if (!x_start.allFinite()) fail(ErrorCode::InvalidArgument, "SolverConfig: x_start not finite");
  if (!mappings->domain().contains(x_start)) {
    fail(ErrorCode::DomainViolation, "SolverConfig: x_start outside the mapping domain");
  }
  if (!(omega >= 0.0) || !std::isfinite(omega)) {
    fail(ErrorCode::InvalidArgument, "SolverConfig: omega must be finite and >= 0");
  }
  if (!(tol > 0.0) || !std::isfinite(tol)) {
    fail(ErrorCode::InvalidArgument, "SolverConfig: tol must be > 0");
  }
  if (max_iter < 1) fail(ErrorCode::InvalidArgument, "SolverConfig: max_iter must be >= 1");
  if (workers < 1) fail(ErrorCode::InvalidArgument, "SolverConfig: workers must be >= 1");
  projection.validate();
  if (known_fixed_point) {
    if (static_cast<std::size_t>(known_fixed_point->size()) != d) {
      fail(ErrorCode::DimensionMismatch, "SolverConfig: known_fixed_point dimension");
    }
    if (known_fixed_point->norm() > omega) {
      fail(ErrorCode::InvalidArgument, "SolverConfig: omega < |known_fixed_point|");
    }
  }
}

Vector RunReport::x_at(std::size_t row) const {
  Vector v(static_cast<Eigen::Index>(dim));
  std::copy_n(trajectory.begin() + static_cast<std::ptrdiff_t>(row * dim), dim, v.data());
  return v;
}

double epsilon_n(double k_n, double omega, const Vector& x_n) {
  if (!(k_n >= 1.0)) fail(ErrorCode::InvalidArgument, "epsilon_n: k_n must be >= 1");
  const double r = omega + x_n.norm();
  return (k_n - 1.0) * r * r;
}

std::pair<std::size_t, Vector> argmax_farthest(std::span<const Vector> candidates,
                                               const Vector& x_n) {
  if (candidates.empty()) fail(ErrorCode::InvalidArgument, "argmax_farthest: no candidates");
  std::size_t best = 0;
  double best_d2 = -1.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    require_same_dim(candidates[i], x_n, "argmax_farthest");
    const double d2 = (candidates[i] - x_n).squaredNorm();
    if (d2 > best_d2) {
      best = i;
      best_d2 = d2;
    }
  }
  return {best, candidates[best]};
}

CyclicIndex cyclic_index(std::uint64_t n, std::uint64_t count) {
  if (n < 1 || count < 1) fail(ErrorCode::InvalidArgument, "cyclic_index: n, N must be >= 1");
  return CyclicIndex{(n - 1) / count + 1, (n - 1) % count + 1};
}

RunReport run_parallel_mann(const SolverConfig& cfg) {
  require_method(cfg, {Method::PhmMann}, "run_parallel_mann");
  return run_parallel(cfg, Anchor::Mann, false);
}

RunReport run_parallel_halpern(const SolverConfig& cfg) {
  require_method(cfg, {Method::PhmHalpern}, "run_parallel_halpern");
  return run_parallel(cfg, Anchor::Halpern, false);
}

RunReport run_parallel_quasi(const SolverConfig& cfg) {
  require_method(cfg, {Method::PhmQuasiMann, Method::PhmQuasiHalpern}, "run_parallel_quasi");
  return run_parallel(cfg,
                      cfg.method == Method::PhmQuasiMann ? Anchor::Mann : Anchor::Halpern,
                      true);
}

RunReport run_sequential_hybrid(const SolverConfig& cfg) {
  require_method(cfg, {Method::Shm, Method::ShmQuasi}, "run_sequential_hybrid");
  cfg.validate();
  const bool quasi = cfg.method == Method::ShmQuasi;
  if (quasi) require_quasi_class(cfg);
  const MappingFamily& family = *cfg.mappings;
  const std::size_t d = family.dim();
  const Vector& x1 = cfg.x_start;
  const bool iterate_powers = !quasi && cfg.power_mode == PowerMode::Iterated;

  Recorder rec(cfg);
  CutStore q_cuts(family.domain(), d);
  Vector x = x1;
  Vector mapped(static_cast<Eigen::Index>(d));

  for (std::uint64_t n = 1; n <= cfg.max_iter; ++n) {
    const CyclicIndex idx = cyclic_index(n, family.size());
    const double alpha = cfg.alpha(n);
    const double eps = quasi ? 0.0 : epsilon_n(family.k(idx.p), cfg.omega, x);

    TraceRow row = rec.begin_row(n, x);
    row.alpha = alpha;
    row.epsilon = eps;
    row.chosen_index = idx.j;

    family.apply(idx.j - 1, iterate_powers ? idx.p : 1,
                 std::span<const double>(x.data(), d), std::span<double>(mapped.data(), d));
    const Vector y = alpha * x1 + (1.0 - alpha) * mapped;

    HalfSpace c_cut = halpern_halfspace(x1, x, y, alpha, eps);
    HalfSpace q_cut = q_halfspace(x1, x);
    rec.check_cut(c_cut);
    rec.check_cut(q_cut);
    q_cuts.add(std::move(q_cut));
    row.constraints = q_cuts.count() + 1;

    std::vector<HalfSpace>& set = q_cuts.raw();
    set.push_back(c_cut);
    Vector x_next;
    try {
      Projection proj = project_intersection(x1, set, cfg.projection);
      if (proj.status == ProjectionStatus::NonConverged) ++rec.report().projection_warnings;
      x_next = std::move(proj.point);
    } catch (const Error& e) {
      set.pop_back();
      if (e.code() != ErrorCode::Infeasible) throw;
      rec.push(row, x);
      return rec.finish(x, Termination::ProjectionFailure, e.what());
    }
    if (cfg.observer) cfg.observer(IterationView{n, x, x_next, c_cut, set});
    set.pop_back();

    row.step_norm = (x_next - x).norm();
    rec.push(row, x);
    const bool done = rec.converged(x_next, row.step_norm, alpha);
    x = std::move(x_next);
    if (done) return rec.finish(x, Termination::Converged);
  }
  return rec.finish(x, Termination::MaxIterReached);
}

RunReport run_liu_sequential(const SolverConfig& cfg) {
  require_method(cfg, {Method::Lsm}, "run_liu_sequential");
  cfg.validate();
  const MappingFamily& family = *cfg.mappings;
  if (family.dim() != 1) {
    fail(ErrorCode::UnsupportedDimension, "lsm is only available in one dimension");
  }
  const double x0 = cfg.x_start[0];
  const std::uint64_t count = family.size();

  Recorder rec(cfg);
  Vector x = cfg.x_start;
  for (std::uint64_t n = 0; n < cfg.max_iter; ++n) {
    const double alpha = cfg.alpha(n + 1);
    const std::size_t j = static_cast<std::size_t>(n % count);
    TraceRow row = rec.begin_row(n, x);
    row.alpha = alpha;
    row.chosen_index = j + 1;
    row.constraints = 2;

    double tx = 0.0;
    family.apply(j, 1, std::span<const double>(x.data(), 1), std::span<double>(&tx, 1));
    const double xn = x[0];
    if (std::abs(tx - xn) <= kFixedPointTol) {
      rec.push(row, x);
      return rec.finish(x, Termination::FixedPointDetected);
    }
    const double y = alpha * x0 + (1.0 - alpha) * tx;
    const double denom = 2.0 * (alpha * x0 + (1.0 - alpha) * xn - y);
    double next = xn;
    if (std::abs(denom) > kLiuDenominatorTol) {
      const double bound = (alpha * x0 * x0 + (1.0 - alpha) * xn * xn - y * y) / denom;
      next = std::min(xn, bound);
    }
    Vector x_next(1);
    x_next[0] = next;
    row.step_norm = std::abs(next - xn);
    rec.push(row, x);
    const bool done = rec.converged(x_next, row.step_norm, alpha);
    x = std::move(x_next);
    if (done) return rec.finish(x, Termination::Converged);
  }
  return rec.finish(x, Termination::MaxIterReached);
}

RunReport solve(const SolverConfig& cfg) {
  switch (cfg.method) {
    case Method::PhmMann: return run_parallel_mann(cfg);
    case Method::PhmHalpern: return run_parallel_halpern(cfg);
    case Method::PhmQuasiMann:
    case Method::PhmQuasiHalpern: return run_parallel_quasi(cfg);
    case Method::Shm:
    case Method::ShmQuasi: return run_sequential_hybrid(cfg);
    case Method::Lsm: return run_liu_sequential(cfg);
  }
  fail(ErrorCode::InvalidArgument, "unknown method");
}

}  // namespace hybridproj
