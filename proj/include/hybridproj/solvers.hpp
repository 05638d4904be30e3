#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hybridproj/geometry.hpp"
#include "hybridproj/mappings.hpp"

namespace hybridproj {

enum class Method {
  PhmMann,
  PhmHalpern,
  PhmQuasiMann,
  PhmQuasiHalpern,
  Shm,
  ShmQuasi,
  Lsm,
};

const char* to_string(Method m) noexcept;
std::optional<Method> parse_method(std::string_view name);
bool is_parallel(Method m) noexcept;

/// Step sizes alpha_n for n >= 1.
class AlphaSchedule {
 public:
  enum class Kind { Reciprocal, LogReciprocal, PowerOfTen, ConstantZero, Custom };

  AlphaSchedule() = default;
  static AlphaSchedule reciprocal() { return AlphaSchedule(Kind::Reciprocal); }
  static AlphaSchedule log_reciprocal() { return AlphaSchedule(Kind::LogReciprocal); }
  static AlphaSchedule power_of_ten() { return AlphaSchedule(Kind::PowerOfTen); }
  static AlphaSchedule constant_zero() { return AlphaSchedule(Kind::ConstantZero); }
  /// alpha_n = table[n - 1]; zero past the end of the table.
  static AlphaSchedule custom(std::vector<double> table);

  double operator()(std::uint64_t n) const;
  Kind kind() const { return kind_; }
  const std::vector<double>& table() const { return table_; }
  std::string name() const;

  bool operator==(const AlphaSchedule&) const = default;

 private:
  explicit AlphaSchedule(Kind k) : kind_(k) {}

  Kind kind_ = Kind::Reciprocal;
  std::vector<double> table_;
};

const char* to_string(AlphaSchedule::Kind k) noexcept;
std::optional<AlphaSchedule::Kind> parse_schedule_kind(std::string_view name);

/// Whether the asymptotic variants use T^n (the theory) or T itself.
enum class PowerMode { Iterated, Single };

/// What an observer sees after each projection.
struct IterationView {
  std::uint64_t n;
  const Vector& x;
  const Vector& x_next;
  const HalfSpace& newest_cut;
  std::span<const HalfSpace> projected_onto;
};

struct SolverConfig {
  Method method = Method::PhmMann;
  std::shared_ptr<const MappingFamily> mappings;
  AlphaSchedule alpha;
  /// Radius with F inside {u : |u| <= omega}.
  double omega = 0.0;
  Vector x_start;
  double tol = 1e-6;
  std::uint64_t max_iter = 1'000'000;
  ProjectionSettings projection;
  std::optional<Vector> known_fixed_point;
  std::size_t workers = 1;
  PowerMode power_mode = PowerMode::Iterated;
  std::function<void(const IterationView&)> observer;

  void validate() const;
};

enum class Termination { Converged, MaxIterReached, FixedPointDetected, ProjectionFailure };

const char* to_string(Termination t) noexcept;
std::optional<Termination> parse_termination(std::string_view name);

struct TraceRow {
  std::uint64_t n = 0;
  double alpha = 0.0;
  double epsilon = 0.0;
  std::size_t chosen_index = 0;  // 1-based i_n or j_n
  double step_norm = 0.0;        // |x_{n+1} - x_n|
  double phi_to_start = 0.0;     // phi(x_n, x_start)
  std::optional<double> residual_to_known;
  std::size_t constraints = 0;
  double cumulative_seconds = 0.0;
};

struct RunReport {
  Method method = Method::PhmMann;
  std::uint64_t iterations = 0;
  Vector final_x;
  Termination termination = Termination::MaxIterReached;
  std::vector<TraceRow> trace;
  /// x_n for each trace row, row-major with `dim` entries per row.
  std::vector<double> trajectory;
  std::size_t dim = 0;
  double wall_time = 0.0;
  /// Projections that hit the sweep cap but returned a feasible iterate.
  std::size_t projection_warnings = 0;
  /// Largest <a, x*> - b over every cut built, when x* is known.
  std::optional<double> max_known_violation;
  std::string message;

  Vector x_at(std::size_t row) const;
};

/// (k_n - 1)(omega + |x_n|)^2.
double epsilon_n(double k_n, double omega, const Vector& x_n);

/// Lowest index (0-based) attaining the largest distance to x_n, and the
/// candidate itself.
std::pair<std::size_t, Vector> argmax_farthest(std::span<const Vector> candidates,
                                               const Vector& x_n);

struct CyclicIndex {
  std::uint64_t p;
  std::uint64_t j;  // 1..N

  bool operator==(const CyclicIndex&) const = default;
};

/// n = (p - 1) N + j with 1 <= j <= N.
CyclicIndex cyclic_index(std::uint64_t n, std::uint64_t count);

RunReport run_parallel_mann(const SolverConfig& cfg);
RunReport run_parallel_halpern(const SolverConfig& cfg);
/// phm-quasi-mann and phm-quasi-halpern.
RunReport run_parallel_quasi(const SolverConfig& cfg);
/// shm and shm-quasi.
RunReport run_sequential_hybrid(const SolverConfig& cfg);
/// Liu's cyclic scheme via its one-dimensional closed form.
RunReport run_liu_sequential(const SolverConfig& cfg);

/// Dispatches on cfg.method.
RunReport solve(const SolverConfig& cfg);

}  // namespace hybridproj
