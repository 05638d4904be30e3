#pragma once

// Experiment configs, method sweeps and CSV reports.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hybridproj/mappings.hpp"
#include "hybridproj/solvers.hpp"

namespace hybridproj {

struct FamilySpec {
  enum class Kind { Threshold, Resolvent };

  Kind kind = Kind::Threshold;
  /// Threshold generator t_i = i / (N + 1), s_i = 1 + t_i. Unset when the
  /// explicit t/s arrays are given.
  std::optional<std::size_t> count;
  std::vector<double> t;
  std::vector<double> s;
  /// k_n = 1 + c / n; zero means quasi-phi.
  double asymptotic_c = 0.0;

  // Resolvent family: every map shares the operator M x + q (row-major
  // matrix) and differs by its radius r_i.
  std::size_t dim = 0;
  std::vector<double> matrix;
  std::vector<double> shift;
  std::vector<double> radii;
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t ambient_dim() const { return kind == Kind::Threshold ? 1 : dim; }
  MappingFamily build() const;

  bool operator==(const FamilySpec&) const = default;
};

struct ExperimentSpec {
  FamilySpec family;
  std::vector<Method> methods;
  std::vector<AlphaSchedule> schedules;
  std::vector<double> tolerances;
  std::vector<double> x_start;
  std::optional<double> omega;
  std::uint64_t max_iter = 1'000'000;
  std::vector<std::size_t> workers;
  std::optional<std::vector<double>> known_fixed_point;
  std::string output_path;
  PowerMode power_mode = PowerMode::Iterated;
  double projection_tolerance = 1e-12;
  int projection_max_sweeps = 10'000;

  /// Throws ValidationError.
  void validate() const;
  /// One solver configuration; tolerance and workers are left at the first
  /// listed values.
  SolverConfig solver_config(Method method, const AlphaSchedule& schedule,
                             std::shared_ptr<const MappingFamily> family) const;

  bool operator==(const ExperimentSpec&) const = default;
};

/// Throws ParseError (with line and key) or ValidationError.
ExperimentSpec parse_config(const std::filesystem::path& path);
ExperimentSpec parse_config_text(std::string_view text, std::string_view source = "<config>");
std::string emit_config(const ExperimentSpec& spec);

struct ResultRow {
  Method method = Method::PhmMann;
  std::string schedule;
  double tolerance = 0.0;
  std::size_t workers = 1;
  std::uint64_t iterations = 0;
  double wall_seconds = 0.0;
  /// Empty when the row failed with an error instead of terminating.
  std::optional<Termination> termination;
  double final_residual = 0.0;
  std::string error;

  bool operator==(const ResultRow&) const = default;
};

/// Rows in method x schedule x tolerance x workers order. A failing row
/// records its error and the sweep continues. When `first_report` is given
/// it receives the report of the first row.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec,
                                      RunReport* first_report = nullptr);

void emit_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path);
std::vector<ResultRow> parse_results_csv(const std::filesystem::path& path);

/// Per-iteration trace: n, alpha, epsilon, chosen_index, step_norm,
/// phi_to_start, residual_to_known, constraints, cumulative_seconds, then
/// x_1..x_d.
void emit_trace(const RunReport& report, const std::filesystem::path& path);

/// One line of a Tables 1-3 style comparison.
struct SummaryRow {
  std::string schedule;
  double tolerance = 0.0;
  std::optional<double> t_parallel;    // PHM, most workers
  std::optional<double> t_sequential;  // PHM, one worker
  std::optional<double> t_liu;         // LSM when it converged
  bool liu_very_slow = false;          // LSM hit max_iter
  std::optional<double> speedup;       // t_sequential / t_parallel
};

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);
/// Text tables, one per schedule, with columns TOL, T_p, T_s, T_L.
std::string render_summary(const std::vector<SummaryRow>& rows);

/// RFC 4180 helpers, exposed for tests.
std::string csv_escape(std::string_view field);
std::vector<std::vector<std::string>> csv_parse(std::string_view text);
std::string format_double(double v);

}  // namespace hybridproj
