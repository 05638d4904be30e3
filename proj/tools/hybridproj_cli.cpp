// hybridproj solve / speedup front end. Talks to the library only through
// the C interface.

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hybridproj/hybridproj.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRowError = 1;
constexpr int kExitConfigError = 2;

void report(const char* what, hp_status st) {
  std::fprintf(stderr, "hybridproj: %s: %s: %s\n", what, hp_status_name(st), hp_last_error());
}

// Flag first, then HYBRIDPROJ_WORKERS.
std::optional<std::size_t> env_workers() {
  const char* raw = std::getenv("HYBRIDPROJ_WORKERS");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  char* end = nullptr;
  const unsigned long v = std::strtoul(raw, &end, 10);
  if (*end != '\0' || v == 0) {
    std::fprintf(stderr, "hybridproj: ignoring HYBRIDPROJ_WORKERS=%s\n", raw);
    return std::nullopt;
  }
  return v;
}

struct Experiment {
  hp_experiment* ptr = nullptr;
  ~Experiment() { hp_experiment_free(ptr); }
};

struct SolveArgs {
  std::string config;
  std::optional<std::size_t> workers;
  std::string out;
  std::string trace;
  std::string method;
  std::optional<double> tol;
};

int run_solve(const SolveArgs& a) {
  Experiment exp;
  if (hp_status st = hp_experiment_load(a.config.c_str(), &exp.ptr); st != HP_OK) {
    report("config", st);
    return kExitConfigError;
  }
  std::optional<std::size_t> workers = a.workers ? a.workers : env_workers();
  if (workers) {
    const std::size_t w = *workers;
    if (hp_status st = hp_experiment_set_workers(exp.ptr, &w, 1); st != HP_OK) {
      report("--workers", st);
      return kExitConfigError;
    }
  }
  if (!a.method.empty()) {
    if (hp_status st = hp_experiment_set_method(exp.ptr, a.method.c_str()); st != HP_OK) {
      report("--method", st);
      return kExitConfigError;
    }
  }
  if (a.tol) {
    if (hp_status st = hp_experiment_set_tolerance(exp.ptr, *a.tol); st != HP_OK) {
      report("--tol", st);
      return kExitConfigError;
    }
  }
  if (!a.out.empty()) hp_experiment_set_output(exp.ptr, a.out.c_str());

  hp_results* results = nullptr;
  if (hp_status st = hp_experiment_run(exp.ptr, &results); st != HP_OK) {
    report("run", st);
    return kExitConfigError;
  }
  int code = kExitOk;
  const std::size_t n = hp_results_count(results);
  std::printf("%-18s %-16s %-10s %-7s %-10s %-12s %-20s %s\n", "method", "schedule", "tol",
              "workers", "iters", "seconds", "termination", "residual");
  for (std::size_t i = 0; i < n; ++i) {
    hp_result_row r;
    hp_results_row(results, i, &r);
    if (r.error[0] != '\0') {
      std::printf("%-18s %-16s %-10.3g %-7zu error: %s\n", r.method, r.schedule, r.tolerance,
                  r.workers, r.error);
      code = kExitRowError;
      continue;
    }
    std::printf("%-18s %-16s %-10.3g %-7zu %-10llu %-12.6f %-20s %.3e\n", r.method, r.schedule,
                r.tolerance, r.workers, static_cast<unsigned long long>(r.iterations),
                r.wall_seconds, r.termination, r.final_residual);
  }
  std::printf("\n%s", hp_results_summary(results));

  const std::string out = hp_experiment_output(exp.ptr);
  if (!out.empty()) {
    if (hp_status st = hp_results_write_csv(results, out.c_str()); st != HP_OK) {
      report("--out", st);
      code = kExitRowError;
    }
  }
  if (!a.trace.empty()) {
    if (hp_status st = hp_results_write_trace(results, a.trace.c_str()); st != HP_OK) {
      report("--trace", st);
      code = kExitRowError;
    }
  }
  hp_results_free(results);
  return code;
}

int run_speedup(const std::string& config, std::vector<std::size_t> workers, int reps) {
  Experiment exp;
  if (hp_status st = hp_experiment_load(config.c_str(), &exp.ptr); st != HP_OK) {
    report("config", st);
    return kExitConfigError;
  }
  if (workers.empty()) {
    if (auto w = env_workers()) {
      workers = {1, *w};
    } else {
      workers = {1, 2, 4};
    }
  }
  hp_speedup* table = nullptr;
  if (hp_status st = hp_experiment_speedup(exp.ptr, workers.data(), workers.size(), reps, &table);
      st != HP_OK) {
    report("speedup", st);
    return st == HP_ERR_PARSE || st == HP_ERR_VALIDATION ? kExitConfigError : kExitRowError;
  }
  std::printf("%-8s %-14s %-10s %s\n", "workers", "median_s", "iters", "T_s/T_p");
  for (std::size_t i = 0; i < hp_speedup_count(table); ++i) {
    std::size_t w = 0;
    double seconds = 0.0;
    double s = 0.0;
    uint64_t iters = 0;
    hp_speedup_row(table, i, &w, &seconds, &iters, &s);
    std::printf("%-8zu %-14.6f %-10llu %.3f\n", w, seconds,
                static_cast<unsigned long long>(iters), s);
  }
  std::printf("trajectories identical: %s\n", hp_speedup_identical(table) ? "yes" : "no");
  const int code = hp_speedup_identical(table) ? kExitOk : kExitRowError;
  hp_speedup_free(table);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel and sequential hybrid projection solvers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(hp_version()));

  SolveArgs solve;
  CLI::App* solve_cmd = app.add_subcommand("solve", "Run the method sweep of a config");
  solve_cmd->add_option("--config", solve.config, "Experiment config")->required();
  solve_cmd->add_option("--workers", solve.workers, "Worker threads (overrides config)")
      ->check(CLI::PositiveNumber);
  solve_cmd->add_option("--out", solve.out, "Result CSV (overrides config)");
  solve_cmd->add_option("--trace", solve.trace, "Per-iteration CSV of the first row");
  solve_cmd->add_option("--method", solve.method, "Run only this method");
  solve_cmd->add_option("--tol", solve.tol, "Run only this tolerance");

  std::string speed_config;
  std::vector<std::size_t> speed_workers;
  int reps = 3;
  CLI::App* speed_cmd = app.add_subcommand("speedup", "Time one parallel method per worker count");
  speed_cmd->add_option("--config", speed_config, "Experiment config")->required();
  speed_cmd->add_option("--workers", speed_workers, "Worker counts, e.g. 1,2,4")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  speed_cmd->add_option("--reps", reps, "Repetitions per count (median)")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfigError;
  }
  if (*solve_cmd) return run_solve(solve);
  return run_speedup(speed_config, speed_workers, reps);
}
