#include "hybridproj/speedup.hpp"

#include <algorithm>
#include <chrono>

#include "hybridproj/error.hpp"
#include "hybridproj/parallel.hpp"

namespace hybridproj {

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void check_request(std::span<const std::size_t> worker_counts, int repetitions) {
  if (worker_counts.empty()) fail(ErrorCode::InvalidArgument, "speedup: no worker counts");
  for (std::size_t w : worker_counts) {
    if (w < 1) fail(ErrorCode::InvalidArgument, "speedup: worker counts must be >= 1");
  }
  if (repetitions < 1) fail(ErrorCode::InvalidArgument, "speedup: repetitions must be >= 1");
}

}  // namespace

double SpeedupTable::speedup(std::size_t i) const {
  return rows.at(0).seconds / rows.at(i).seconds;
}

bool same_trajectory(const RunReport& a, const RunReport& b) {
  if (a.iterations != b.iterations || a.termination != b.termination ||
      a.trajectory != b.trajectory || a.final_x != b.final_x) {
    return false;
  }
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    const TraceRow& r = a.trace[i];
    const TraceRow& s = b.trace[i];
    if (r.n != s.n || r.alpha != s.alpha || r.epsilon != s.epsilon ||
        r.chosen_index != s.chosen_index || r.step_norm != s.step_norm ||
        r.phi_to_start != s.phi_to_start || r.residual_to_known != s.residual_to_known ||
        r.constraints != s.constraints) {
      return false;
    }
  }
  return true;
}

SpeedupTable measure_speedup(const SolverConfig& cfg, std::span<const std::size_t> worker_counts,
                             int repetitions) {
  if (!is_parallel(cfg.method)) {
    fail(ErrorCode::InvalidArgument, "measure_speedup needs a parallel method");
  }
  check_request(worker_counts, repetitions);
  SpeedupTable table;
  std::optional<RunReport> reference;
  for (std::size_t w : worker_counts) {
    SolverConfig run = cfg;
    run.workers = w;
    std::vector<double> times;
    for (int r = 0; r < repetitions; ++r) {
      RunReport report = solve(run);
      times.push_back(report.wall_time);
      if (!reference) {
        reference = std::move(report);
      } else if (!same_trajectory(*reference, report)) {
        table.trajectories_identical = false;
      }
    }
    table.rows.push_back(SpeedupRow{w, median(std::move(times)), reference->iterations});
  }
  return table;
}

SpeedupTable measure_batch_speedup(const MappingFamily& family, const Vector& x,
                                   std::span<const std::size_t> worker_counts,
                                   int repetitions) {
  check_request(worker_counts, repetitions);
  SpeedupTable table;
  std::optional<std::vector<double>> reference;
  for (std::size_t w : worker_counts) {
    WorkerPool pool(w);
    std::vector<double> times;
    for (int r = 0; r < repetitions; ++r) {
      const auto start = std::chrono::steady_clock::now();
      EvalBatch batch = evaluate_family(family, x, 1, 0.0, x, pool);
      times.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
      if (!reference) {
        reference = std::move(batch.outputs);
      } else if (*reference != batch.outputs) {
        table.trajectories_identical = false;
      }
    }
    table.rows.push_back(SpeedupRow{w, median(std::move(times)), 1});
  }
  return table;
}

}  // namespace hybridproj
