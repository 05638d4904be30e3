#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hybridproj/mappings.hpp"
#include "hybridproj/solvers.hpp"

namespace hybridproj {

struct SpeedupRow {
  std::size_t workers = 1;
  double seconds = 0.0;  // median over repetitions
  std::uint64_t iterations = 0;
};

struct SpeedupTable {
  std::vector<SpeedupRow> rows;
  /// Traces (excluding timings) agree bit for bit across worker counts.
  bool trajectories_identical = true;

  /// seconds(first row) / seconds(row i).
  double speedup(std::size_t i) const;
};

/// Runs the same parallel solve once per worker count (median of
/// `repetitions` timings each).
SpeedupTable measure_speedup(const SolverConfig& cfg, std::span<const std::size_t> worker_counts,
                             int repetitions = 3);

/// Times a single evaluate_family batch per worker count.
SpeedupTable measure_batch_speedup(const MappingFamily& family, const Vector& x,
                                   std::span<const std::size_t> worker_counts,
                                   int repetitions = 3);

/// Same iterates, choices, cuts and termination; timings ignored.
bool same_trajectory(const RunReport& a, const RunReport& b);

}  // namespace hybridproj
