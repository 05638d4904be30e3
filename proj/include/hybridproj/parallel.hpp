#pragma once

// Deterministic fan-out of the per-iteration mapping evaluations.

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include "hybridproj/geometry.hpp"
#include "hybridproj/mappings.hpp"

namespace hybridproj {

/// Worker count used when none is given: HYBRIDPROJ_WORKERS if set and
/// valid, otherwise the number of hardware threads.
std::size_t default_workers();

/// Fixed set of threads running static contiguous chunks of an index range.
/// The calling thread executes the first chunk itself.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t workers);
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t size() const { return workers_; }

  /// Calls body(begin, end) on disjoint chunks covering [0, n) and blocks
  /// until all chunks finish. If several chunks throw, the exception of the
  /// lowest chunk is rethrown.
  void parallel_for(std::size_t n,
                    const std::function<void(std::size_t, std::size_t)>& body);

 private:
  void worker_loop(std::size_t slot);
  std::pair<std::size_t, std::size_t> chunk(std::size_t slot) const;

  std::size_t workers_;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  std::uint64_t generation_ = 0;
  std::size_t pending_ = 0;
  bool stopping_ = false;
  std::size_t range_ = 0;
  const std::function<void(std::size_t, std::size_t)>* body_ = nullptr;
  std::vector<std::exception_ptr> errors_;
};

/// y^i = alpha * anchor + (1 - alpha) * T_i^power(x), stored row-major.
struct EvalBatch {
  std::size_t dim = 0;
  std::vector<double> outputs;
  /// |T_i^power(x) - x|; all zero means x is a common fixed point.
  std::vector<double> displacement;
  /// |y^i - x|^2, used by the farthest-point reduction.
  std::vector<double> distance2;
#ifndef NDEBUG
  std::vector<std::uint32_t> write_counts;
#endif

  std::size_t size() const { return dim == 0 ? 0 : outputs.size() / dim; }
  Vector output(std::size_t i) const;
};

EvalBatch evaluate_family(const MappingFamily& family, const Vector& x,
                          std::uint64_t power, double alpha, const Vector& anchor,
                          WorkerPool& pool);

EvalBatch evaluate_family(const MappingFamily& family, const Vector& x,
                          std::uint64_t power, double alpha, const Vector& anchor,
                          std::size_t workers);

}  // namespace hybridproj
