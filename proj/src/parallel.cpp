#include "hybridproj/parallel.hpp"

#include <algorithm>
#include <cassert>
#include <cstdlib>
#include <string>

#include "hybridproj/error.hpp"

namespace hybridproj {

std::size_t default_workers() {
  if (const char* env = std::getenv("HYBRIDPROJ_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

WorkerPool::WorkerPool(std::size_t workers) : workers_(workers) {
  if (workers_ == 0) fail(ErrorCode::InvalidArgument, "WorkerPool: workers must be >= 1");
  errors_.resize(workers_);
  threads_.reserve(workers_ - 1);
  for (std::size_t slot = 1; slot < workers_; ++slot) {
    threads_.emplace_back([this, slot] { worker_loop(slot); });
  }
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  wake_.notify_all();
  for (auto& t : threads_) t.join();
}

std::pair<std::size_t, std::size_t> WorkerPool::chunk(std::size_t slot) const {
  const std::size_t base = range_ / workers_;
  const std::size_t extra = range_ % workers_;
  const std::size_t begin = slot * base + std::min(slot, extra);
  const std::size_t end = begin + base + (slot < extra ? 1 : 0);
  return {begin, end};
}

void WorkerPool::worker_loop(std::size_t slot) {
  std::uint64_t seen = 0;
  for (;;) {
    const std::function<void(std::size_t, std::size_t)>* body = nullptr;
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [&] { return stopping_ || generation_ != seen; });
      if (stopping_) return;
      seen = generation_;
      body = body_;
    }
    const auto [begin, end] = chunk(slot);
    if (begin < end) {
      try {
        (*body)(begin, end);
      } catch (...) {
        errors_[slot] = std::current_exception();
      }
    }
    {
      std::lock_guard lock(mutex_);
      if (--pending_ == 0) done_.notify_one();
    }
  }
}

void WorkerPool::parallel_for(std::size_t n,
                              const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  if (workers_ == 1) {
    body(0, n);
    return;
  }
  std::fill(errors_.begin(), errors_.end(), nullptr);
  {
    std::lock_guard lock(mutex_);
    range_ = n;
    body_ = &body;
    pending_ = workers_ - 1;
    ++generation_;
  }
  wake_.notify_all();

  const auto [begin, end] = chunk(0);
  if (begin < end) {
    try {
      body(begin, end);
    } catch (...) {
      errors_[0] = std::current_exception();
    }
  }
  {
    std::unique_lock lock(mutex_);
    done_.wait(lock, [&] { return pending_ == 0; });
    body_ = nullptr;
  }
  for (const auto& e : errors_) {
    if (e) std::rethrow_exception(e);
  }
}

Vector EvalBatch::output(std::size_t i) const {
  Vector v(static_cast<Eigen::Index>(dim));
  std::copy_n(outputs.begin() + static_cast<std::ptrdiff_t>(i * dim), dim, v.data());
  return v;
}

EvalBatch evaluate_family(const MappingFamily& family, const Vector& x,
                          std::uint64_t power, double alpha, const Vector& anchor,
                          WorkerPool& pool) {
  const std::size_t d = family.dim();
  if (static_cast<std::size_t>(x.size()) != d || static_cast<std::size_t>(anchor.size()) != d) {
    fail(ErrorCode::DimensionMismatch, "evaluate_family: dimension mismatch");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "evaluate_family: alpha outside [0, 1]");
  }
  const std::size_t n = family.size();
  EvalBatch batch;
  batch.dim = d;
  batch.outputs.resize(n * d);
  batch.displacement.resize(n);
  batch.distance2.resize(n);
#ifndef NDEBUG
  batch.write_counts.assign(n, 0);
#endif
  const double beta = 1.0 - alpha;
  const double* xs = x.data();
  const double* as = anchor.data();

  pool.parallel_for(n, [&](std::size_t begin, std::size_t end) {
    std::vector<double> mapped(d);
    for (std::size_t i = begin; i < end; ++i) {
      family.apply(i, power, std::span<const double>(xs, d), mapped);
      double* y = batch.outputs.data() + i * d;
      double disp2 = 0.0;
      double dist2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        y[k] = alpha * as[k] + beta * mapped[k];
        const double dm = mapped[k] - xs[k];
        const double dy = y[k] - xs[k];
        disp2 += dm * dm;
        dist2 += dy * dy;
      }
      batch.displacement[i] = std::sqrt(disp2);
      batch.distance2[i] = dist2;
#ifndef NDEBUG
      ++batch.write_counts[i];
#endif
    }
  });
#ifndef NDEBUG
  for (std::uint32_t c : batch.write_counts) assert(c == 1);
#endif
  return batch;
}

EvalBatch evaluate_family(const MappingFamily& family, const Vector& x,
                          std::uint64_t power, double alpha, const Vector& anchor,
                          std::size_t workers) {
  WorkerPool pool(std::min(std::max<std::size_t>(workers, 1), family.size()));
  return evaluate_family(family, x, power, alpha, anchor, pool);
}

}  // namespace hybridproj
