#pragma once

// Shared numeric utilities: compensated summation, integer-safe floors for
// grid counts, and a deterministic parallel fill helper.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace volrank {

// Neumaier (improved Kahan) compensated accumulator.  Sums here run over up
// to ~10^5 same-sign terms spanning several orders of magnitude; the
// compensation keeps results independent of chunking, which the deterministic
// parallel aggregation relies on.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// floor(x) with a tiny relative snap toward the nearest integer.  Grid counts
// like T / delta or T / (3 d u_n) are often exact integers contaminated by
// the last bit of the division (1 / 1e-4 = 9999.999...); a plain floor would
// then drop a full grid point.  The snap width (1e-9 relative) is far below
// any spacing distinguishable at double precision in these ratios.
inline std::int64_t floor_snap(double x) {
  if (!std::isfinite(x)) throw std::domain_error("floor_snap: non-finite");
  const double nudged = x + 1e-9 * std::max(1.0, std::abs(x));
  return static_cast<std::int64_t>(std::floor(nudged));
}

// Number of worker threads: explicit request, else the VOLRANK_WORKERS
// environment variable, else the hardware concurrency.
inline int resolve_workers(int requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("VOLRANK_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs body(i) for i in [0, n) on `workers` threads.  Work items are handed
// out through a shared counter; each item writes only to its own slot, so
// results are identical for any worker count.  The first exception thrown by
// any item is rethrown on the calling thread after all workers join.
inline void parallel_for(std::int64_t n, int workers,
                         const std::function<void(std::int64_t)>& body) {
  workers = std::max(1, workers);
  if (workers == 1 || n <= 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n || failed.load(std::memory_order_relaxed)) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int spawned = static_cast<int>(
      std::min<std::int64_t>(workers, std::max<std::int64_t>(n, 1)));
  pool.reserve(spawned);
  for (int w = 0; w < spawned; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace volrank
