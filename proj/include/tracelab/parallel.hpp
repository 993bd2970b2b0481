#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tracelab {

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index is
/// processed exactly once; results must be written to per-index slots so
/// that the caller can reduce them in a fixed order. The first exception
/// thrown by any worker is rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// Neumaier compensated accumulator.
template <typename T>
class CompensatedSum {
public:
  void add(const T& x) {
    const T t = sum_ + x;
    comp_ += correction(sum_, x, t);
    sum_ = t;
  }
  T value() const { return sum_ + comp_; }

private:
  static double correction(double s, double x, double t) {
    return std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
  }
  template <typename C>
  static C correction(const C& s, const C& x, const C& t) {
    return C(correction(s.real(), x.real(), t.real()), correction(s.imag(), x.imag(), t.imag()));
  }
  T sum_{};
  T comp_{};
};

}  // namespace tracelab
