#pragma once

#include <cstddef>
#include <functional>
#include <future>
#include <vector>

namespace dsol {

// Worker cap: DSOL_THREADS if set (>= 1), else the hardware concurrency.
std::size_t thread_budget();

// Runs the jobs in batches of at most thread_budget() and returns results in order.
// An exception from a job propagates after the running batch has finished.
template <class T>
std::vector<T> run_parallel(const std::vector<std::function<T()>>& jobs) {
  std::vector<T> out;
  out.reserve(jobs.size());
  const std::size_t cap = thread_budget();
  if (cap <= 1 || jobs.size() <= 1) {
    for (const auto& j : jobs) out.push_back(j());
    return out;
  }
  for (std::size_t start = 0; start < jobs.size(); start += cap) {
    const std::size_t stop = std::min(jobs.size(), start + cap);
    std::vector<std::future<T>> batch;
    for (std::size_t i = start; i < stop; ++i) batch.push_back(std::async(std::launch::async, jobs[i]));
    for (auto& f : batch) f.wait();
    for (auto& f : batch) out.push_back(f.get());
  }
  return out;
}

}  // namespace dsol
