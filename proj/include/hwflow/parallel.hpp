// Replicate-parallel execution with results addressed by replicate index.
// Statistics reduced from the index-ordered results are bit-identical for any
// worker count.
#pragma once

#include <thread>
#include <vector>

namespace hwflow {

inline int default_jobs() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// fn(rep) is called once for every rep in [0, replicates); each call must
// write only to its own slot of any shared output.
template <typename Fn>
inline void parallel_replicates(int replicates, int jobs, Fn&& fn) {
  if (jobs <= 1 || replicates <= 1) {
    for (int r = 0; r < replicates; ++r) fn(r);
    return;
  }
  const int workers = std::min(jobs, replicates);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([w, workers, replicates, &fn] {
      for (int r = w; r < replicates; r += workers) fn(r);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace hwflow
