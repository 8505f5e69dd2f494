#ifndef CPCA_PARALLEL_HPP
#define CPCA_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace cpca
{

// Worker count: hardware concurrency, capped by the CPCA_THREADS environment
// variable when it holds a positive integer.
std::size_t default_worker_count();

// Runs task(i) for i in [0, count) on up to `workers` threads. Tasks must
// write only to disjoint outputs; callers combine results in index order so
// the outcome never depends on the worker count. workers == 0 selects
// default_worker_count().
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)> &task);

} // namespace cpca

#endif // CPCA_PARALLEL_HPP
