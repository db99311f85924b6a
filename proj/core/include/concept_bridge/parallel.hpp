#pragma once

#include <cstddef>
#include <functional>

namespace concept_bridge {

/// Worker threads used by the blocked kernels. 0 restores the default
/// (std::thread::hardware_concurrency()).
void set_thread_count(unsigned count);
unsigned thread_count();

/// Runs task(i) for every i in [0, n_tasks) on up to thread_count() workers.
/// Tasks must write disjoint outputs; the first exception is rethrown.
void parallel_for(std::size_t n_tasks, const std::function<void(std::size_t)>& task);

}  // namespace concept_bridge
