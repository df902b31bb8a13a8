#pragma once

#include <cstddef>
#include <functional>

namespace golf {

/// Upper bound on worker threads used by batch operations. 0 means
/// "use std::thread::hardware_concurrency()".
void set_thread_count(std::size_t n);
std::size_t thread_count();

/// Runs body(i) for i in [0, n). Work is split into contiguous chunks, one per
/// worker; each index is visited by exactly one worker. The first exception
/// thrown by any worker is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace golf
