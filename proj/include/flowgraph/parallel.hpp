#pragma once

#include <cstddef>
#include <functional>

namespace flowgraph {

/// Number of worker threads used by library-internal parallel loops.
/// 0 selects the hardware concurrency.
void set_worker_count(unsigned workers);
unsigned worker_count();

/// Runs body(i) for i in [0, n). Work is split across worker threads unless
/// the call is already nested inside another parallel_for, in which case it
/// runs inline. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace flowgraph
