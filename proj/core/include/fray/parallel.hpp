#pragma once

#include <cstddef>
#include <functional>

namespace fray {

/// Number of worker threads (hardware concurrency, overridable with the
/// FRAY_THREADS environment variable).
int worker_count();

/// Runs fn(begin, end) over disjoint index ranges on worker threads and
/// joins. Chunk boundaries depend only on n, so writes into per-index slots
/// are deterministic regardless of thread count.
void parallel_ranges(size_t n, const std::function<void(size_t, size_t)>& fn);

}  // namespace fray
