#pragma once

#include <cstddef>
#include <functional>

namespace tilln {

/// Runs body(i) for i in [0, count) on up to `workers` threads. Work units
/// are assigned round-robin so results never depend on scheduling; the
/// first exception thrown by any unit is rethrown after all threads join.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& body);

}  // namespace tilln
