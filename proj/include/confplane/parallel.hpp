#pragma once

#include <cstddef>
#include <functional>

namespace confplane {

/// Run fn(i) for i in [0, count), split across hardware threads when that is
/// worth doing. Results must be written to disjoint, preallocated slots so
/// the outcome is independent of scheduling. If several iterations throw,
/// the exception from the lowest index is rethrown (determinism).
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

} // namespace confplane
