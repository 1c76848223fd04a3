#pragma once

#include <cstddef>
#include <functional>

namespace mvuq {

/// Global worker cap. Defaults to MVUQ_JOBS when set, else hardware concurrency.
std::size_t max_jobs();
void set_max_jobs(std::size_t jobs);

/// Runs body(i) for i in [0, n) on up to max_jobs() threads. Each index is
/// visited exactly once; results must be written to per-index slots so the
/// outcome does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace mvuq
