#pragma once

namespace crowdnav {

// Worker cap for parallel regions: min(omp_get_max_threads(),
// CROWDNAV_THREADS) when the environment variable is set and positive.
int worker_threads();

}  // namespace crowdnav
