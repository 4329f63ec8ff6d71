#include "crowdnav/threading.hpp"

#include <cstdlib>
#include <string>

#include <omp.h>

namespace crowdnav {

int worker_threads() {
    int n = omp_get_max_threads();
    if (const char* env = std::getenv("CROWDNAV_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap > 0) n = std::min(n, cap);
        } catch (...) {
            // Unparseable cap: ignore and keep the OpenMP default.
        }
    }
    return n;
}

}  // namespace crowdnav
