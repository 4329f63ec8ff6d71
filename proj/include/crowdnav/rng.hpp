#pragma once

#include <cstdint>
#include <vector>

namespace crowdnav {

// SplitMix64 generator. Self-contained so that shuffles, rotation angles,
// dropout masks and weight init are bit-reproducible across platforms and
// standard library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Derive an independent stream from (seed, stream ids). Used so that
    // e.g. the dropout mask of window w in epoch e does not depend on how
    // many draws earlier windows consumed.
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
        Rng r(a * 0x9E3779B97F4A7C15ull + b);
        std::uint64_t x = r.next_u64();
        Rng r2(x + c);
        return r2.next_u64();
    }

private:
    std::uint64_t state_;
};

}  // namespace crowdnav
