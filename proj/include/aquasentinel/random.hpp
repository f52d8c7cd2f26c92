#pragma once

// Seeded, counter-addressable randomness. Everything downstream of a root
// seed must be reproducible, so all draws go through splitmix64 rather than
// the implementation-defined std:: distributions.

#include <cmath>
#include <cstdint>
#include <string_view>

namespace aqua {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Deterministic combine of two seeds into a new stream seed.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
    return splitmix64(s);
}

inline std::uint64_t hash_str(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a 64
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in (0, 1).
    double next_unit() {
        double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        return u <= 0.0 ? 0x1.0p-53 : u;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // Inclusive integer range.
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    double next_gaussian() {
        double u1 = next_unit();
        double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::uint64_t state_;
};

// Counter-based gaussian: pure function of (seed, counter), so demand noise
// at (node, timestep) does not depend on evaluation order.
inline double gaussian_at(std::uint64_t seed, std::uint64_t counter) {
    Rng rng(mix_seed(seed, counter));
    return rng.next_gaussian();
}

}  // namespace aqua
