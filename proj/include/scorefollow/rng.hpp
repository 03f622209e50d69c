#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace scorefollow {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
    return splitmix64(splitmix64(a) ^ splitmix64(b ^ 0x1234567890abcdefull) ^ (c * 0x2545f4914f6cdd1dull));
}

// FNV-1a; used instead of std::hash so seeded outputs are platform-stable.
inline std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

// Deterministic random stream. The draw helpers are implemented by hand so
// that output bytes do not depend on the standard library's distribution
// implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform real in [lo, hi).
    double uniform(double lo, double hi) {
        double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }

    // Uniform integer in [lo, hi], inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next_u64() % span);
    }

    bool bernoulli(double p) { return uniform(0.0, 1.0) < p; }

    Rng fork(std::uint64_t salt) { return Rng(splitmix64(next_u64() ^ splitmix64(salt))); }

private:
    std::mt19937_64 gen_;
};

}  // namespace scorefollow
