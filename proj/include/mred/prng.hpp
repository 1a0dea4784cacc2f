#pragma once

#include <cstdint>
#include <random>

namespace mred {

// Derives independent stream seeds from one run seed (splitmix64).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic uniform source. The engine is std::mt19937_64 (sequence
// fixed by the standard) and the bits->double mapping is pinned here
// instead of going through std::uniform_real_distribution, whose output
// differs between standard libraries. Draw order defines simulation
// semantics, so every consumer documents how many values it takes.
class Prng {
public:
    explicit Prng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1), 53-bit resolution
    double next_unit() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // uniform in (0, 1]
    double next_unit_positive() {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    bool next_bernoulli(double p) { return next_unit() < p; }

private:
    std::mt19937_64 engine_;
};

}  // namespace mred
