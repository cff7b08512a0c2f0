#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace synthir {

// splitmix64 finalizer; used to derive independent substream seeds.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Per-purpose substream of a root seed: the same root seed gives each
// pipeline stage an independent, reproducible generator.
inline uint64_t stream_seed(uint64_t root, std::string_view purpose) {
    return mix64(root ^ fnv1a64(purpose));
}

// mt19937_64 with a bias-free bounded draw. uniform_int_distribution output
// is implementation-defined, so bounded draws are done by rejection here to
// keep sampled outputs identical across standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next() { return engine_(); }

    // Uniform in [0, n).
    uint64_t below(uint64_t n) {
        if (n == 0) return 0;
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    // Uniform in [0, 1).
    double unit() {
        return (engine_() >> 11) * 0x1.0p-53;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace synthir
