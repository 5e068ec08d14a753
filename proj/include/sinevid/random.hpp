#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace sinevid {

// Seeded generator with bit-reproducible draws. Streams are keyed by a list
// of integers (seed, iteration, purpose, ...) through std::seed_seq, whose
// mixing is fixed by the standard, so the same keys give the same stream on
// every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : Rng({seed}) {}
    Rng(std::initializer_list<std::uint64_t> keys);

    std::uint64_t next() { return engine_(); }
    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [0, n), rejection sampled; n > 0.
    std::uint64_t index(std::uint64_t n);
    double normal();

    // First `count` entries of a uniformly random permutation of [0, n).
    std::vector<std::uint32_t> sample_without_replacement(std::uint32_t n, std::uint32_t count);
    std::vector<std::uint32_t> permutation(std::uint32_t n) { return sample_without_replacement(n, n); }

private:
    std::mt19937_64 engine_;
};

// Tags for keyed streams.
enum class Stream : std::uint64_t {
    init = 1,
    frames = 2,
    coords = 3,
    shuffle = 4,
    synth = 5,
    corpus = 6,
    head = 7,
    dropout = 8,
    split = 9,
};

inline std::uint64_t key(Stream s) { return static_cast<std::uint64_t>(s); }

} // namespace sinevid
