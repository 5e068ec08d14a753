#include "sinevid/random.hpp"

#include <cmath>
#include <numbers>

namespace sinevid {

Rng::Rng(std::initializer_list<std::uint64_t> keys)
{
    std::vector<std::uint32_t> words;
    words.reserve(keys.size() * 2);
    for (auto k : keys) {
        words.push_back(static_cast<std::uint32_t>(k));
        words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
}

double Rng::uniform()
{
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::index(std::uint64_t n)
{
    const std::uint64_t limit = (~std::uint64_t{0} / n) * n;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

double Rng::normal()
{
    // Box-Muller, one value per call to keep the stream position simple.
    double u1 = uniform();
    while (u1 <= 0.0)
        u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<std::uint32_t> Rng::sample_without_replacement(std::uint32_t n, std::uint32_t count)
{
    std::vector<std::uint32_t> pool(n);
    for (std::uint32_t i = 0; i < n; ++i)
        pool[i] = i;
    for (std::uint32_t i = 0; i < count && i < n; ++i) {
        const auto j = i + static_cast<std::uint32_t>(index(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count < n ? count : n);
    return pool;
}

} // namespace sinevid
