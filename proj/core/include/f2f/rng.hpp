#ifndef F2F_RNG_HPP
#define F2F_RNG_HPP

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <vector>

namespace f2f {

/**
 * SplitMix64 generator with keyed stream derivation.
 *
 * Every sampling site in the toolkit derives its own stream from a root seed
 * plus a small tuple of integer keys (step index, pair index, episode index),
 * so results do not depend on call order or thread scheduling. The bit stream
 * and the derived distributions below are fixed by `version`; changing any of
 * them must bump it.
 *
 * The standard library distributions are not used because their output is
 * implementation-defined.
 */
class Rng {
public:
    static constexpr int version = 1;

    explicit Rng(std::uint64_t seed) : state_(seed) {}

    /// Stream keyed by (seed, keys...). Distinct key tuples give independent streams.
    static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
        std::uint64_t h = mix(seed ^ 0x6a09e667f3bcc909ULL);
        for (auto k : keys) {
            h = mix(h ^ mix(k + 0x9e3779b97f4a7c15ULL));
        }
        return Rng(h);
    }

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    /// Uniform integer in [0, n). Unbiased (rejection on the short tail).
    std::size_t uniform_index(std::size_t n) {
        const auto bound = static_cast<std::uint64_t>(n);
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) {
                return static_cast<std::size_t>(r % bound);
            }
        }
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller (one draw per call, the sine branch is discarded).
    double normal();

    /// First `k` entries of a seeded Fisher-Yates shuffle of [0, n).
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
        std::vector<std::size_t> pool(n);
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + uniform_index(n - i);
            std::swap(pool[i], pool[j]);
        }
        pool.resize(k);
        return pool;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace f2f

#endif  // F2F_RNG_HPP
