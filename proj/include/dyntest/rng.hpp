#ifndef DYNTEST_RNG_HPP
#define DYNTEST_RNG_HPP

#include <array>
#include <cstdint>
#include <vector>

namespace dyntest {

// Deterministic PRNG stream (xoshiro256++ seeded via splitmix64).
//
// std::mt19937 engines are portable but the standard distributions are not;
// every draw here is implemented by hand so that a given seed produces the
// same sequence on every platform and under any parallel schedule.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) noexcept {
        std::uint64_t x = seed;
        for (auto& word : state_) word = split_mix(x);
    }

    // Stream for one sample path. Distinct (master_seed, path_index, label)
    // triples give statistically independent streams; the label separates
    // the spread/initialization draws from policy-internal draws so that
    // paths with equal seeds share initialization across policies.
    static RngStream for_path(std::uint64_t master_seed, std::uint64_t path_index,
                              std::uint64_t label) noexcept {
        std::uint64_t x = master_seed;
        std::uint64_t a = split_mix(x);
        x = a ^ (0x9e3779b97f4a7c15ULL * (path_index + 1));
        std::uint64_t b = split_mix(x);
        x = b ^ (0xbf58476d1ce4e5b9ULL * (label + 1));
        return RngStream(split_mix(x));
    }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [0, 1), 53 random bits.
    double next_double() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) noexcept {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return next_double() < p;
    }

    // Unbiased uniform integer in [0, bound), bound >= 1 (Lemire's method).
    std::uint64_t uniform_below(std::uint64_t bound) noexcept {
        std::uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Fisher-Yates on the first k slots; items[0..k) is then a uniform
    // k-subset of the input in uniform order.
    template <typename T>
    void shuffle_prefix(std::vector<T>& items, std::size_t k) noexcept {
        const std::size_t n = items.size();
        if (k > n) k = n;
        for (std::size_t i = 0; i + 1 < n && i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(uniform_below(n - i));
            std::swap(items[i], items[j]);
        }
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t v, int k) noexcept {
        return (v << k) | (v >> (64 - k));
    }

    // splitmix64: advances x and returns a mixed output word.
    static std::uint64_t split_mix(std::uint64_t& x) noexcept {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::array<std::uint64_t, 4> state_{};
};

// Stream labels used by the harness.
inline constexpr std::uint64_t kSpreadStream = 0;  // initialization + infection spread
inline constexpr std::uint64_t kPolicyStream = 1;  // test-selection draws

}  // namespace dyntest

#endif
