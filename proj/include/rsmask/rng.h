#pragma once

// Counter-based generator. A stream is named by a master seed and a path of
// integers (batch, consumer, instance...), so workers never share state and
// the value of any draw depends only on its coordinates.

#include "rsmask/lanes.h"

#include <cstdint>
#include <initializer_list>

namespace rsmask {

constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// consumer ids
enum class Stream : std::uint64_t {
    kPlaintext = 1,
    kKey = 2,
    kKeySchedule = 3,
    kMaskInit = 4,
    kSbox = 5,
    kFault = 6,
    kNoise = 7,
    kInfection = 8,
    kPartition = 9,
    kStandalone = 10,
    kColumn = 11,
};

class Rng {
public:
    Rng() = default;
    Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
        key_ = splitmix64(seed);
        for (auto p : path)
            key_ = splitmix64(key_ ^ splitmix64(p + 0x632BE59BD9B4E019ull));
    }
    /// Every draw is zero: the degenerate "no randomness" source.
    static Rng zero() {
        Rng r;
        r.zero_ = true;
        return r;
    }

    std::uint64_t next() {
        if (zero_)
            return 0;
        return splitmix64(key_ + 0x9E3779B97F4A7C15ull * ++counter_);
    }
    std::uint8_t byte() { return std::uint8_t(next() >> 56); }
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

    template <int N>
    Word<N> word() {
        Word<N> w;
        for (auto& b : w.bit)
            b = next();
        return w;
    }

    // UniformRandomBitGenerator, for std distributions
    using result_type = std::uint64_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type(0); }
    result_type operator()() { return next(); }

    std::uint64_t counter() const { return counter_; }
    bool is_zero() const { return zero_; }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    bool zero_ = false;
};

}  // namespace rsmask
