#pragma once

// Bitsliced words: 64 independent evaluations ride in the bit positions of
// one uint64_t. Word<N>::bit[i] holds bit i of an N-bit value for all lanes.

#include "rsmask/gf_tower.h"

#include <array>
#include <bit>
#include <cstdint>

namespace rsmask {

using Lanes = std::uint64_t;
inline constexpr int kLanes = 64;
inline constexpr Lanes kAllLanes = ~Lanes{0};

template <int N>
struct Word {
    std::array<Lanes, N> bit{};

    static constexpr Word broadcast(unsigned v) {
        Word w;
        for (int i = 0; i < N; ++i)
            w.bit[std::size_t(i)] = ((v >> i) & 1) ? kAllLanes : 0;
        return w;
    }
    constexpr unsigned lane(int l) const {
        unsigned v = 0;
        for (int i = 0; i < N; ++i)
            v |= unsigned((bit[std::size_t(i)] >> l) & 1) << i;
        return v;
    }
    constexpr void set_lane(int l, unsigned v) {
        for (int i = 0; i < N; ++i) {
            Lanes m = Lanes{1} << l;
            bit[std::size_t(i)] = ((v >> i) & 1) ? (bit[std::size_t(i)] | m) : (bit[std::size_t(i)] & ~m);
        }
    }
    constexpr Word& operator^=(const Word& o) {
        for (int i = 0; i < N; ++i)
            bit[std::size_t(i)] ^= o.bit[std::size_t(i)];
        return *this;
    }
    friend constexpr Word operator^(Word a, const Word& b) { return a ^= b; }
    friend constexpr bool operator==(const Word&, const Word&) = default;
};

using W2 = Word<2>;
using W4 = Word<4>;
using W8 = Word<8>;

template <int N, std::size_t S>
using Shared = std::array<Word<N>, S>;

// Sub-field views. A W4 is (hi: bits 3..2, lo: bits 1..0).
inline W2 hi(const W4& x) { return W2{{x.bit[2], x.bit[3]}}; }
inline W2 lo(const W4& x) { return W2{{x.bit[0], x.bit[1]}}; }
inline W4 join(const W2& h, const W2& l) { return W4{{l.bit[0], l.bit[1], h.bit[0], h.bit[1]}}; }
inline W4 hi(const W8& x) { return W4{{x.bit[4], x.bit[5], x.bit[6], x.bit[7]}}; }
inline W4 lo(const W8& x) { return W4{{x.bit[0], x.bit[1], x.bit[2], x.bit[3]}}; }
inline W8 join(const W4& h, const W4& l) {
    return W8{{l.bit[0], l.bit[1], l.bit[2], l.bit[3], h.bit[0], h.bit[1], h.bit[2], h.bit[3]}};
}

// GF(2^2), normal basis, lane-parallel
inline W2 mul(const W2& s, const W2& t) {
    Lanes a = s.bit[1], b = s.bit[0], c = t.bit[1], d = t.bit[0];
    Lanes e = (a ^ b) & (c ^ d);
    return W2{{(b & d) ^ e, (a & c) ^ e}};
}
inline W2 sq(const W2& x) { return W2{{x.bit[1], x.bit[0]}}; }
inline W2 scale_n(const W2& x) { return W2{{x.bit[1] ^ x.bit[0], x.bit[0]}}; }
inline W2 scale_n2(const W2& x) { return W2{{x.bit[1], x.bit[1] ^ x.bit[0]}}; }

// GF(2^4)
inline W4 mul(const W4& x, const W4& y) {
    W2 a = hi(x), b = lo(x), c = hi(y), d = lo(y);
    W2 e = scale_n(mul(a ^ b, c ^ d));
    return join(mul(a, c) ^ e, mul(b, d) ^ e);
}
inline W4 sq_scale_nu(const W4& x) {
    W2 a = hi(x), b = lo(x);
    return join(sq(a ^ b), scale_n2(sq(b)));
}
inline W4 inv(const W4& x) {
    W2 a = hi(x), b = lo(x);
    W2 c = scale_n(sq(a ^ b));
    W2 e = sq(c ^ mul(a, b));
    return join(mul(e, b), mul(e, a));
}

/// y = M x for a byte-wide basis matrix.
inline W8 apply(const BasisMatrix& m, const W8& x) {
    W8 y;
    for (int i = 0; i < 8; ++i) {
        unsigned img = m.image_of_bit(i);
        for (int j = 0; j < 8; ++j)
            if ((img >> j) & 1)
                y.bit[std::size_t(j)] ^= x.bit[std::size_t(i)];
    }
    return y;
}

template <int N>
int popcount_lane_sum(const Word<N>& w) {
    int s = 0;
    for (auto b : w.bit)
        s += std::popcount(b);
    return s;
}

/// Transpose 64 bytes into a W8 (lane l <- v[l]).
inline W8 pack(const std::array<std::uint8_t, kLanes>& v) {
    W8 w;
    for (int l = 0; l < kLanes; ++l)
        for (int i = 0; i < 8; ++i)
            w.bit[std::size_t(i)] |= Lanes((v[std::size_t(l)] >> i) & 1) << l;
    return w;
}
inline std::array<std::uint8_t, kLanes> unpack(const W8& w) {
    std::array<std::uint8_t, kLanes> v{};
    for (int l = 0; l < kLanes; ++l)
        v[std::size_t(l)] = std::uint8_t(w.lane(l));
    return v;
}

}  // namespace rsmask
