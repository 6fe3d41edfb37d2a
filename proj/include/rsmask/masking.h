#pragma once

// Boolean masking. The lane-level templates are what the datapaths use; the
// scalar SharedByte / SharedGf16 API at the bottom wraps them for single
// evaluations and tests.
//
// Three-share product (each output share skips one input share index):
//   o0 = a1b1 ^ a1b2 ^ a2b1
//   o1 = a2b2 ^ a0b2 ^ a2b0
//   o2 = a0b0 ^ a0b1 ^ a1b0
// Remasking is ring style: (m0, m1, m0 ^ m1).

#include "rsmask/gf_tower.h"
#include "rsmask/lanes.h"
#include "rsmask/probe.h"
#include "rsmask/rng.h"

#include <array>
#include <cstdint>
#include <vector>

namespace rsmask {

namespace detail {

inline W2 fmul(const W2& a, const W2& b) { return mul(a, b); }
inline Word<1> fmul(const Word<1>& a, const Word<1>& b) { return Word<1>{{a.bit[0] & b.bit[0]}}; }

}  // namespace detail

/// Non-complete shared product, no fresh randomness.
template <int N, std::size_t S>
Shared<N, S> nc_product(const Shared<N, S>& a, const Shared<N, S>& b) {
    static_assert(S == 1 || S == 3, "one or three shares");
    using detail::fmul;
    if constexpr (S == 1) {
        return {fmul(a[0], b[0])};
    } else {
        return {fmul(a[1], b[1]) ^ fmul(a[1], b[2]) ^ fmul(a[2], b[1]),
                fmul(a[2], b[2]) ^ fmul(a[0], b[2]) ^ fmul(a[2], b[0]),
                fmul(a[0], b[0]) ^ fmul(a[0], b[1]) ^ fmul(a[1], b[0])};
    }
}

template <int N, std::size_t S>
void remask(Shared<N, S>& v, Rng& rng) {
    if constexpr (S == 3) {
        Word<N> m0 = rng.word<N>(), m1 = rng.word<N>();
        v[0] ^= m0;
        v[1] ^= m1;
        v[2] ^= m0 ^ m1;
    } else {
        (void)v;
        (void)rng;
    }
}

template <int N, std::size_t S>
Word<N> combine(const Shared<N, S>& v) {
    Word<N> w = v[0];
    for (std::size_t i = 1; i < S; ++i)
        w ^= v[i];
    return w;
}

template <std::size_t S>
Shared<2, S> shares_hi(const Shared<4, S>& v) {
    Shared<2, S> o;
    for (std::size_t i = 0; i < S; ++i)
        o[i] = hi(v[i]);
    return o;
}
template <std::size_t S>
Shared<2, S> shares_lo(const Shared<4, S>& v) {
    Shared<2, S> o;
    for (std::size_t i = 0; i < S; ++i)
        o[i] = lo(v[i]);
    return o;
}
template <std::size_t S>
Shared<4, S> shares_hi(const Shared<8, S>& v) {
    Shared<4, S> o;
    for (std::size_t i = 0; i < S; ++i)
        o[i] = hi(v[i]);
    return o;
}
template <std::size_t S>
Shared<4, S> shares_lo(const Shared<8, S>& v) {
    Shared<4, S> o;
    for (std::size_t i = 0; i < S; ++i)
        o[i] = lo(v[i]);
    return o;
}
template <std::size_t S>
Shared<8, S> shares_join(const Shared<4, S>& h, const Shared<4, S>& l) {
    Shared<8, S> o;
    for (std::size_t i = 0; i < S; ++i)
        o[i] = join(h[i], l[i]);
    return o;
}
template <int N, std::size_t S, class F>
Shared<N, S> per_share(const Shared<N, S>& v, F f) {
    Shared<N, S> o;
    for (std::size_t i = 0; i < S; ++i)
        o[i] = f(v[i]);
    return o;
}
template <int N, std::size_t S>
Shared<N, S> operator^(Shared<N, S> a, const Shared<N, S>& b) {
    for (std::size_t i = 0; i < S; ++i)
        a[i] ^= b[i];
    return a;
}

/// Masked GF(2^2) product with operand and product wires, remasked.
template <std::size_t S>
Shared<2, S> masked_mul4(Probe& p, std::string_view name, Shared<2, S> a, Shared<2, S> b, Rng& rng) {
    Scope sc(p, name);
    p.wire(a, "a");
    p.wire(b, "b");
    auto q = nc_product(a, b);
    p.wire(q, "q");
    remask(q, rng);
    return q;
}

/// Masked 1-bit AND, same structure as masked_mul4.
template <std::size_t S>
Shared<1, S> masked_and(Probe& p, std::string_view name, Shared<1, S> a, Shared<1, S> b, Rng& rng) {
    Scope sc(p, name);
    p.wire(a, "a");
    p.wire(b, "b");
    auto q = nc_product(a, b);
    p.wire(q, "q");
    remask(q, rng);
    return q;
}

namespace detail {

template <std::size_t S>
Shared<2, S> sub_product(Probe& p, std::string_view name, Shared<2, S> a, Shared<2, S> b) {
    Scope sc(p, name);
    p.wire(a, "a");
    p.wire(b, "b");
    auto q = nc_product(a, b);
    p.wire(q, "q");
    return q;
}

template <std::size_t S>
Shared<2, S> sub_single(Probe& p, std::string_view name, Shared<2, S> a, W2 r) {
    Scope sc(p, name);
    p.wire(a, "a");
    p.wire(r, "b");
    Shared<2, S> q;
    for (std::size_t i = 0; i < S; ++i)
        q[i] = mul(a[i], r);
    p.wire(q, "q");
    return q;
}

template <std::size_t S>
Shared<4, S> glue(const Shared<2, S>& hh, const Shared<2, S>& ll, const Shared<2, S>& mm) {
    Shared<4, S> o;
    for (std::size_t i = 0; i < S; ++i) {
        W2 e = scale_n(mm[i]);
        o[i] = join(hh[i] ^ e, ll[i] ^ e);
    }
    return o;
}

}  // namespace detail

/// Masked GF(2^4) product: three GF(2^2) sub-multipliers hh, ll, mm, each
/// exposing operand wires a/b and product wire q per share; output remasked.
template <std::size_t S>
Shared<4, S> masked_mul16(Probe& p, std::string_view name, const Shared<4, S>& a, const Shared<4, S>& b, Rng& rng) {
    Scope sc(p, name);
    auto ah = shares_hi(a), al = shares_lo(a), bh = shares_hi(b), bl = shares_lo(b);
    auto hh = detail::sub_product<S>(p, "hh", ah, bh);
    auto ll = detail::sub_product<S>(p, "ll", al, bl);
    auto mm = detail::sub_product<S>(p, "mm", ah ^ al, bh ^ bl);
    auto o = detail::glue<S>(hh, ll, mm);
    remask(o, rng);
    return o;
}

/// Share-wise product with a single-share (unshared) value r.
template <std::size_t S>
Shared<4, S> mul_single(Probe& p, std::string_view name, const Shared<4, S>& a, const W4& r) {
    Scope sc(p, name);
    auto ah = shares_hi(a), al = shares_lo(a);
    W2 rh = hi(r), rl = lo(r);
    auto hh = detail::sub_single<S>(p, "hh", ah, rh);
    auto ll = detail::sub_single<S>(p, "ll", al, rl);
    auto mm = detail::sub_single<S>(p, "mm", ah ^ al, rh ^ rl);
    return detail::glue<S>(hh, ll, mm);
}

// ---- scalar API ----------------------------------------------------------

struct SharedByte {
    std::vector<std::uint8_t> shares;
    int order() const { return int(shares.size()) - 1; }
};

using SharedGf16 = std::array<Gf16, 3>;

/// d random shares followed by the correcting share.
SharedByte split(std::uint8_t x, int d, Rng& rng);
std::uint8_t combine(const SharedByte& s);
Gf16 combine(const SharedGf16& s);
SharedGf16 split16(Gf16 x, Rng& rng);
/// XOR with a fresh zero-sum vector.
SharedByte remask(const SharedByte& v, Rng& rng);

SharedGf16 masked_gf16_mul(const SharedGf16& a, const SharedGf16& b, Rng& rng);
SharedGf16 masked_mul_single_share(const SharedGf16& a, Gf16 r);

}  // namespace rsmask
