#include "rsmask/masking.h"

#include <stdexcept>

namespace rsmask {

namespace {

Shared<4, 3> to_lanes(const SharedGf16& s) {
    Shared<4, 3> o;
    for (std::size_t i = 0; i < 3; ++i)
        o[i] = W4::broadcast(s[i].bits);
    return o;
}

SharedGf16 from_lanes(const Shared<4, 3>& s) {
    SharedGf16 o;
    for (std::size_t i = 0; i < 3; ++i)
        o[i] = Gf16{std::uint8_t(s[i].lane(0))};
    return o;
}

}  // namespace

SharedByte split(std::uint8_t x, int d, Rng& rng) {
    if (d < 1)
        throw std::invalid_argument("masking order must be at least 1");
    SharedByte s;
    s.shares.resize(std::size_t(d) + 1);
    std::uint8_t acc = x;
    for (int i = 0; i < d; ++i) {
        s.shares[std::size_t(i)] = rng.byte();
        acc ^= s.shares[std::size_t(i)];
    }
    s.shares[std::size_t(d)] = acc;
    return s;
}

std::uint8_t combine(const SharedByte& s) {
    std::uint8_t v = 0;
    for (auto b : s.shares)
        v ^= b;
    return v;
}

Gf16 combine(const SharedGf16& s) { return s[0] ^ s[1] ^ s[2]; }

SharedGf16 split16(Gf16 x, Rng& rng) {
    Gf16 a{std::uint8_t(rng.next() >> 60)}, b{std::uint8_t(rng.next() >> 60)};
    return {a, b, x ^ a ^ b};
}

SharedByte remask(const SharedByte& v, Rng& rng) {
    SharedByte o = v;
    std::uint8_t acc = 0;
    for (std::size_t i = 0; i + 1 < o.shares.size(); ++i) {
        std::uint8_t m = rng.byte();
        o.shares[i] ^= m;
        acc ^= m;
    }
    o.shares.back() ^= acc;
    return o;
}

SharedGf16 masked_gf16_mul(const SharedGf16& a, const SharedGf16& b, Rng& rng) {
    Probe p;
    return from_lanes(masked_mul16<3>(p, "mul", to_lanes(a), to_lanes(b), rng));
}

SharedGf16 masked_mul_single_share(const SharedGf16& a, Gf16 r) {
    Probe p;
    return from_lanes(mul_single<3>(p, "mul", to_lanes(a), W4::broadcast(r.bits)));
}

}  // namespace rsmask
