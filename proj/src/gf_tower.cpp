#include "rsmask/gf_tower.h"

namespace rsmask {

namespace {

constexpr BasisMatrix kPolyToTower{{0x98, 0xF3, 0xF2, 0x48, 0x09, 0x81, 0xA9, 0xFF}};
constexpr BasisMatrix kTowerToPoly{{0x64, 0x78, 0x6E, 0x8C, 0x68, 0x29, 0xDE, 0x60}};
constexpr BasisMatrix kTowerToSbox{{0x58, 0x2D, 0x9E, 0x0B, 0xDC, 0x04, 0x03, 0x24}};
constexpr BasisMatrix kSboxToTower{{0x8C, 0x79, 0x05, 0xEB, 0x12, 0x04, 0x51, 0x53}};
// rows of the FIPS-197 affine map written as columns: image of bit (7 - k)
constexpr BasisMatrix kAffine{{0x8F, 0xC7, 0xE3, 0xF1, 0xF8, 0x7C, 0x3E, 0x1F}};

constexpr std::uint8_t hi2(std::uint8_t x) { return (x >> 1) & 1; }
constexpr std::uint8_t lo2(std::uint8_t x) { return x & 1; }

}  // namespace

Gf4 gf4_mul(Gf4 s, Gf4 t) {
    std::uint8_t a = hi2(s.bits), b = lo2(s.bits), c = hi2(t.bits), d = lo2(t.bits);
    std::uint8_t e = (a ^ b) & (c ^ d);
    std::uint8_t p = (a & c) ^ e;
    std::uint8_t q = (b & d) ^ e;
    return Gf4{std::uint8_t((p << 1) | q)};
}

Gf4 gf4_sq(Gf4 x) { return Gf4{std::uint8_t(((x.bits & 1) << 1) | ((x.bits >> 1) & 1))}; }

Gf4 gf4_scale_n(Gf4 x) {
    std::uint8_t a = hi2(x.bits), b = lo2(x.bits);
    return Gf4{std::uint8_t((b << 1) | (a ^ b))};
}

Gf4 gf4_scale_n2(Gf4 x) {
    std::uint8_t a = hi2(x.bits), b = lo2(x.bits);
    return Gf4{std::uint8_t(((a ^ b) << 1) | a)};
}

Gf16 gf16_mul(Gf16 x, Gf16 y) {
    Gf4 a = x.hi(), b = x.lo(), c = y.hi(), d = y.lo();
    Gf4 e = gf4_scale_n(gf4_mul(a ^ b, c ^ d));
    return Gf16::from(gf4_mul(a, c) ^ e, gf4_mul(b, d) ^ e);
}

Gf16 gf16_sq(Gf16 x) { return gf16_mul(x, x); }

Gf16 gf16_sq_scale_nu(Gf16 x) {
    Gf4 a = x.hi(), b = x.lo();
    return Gf16::from(gf4_sq(a ^ b), gf4_scale_n2(gf4_sq(b)));
}

Gf16 gf16_nu() { return gf16_sq_scale_nu(kGf16Unity); }

Gf16 gf16_inv(Gf16 x) {
    Gf4 a = x.hi(), b = x.lo();
    Gf4 c = gf4_scale_n(gf4_sq(a ^ b));
    Gf4 d = gf4_mul(a, b);
    Gf4 e = gf4_sq(c ^ d);
    return Gf16::from(gf4_mul(e, b), gf4_mul(e, a));
}

TowerElement tower_mul(TowerElement x, TowerElement y) {
    Gf16 a = x.hi, b = x.lo, c = y.hi, d = y.lo;
    Gf16 e = gf16_mul(gf16_nu(), gf16_mul(a ^ b, c ^ d));
    return TowerElement{gf16_mul(a, c) ^ e, gf16_mul(b, d) ^ e};
}

TowerElement gf256_inv_tower(TowerElement x, const NodeRecorder& tap) {
    Gf16 x1 = x.hi, x0 = x.lo;
    Gf16 sq = gf16_sq_scale_nu(x1 ^ x0);
    Gf16 prod = gf16_mul(x1, x0);
    Gf16 d = sq ^ prod;
    Gf16 y = gf16_inv(d);
    Gf16 z1 = gf16_mul(x0, y);
    Gf16 z0 = gf16_mul(x1, y);
    if (tap) {
        tap("inv.sq", sq.bits);
        tap("inv.mul_x", prod.bits);
        tap("inv.d", d.bits);
        tap("inv.y", y.bits);
        tap("inv.mul_z1", z1.bits);
        tap("inv.mul_z0", z0.bits);
    }
    return TowerElement{z1, z0};
}

BasisMatrix BasisMatrix::compose(const BasisMatrix& inner) const {
    BasisMatrix out;
    for (int bit = 0; bit < 8; ++bit)
        out.columns[std::size_t(7 - bit)] = apply(inner.image_of_bit(bit));
    return out;
}

bool BasisMatrix::is_identity() const {
    for (int bit = 0; bit < 8; ++bit)
        if (image_of_bit(bit) != (1u << bit))
            return false;
    return true;
}

const BasisMatrix& poly_to_tower() { return kPolyToTower; }
const BasisMatrix& tower_to_poly() { return kTowerToPoly; }
const BasisMatrix& sbox_output_map() { return kTowerToSbox; }
const BasisMatrix& sbox_output_map_inverse() { return kSboxToTower; }
const BasisMatrix& aes_affine_linear() { return kAffine; }

TowerElement to_tower(std::uint8_t b) { return TowerElement::from_byte(kPolyToTower.apply(b)); }
std::uint8_t from_tower(TowerElement e) { return kTowerToPoly.apply(e.byte()); }

std::uint8_t gf256_mul_poly(std::uint8_t a, std::uint8_t b) {
    std::uint8_t r = 0;
    while (b) {
        if (b & 1)
            r ^= a;
        a = std::uint8_t((a << 1) ^ ((a & 0x80) ? 0x1B : 0));
        b >>= 1;
    }
    return r;
}

namespace {

struct Tables {
    std::array<std::uint8_t, 256> fwd{};
    std::array<std::uint8_t, 256> inv{};
    Tables() {
        for (int x = 0; x < 256; ++x) {
            auto t = gf256_inv_tower(to_tower(std::uint8_t(x)));
            std::uint8_t y = std::uint8_t(kTowerToSbox.apply(t.byte()) ^ kAffineConstant);
            fwd[std::size_t(x)] = y;
            inv[y] = std::uint8_t(x);
        }
    }
};

const Tables& tables() {
    static const Tables t;
    return t;
}

}  // namespace

std::uint8_t sbox(std::uint8_t x) { return tables().fwd[x]; }
std::uint8_t inv_sbox(std::uint8_t y) { return tables().inv[y]; }
const std::array<std::uint8_t, 256>& sbox_table() { return tables().fwd; }
const std::array<std::uint8_t, 256>& inv_sbox_table() { return tables().inv; }

}  // namespace rsmask
