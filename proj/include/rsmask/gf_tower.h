#pragma once

// Composite-field GF(2^8) arithmetic in the Canright tower
// GF(2^8)/GF(2^4)/GF(2^2), normal basis at every level.
//
// Bit conventions: a Gf4 holds (hi, lo) normal-basis coordinates in bits
// (1, 0); a Gf16 holds a pair of Gf4 in bits (3..2, 1..0); a tower byte
// holds x1 (most significant nibble) and x0 (least significant nibble).
// In this basis the multiplicative unity of every subfield is the all-ones
// vector (3, 15, 0xFF).

#include <array>
#include <cstdint>
#include <functional>
#include <string_view>

namespace rsmask {

struct Gf4 {
    std::uint8_t bits = 0;
    friend constexpr bool operator==(Gf4, Gf4) = default;
    friend constexpr Gf4 operator^(Gf4 a, Gf4 b) { return Gf4{std::uint8_t(a.bits ^ b.bits)}; }
};

struct Gf16 {
    std::uint8_t bits = 0;
    constexpr Gf4 hi() const { return Gf4{std::uint8_t((bits >> 2) & 3)}; }
    constexpr Gf4 lo() const { return Gf4{std::uint8_t(bits & 3)}; }
    static constexpr Gf16 from(Gf4 hi, Gf4 lo) { return Gf16{std::uint8_t((hi.bits << 2) | lo.bits)}; }
    friend constexpr bool operator==(Gf16, Gf16) = default;
    friend constexpr Gf16 operator^(Gf16 a, Gf16 b) { return Gf16{std::uint8_t(a.bits ^ b.bits)}; }
};

/// An element of GF(2^8) in tower coordinates, X = hi || lo.
struct TowerElement {
    Gf16 hi;
    Gf16 lo;
    constexpr std::uint8_t byte() const { return std::uint8_t((hi.bits << 4) | lo.bits); }
    static constexpr TowerElement from_byte(std::uint8_t b) {
        return TowerElement{Gf16{std::uint8_t(b >> 4)}, Gf16{std::uint8_t(b & 15)}};
    }
    friend constexpr bool operator==(TowerElement, TowerElement) = default;
    friend constexpr TowerElement operator^(TowerElement a, TowerElement b) {
        return TowerElement{a.hi ^ b.hi, a.lo ^ b.lo};
    }
};

inline constexpr Gf4 kGf4Unity{3};
inline constexpr Gf16 kGf16Unity{15};
inline constexpr TowerElement kTowerUnity{kGf16Unity, kGf16Unity};

// GF(2^2)
Gf4 gf4_mul(Gf4 s, Gf4 t);
Gf4 gf4_sq(Gf4 a);        // also the inverse in GF(2^2)
Gf4 gf4_scale_n(Gf4 a);   // multiply by N = w^2
Gf4 gf4_scale_n2(Gf4 a);  // multiply by N^2 = w

// GF(2^4)
Gf16 gf16_mul(Gf16 a, Gf16 b);
Gf16 gf16_sq(Gf16 a);
Gf16 gf16_sq_scale_nu(Gf16 a);  // nu * a^2
Gf16 gf16_inv(Gf16 a);          // 0 maps to 0
Gf16 gf16_nu();

/// Receives every internal value of the scalar inverter, keyed by node id.
using NodeRecorder = std::function<void(std::string_view node, unsigned value)>;

// GF(2^8) in tower coordinates
TowerElement tower_mul(TowerElement a, TowerElement b);
TowerElement gf256_inv_tower(TowerElement x, const NodeRecorder& tap = {});

/// 8x8 binary matrix acting on bytes. Column k is the image of input bit
/// (7 - k), which is the layout Canright's tables use.
struct BasisMatrix {
    std::array<std::uint8_t, 8> columns{};

    constexpr std::uint8_t apply(std::uint8_t x) const {
        std::uint8_t y = 0;
        for (int i = 7; i >= 0; --i) {
            if (x & 1)
                y ^= columns[std::size_t(i)];
            x >>= 1;
        }
        return y;
    }
    /// Image of input bit `bit` (bit 0 = least significant).
    constexpr std::uint8_t image_of_bit(int bit) const { return columns[std::size_t(7 - bit)]; }
    BasisMatrix compose(const BasisMatrix& inner) const;  // this * inner
    bool is_identity() const;
};

/// Polynomial (AES) basis to tower normal basis.
const BasisMatrix& poly_to_tower();
/// Tower normal basis back to polynomial basis.
const BasisMatrix& tower_to_poly();
/// Tower basis to S-box output: the AES affine linear part composed with
/// tower_to_poly. The S-box is sbox_output_map().apply(inv) ^ 0x63.
const BasisMatrix& sbox_output_map();
/// AES affine linear part alone (polynomial basis).
const BasisMatrix& aes_affine_linear();
/// Inverse of sbox_output_map (polynomial basis to tower).
const BasisMatrix& sbox_output_map_inverse();

inline constexpr std::uint8_t kAffineConstant = 0x63;

TowerElement to_tower(std::uint8_t b);
std::uint8_t from_tower(TowerElement e);

/// Product in the AES polynomial basis, x^8 + x^4 + x^3 + x + 1.
std::uint8_t gf256_mul_poly(std::uint8_t a, std::uint8_t b);

/// AES S-box evaluated through the tower inverter.
std::uint8_t sbox(std::uint8_t x);
std::uint8_t inv_sbox(std::uint8_t y);
const std::array<std::uint8_t, 256>& sbox_table();
const std::array<std::uint8_t, 256>& inv_sbox_table();

}  // namespace rsmask
