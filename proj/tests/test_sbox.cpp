#include "rsmask/sbox.h"

#include <gtest/gtest.h>

#include <set>
#include <string>

using namespace rsmask;

namespace {

// Lane-parallel evaluation: 64 inputs at once, combined output per lane.
struct LaneRun {
    SboxLanesOut out;
    std::array<std::uint8_t, 64> combined{};
};

LaneRun run_lanes(Model m, const Slots& in, Rng& rng, std::span<const ArmedFault> faults = {},
                  const DatapathOptions& opt = {}) {
    Probe p;
    Rng frng(1, {99});
    p.arm(faults, &frng);
    p.reset();
    LaneRun r;
    eval_sbox(m, p, rng, in, r.out, opt);
    W8 c = r.out.out[0] ^ r.out.out[1] ^ r.out.out[2];
    r.combined = unpack(c);
    return r;
}

Slots random_sharing(Model m, const W8& x, Rng& rng) {
    Slots s{};
    if (m == Model::kUnprotected) {
        s[0] = x;
        return s;
    }
    s[1] = rng.word<8>();
    s[2] = rng.word<8>();
    s[0] = x ^ s[1] ^ s[2];
    return s;
}

TowerElement tower_inverse(std::uint8_t x) { return gf256_inv_tower(TowerElement::from_byte(x)); }

}  // namespace

TEST(SboxModels, AllModelsMatchTableForAllInputsAndSeeds) {
    for (auto m : {Model::kUnprotected, Model::kTi, Model::kRsMask, Model::kInfective}) {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            Rng rng(seed, {static_cast<std::uint64_t>(Stream::kStandalone)});
            for (int base = 0; base < 256; base += 64) {
                std::array<std::uint8_t, 64> xs{};
                for (int l = 0; l < 64; ++l)
                    xs[std::size_t(l)] = std::uint8_t(base + l);
                auto r = run_lanes(m, random_sharing(m, pack(xs), rng), rng);
                for (int l = 0; l < 64; ++l)
                    ASSERT_EQ(r.combined[std::size_t(l)], sbox(xs[std::size_t(l)]))
                        << to_string(m) << " seed " << seed << " x " << base + l;
            }
        }
    }
}

TEST(SboxModels, ScalarUnprotected) {
    EXPECT_EQ(sbox_unprotected(0x00), 0x63);
    EXPECT_EQ(sbox_unprotected(0x53), 0xED);
    for (int x = 0; x < 256; ++x)
        EXPECT_EQ(sbox_unprotected(std::uint8_t(x)), sbox(std::uint8_t(x)));
}

TEST(SboxModels, TiWithZeroRandomnessEqualsUnprotected) {
    for (int x = 0; x < 256; ++x) {
        Rng z = Rng::zero();
        auto s = sbox_ti(SharedByte{{std::uint8_t(x), 0, 0}}, z);
        EXPECT_EQ(combine(s), sbox_unprotected(std::uint8_t(x)));
    }
}

TEST(SboxModels, ScalarTiAndRs) {
    Rng rng(3, {3});
    for (int x = 0; x < 256; ++x) {
        auto sh = split(std::uint8_t(x), 2, rng);
        EXPECT_EQ(combine(sbox_ti(sh, rng)), sbox(std::uint8_t(x)));
        RsMaskState st{{sh.shares[0], sh.shares[1]}, sh.shares[2]};
        EXPECT_EQ(sbox_rsmask(st, rng).value(), sbox(std::uint8_t(x)));
    }
}

TEST(RsMap, ExhaustiveAllPairs) {
    Rng rng(17, {1});
    for (int x = 0; x < 256; ++x) {
        for (int rb = 0; rb < 256; rb += 64) {
            std::array<std::uint8_t, 64> rs{};
            for (int l = 0; l < 64; ++l)
                rs[std::size_t(l)] = std::uint8_t(rb + l);
            Slots in;
            in[2] = pack(rs);
            in[1] = rng.word<8>();
            in[0] = W8::broadcast(unsigned(from_tower(TowerElement::from_byte(std::uint8_t(x))))) ^ in[1] ^ in[2];
            Probe p;
            p.reset();
            SboxLanesOut out;
            eval_sbox(Model::kRsMask, p, rng, in, out);
            // remove output layer: inverse of L on the data shares
            W8 zc = apply(sbox_output_map_inverse(),
                          out.out[0] ^ out.out[1] ^ W8::broadcast(kAffineConstant));
            auto zs = unpack(zc);
            for (int l = 0; l < 64; ++l) {
                auto R = to_tower(rs[std::size_t(l)]);
                auto expect = tower_inverse(std::uint8_t(x)) ^ R;
                ASSERT_EQ(zs[std::size_t(l)], expect.byte()) << x << " " << rb + l;
            }
        }
    }
}

TEST(RsMap, ScalarForwardMap) {
    Rng rng(18, {1});
    for (int i = 0; i < 2000; ++i) {
        std::uint8_t xv = rng.byte(), rs = rng.byte(), d1 = rng.byte();
        RsMaskState st{{std::uint8_t(xv ^ d1 ^ rs), d1}, rs};
        auto res = rs_forward_map(st, rng);
        EXPECT_EQ(res.combined() ^ res.r, gf256_inv_tower(to_tower(xv)));
    }
}

TEST(RsMap, ZeroInputYieldsMaskExactly) {
    Rng rng(19, {1});
    for (int rs = 0; rs < 256; ++rs) {
        std::uint8_t d1 = rng.byte();
        RsMaskState st{{std::uint8_t(d1 ^ rs), d1}, std::uint8_t(rs)};
        auto res = rs_forward_map(st, rng);
        EXPECT_EQ(res.combined(), to_tower(std::uint8_t(rs)));
    }
}

TEST(RsMap, ZeroMaskGivesPlainInverse) {
    Rng rng(20, {1});
    for (int x = 0; x < 256; ++x) {
        std::uint8_t d1 = rng.byte();
        RsMaskState st{{std::uint8_t(x ^ d1), d1}, 0};
        auto res = rs_forward_map(st, rng);
        EXPECT_EQ(res.combined(), gf256_inv_tower(to_tower(std::uint8_t(x))));
    }
}

// The crossed nibble assignment adds swap(R) for X != 0 but R for X == 0,
// so it cannot satisfy Z' = X^-1 ^ R.
TEST(RsMap, CrossedAssignmentFails) {
    DatapathOptions crossed{MaskAssignment::kCrossed};
    Rng rng(21, {1});
    int mismatches = 0;
    for (int x = 0; x < 256; ++x)
        for (int rs = 0; rs < 256; rs += 7) {
            std::uint8_t d1 = rng.byte();
            RsMaskState st{{std::uint8_t(x ^ d1 ^ rs), d1}, std::uint8_t(rs)};
            auto res = rs_forward_map(st, rng, {}, {}, crossed);
            auto R = to_tower(std::uint8_t(rs));
            auto inv = gf256_inv_tower(to_tower(std::uint8_t(x)));
            if (res.combined() != (inv ^ R))
                ++mismatches;
            if (x != 0)
                EXPECT_EQ(res.combined(), (inv ^ TowerElement{R.lo, R.hi}));
            else
                EXPECT_EQ(res.combined(), R);
        }
    EXPECT_GT(mismatches, 0);
}

TEST(ComputeF, FlagValues) {
    Rng rng(22, {1});
    for (std::uint64_t rep = 0; rep < 100; ++rep)
        for (int x = 0; x < 256; ++x) {
            auto sh = split(std::uint8_t(x), 2, rng);
            RsMaskState st{{sh.shares[0], sh.shares[1]}, sh.shares[2]};
            EXPECT_EQ(combine(compute_f(st, rng)).bits, x ? 15 : 0);
        }
    RsMaskState zero{{0x12, 0x34}, 0x26};
    EXPECT_EQ(combine(compute_f(zero, rng)).bits, 0);
    RsMaskState v{{std::uint8_t(0x5A ^ 0x11 ^ 0x22), 0x11}, 0x22};
    EXPECT_EQ(combine(compute_f(v, rng)).bits, 15);
}

TEST(Infective, FaultFreeErrorIsZeroAndOutputMatchesRsMask) {
    for (std::uint64_t seed = 0; seed < 20; ++seed)
        for (int x = 0; x < 256; ++x) {
            Rng a(seed, {std::uint64_t(x)}), b(seed, {std::uint64_t(x)});
            RsMaskState st{{std::uint8_t(x ^ 0x5C ^ seed), 0x5C}, std::uint8_t(seed)};
            InfectiveAux aux;
            auto o1 = sbox_infective(st, aux, a);
            auto o2 = sbox_rsmask(st, b);
            EXPECT_EQ(aux.error.byte(), 0);
            EXPECT_EQ(o1.value(), o2.value());
            EXPECT_EQ(o1.rs, o2.rs);
            for (auto inf : aux.infections)
                EXPECT_EQ(inf, 0);
        }
}

TEST(Infective, NibbleProductIsBijectiveForNonzeroFactor) {
    for (int e = 1; e < 16; ++e) {
        std::set<int> img;
        for (int r = 0; r < 16; ++r)
            img.insert(gf16_mul(Gf16{std::uint8_t(e)}, Gf16{std::uint8_t(r)}).bits);
        EXPECT_EQ(img.size(), 16u);
    }
}

TEST(Infective, EffectiveFaultSetsError) {
    FaultSpec f{"inv.mul_z1.hh.b.s0", FaultKind::kStuckAt0};
    Rng rng(23, {1});
    int effective = 0;
    for (int i = 0; i < 4000; ++i) {
        std::uint8_t xv = rng.byte(), rs = rng.byte(), d1 = rng.byte();
        RsMaskState st{{std::uint8_t(xv ^ d1 ^ rs), d1}, rs};
        InfectiveAux aux;
        Rng r1(i, {1}), r2(i, {1});
        auto faulty = sbox_infective(st, aux, r1, std::span(&f, 1));
        InfectiveAux clean_aux;
        auto clean = sbox_infective(st, clean_aux, r2);
        bool eff = faulty.value() != clean.value();
        if (aux.error.byte() != 0)
            ++effective;
        else
            EXPECT_FALSE(eff);
    }
    EXPECT_GT(effective, 1000);
}

TEST(Catalog, UniqueIdsAndDefaultNodes) {
    for (auto m : {Model::kUnprotected, Model::kTi, Model::kRsMask, Model::kInfective}) {
        const auto& c = catalog(m);
        EXPECT_GT(c.nodes.size(), 10u);
        std::set<std::string> ids;
        for (const auto& n : c.nodes) {
            EXPECT_TRUE(ids.insert(n.id).second) << n.id;
            EXPECT_GE(n.stage, 1);
            EXPECT_LE(n.stage, stage_count(m));
        }
    }
    EXPECT_TRUE(catalog(Model::kUnprotected).find("inv.mul_z1.hh.b"));
    EXPECT_TRUE(catalog(Model::kTi).find("inv.mul_z1.hh.b.s0"));
    EXPECT_TRUE(catalog(Model::kRsMask).find("inv.mul_z1.hh.b.s0"));
    EXPECT_TRUE(catalog(Model::kInfective).find("inf.mul_z1.hh.b.s0"));
    EXPECT_FALSE(catalog(Model::kRsMask).find("inf.z.s0"));
}

TEST(Catalog, NodeOrderIsDataIndependent) {
    std::vector<std::string> first, second;
    Rng a(1, {1}), b(2, {2});
    auto rec = [](std::vector<std::string>& v) {
        return [&v](std::string_view id, unsigned) { v.emplace_back(id); };
    };
    sbox_rsmask(RsMaskState{{1, 2}, 3}, a, {}, rec(first));
    sbox_rsmask(RsMaskState{{0xFF, 0x00}, 0xFF}, b, {}, rec(second));
    EXPECT_EQ(first, second);
    EXPECT_EQ(first.size(), catalog(Model::kRsMask).nodes.size());
}

TEST(Faults, ValidationRejectsBadSpecs) {
    EXPECT_THROW(validate_fault(FaultSpec{"nope"}, Model::kTi), std::invalid_argument);
    EXPECT_THROW(validate_fault(FaultSpec{"inv.mul_z1.hh.b"}, Model::kTi), std::invalid_argument);
    FaultSpec wrong_stage{"inv.mul_z1.hh.b.s0"};
    wrong_stage.stage = 2;
    EXPECT_THROW(validate_fault(wrong_stage, Model::kTi), std::invalid_argument);
    FaultSpec ok{"inv.mul_z1.hh.b.s0"};
    ok.stage = 4;
    EXPECT_NO_THROW(validate_fault(ok, Model::kTi));
    ok.stage = 9;
    EXPECT_NO_THROW(validate_fault(ok, Model::kRsMask));
}

TEST(Faults, StuckAtOnZeroNodeIsIneffective) {
    // with x = 0 every operand of the final multipliers is zero
    FaultSpec f{"inv.mul_z1.hh.a", FaultKind::kStuckAt0, 0x3};
    EXPECT_EQ(sbox_unprotected(0x00, std::span(&f, 1)), 0x63);
    FaultSpec g{"inv.d", FaultKind::kStuckAt1, 0x1};
    EXPECT_NE(sbox_unprotected(0x53, std::span(&g, 1)), 0xED);
}

// A fault on one input share of an early shared multiplier reaches every
// output share.
TEST(Faults, SingleShareFaultSpreadsToAllOutputShares) {
    FaultSpec f{"inv.mul_x.hh.a.s0", FaultKind::kBitFlip, 0x1};
    std::array<bool, 3> touched{};
    for (int i = 0; i < 500; ++i) {
        Rng a(i, {5}), b(i, {5}), c(i, {6});
        auto sh = split(std::uint8_t(i), 2, c);
        auto clean = sbox_ti(sh, a);
        auto faulty = sbox_ti(sh, b, std::span(&f, 1));
        for (std::size_t s = 0; s < 3; ++s)
            touched[s] = touched[s] || clean.shares[s] != faulty.shares[s];
    }
    EXPECT_TRUE(touched[0] && touched[1] && touched[2]);
}

TEST(Faults, TapSeesFaultedValue) {
    FaultSpec f{"inv.d", FaultKind::kStuckAt1, 0xF};
    unsigned seen = 0;
    sbox_unprotected(0x00, std::span(&f, 1), [&](std::string_view id, unsigned v) {
        if (id == "inv.d")
            seen = v;
    });
    EXPECT_EQ(seen, 0xFu);
}
