#include "rsmask/verify.h"

#include "rsmask/aes.h"
#include "rsmask/analysis.h"

#include <sstream>

namespace rsmask {

std::uint8_t oracle_sbox(std::uint8_t x) {
    std::uint8_t y = 0;
    if (x)
        for (int c = 1; c < 256; ++c)
            if (gf256_mul_poly(x, std::uint8_t(c)) == 1) {
                y = std::uint8_t(c);
                break;
            }
    auto rotl = [](std::uint8_t v, int s) { return std::uint8_t((v << s) | (v >> (8 - s))); };
    return std::uint8_t(y ^ rotl(y, 1) ^ rotl(y, 2) ^ rotl(y, 3) ^ rotl(y, 4) ^ 0x63);
}

namespace {

std::array<std::uint8_t, 256> oracle_table() {
    std::array<std::uint8_t, 256> t{};
    for (int x = 0; x < 256; ++x)
        t[std::size_t(x)] = oracle_sbox(std::uint8_t(x));
    return t;
}

Slots share(Model m, const W8& x, Rng& rng) {
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

W8 combined(const Slots& s) { return s[0] ^ s[1] ^ s[2]; }

}  // namespace

CheckResult check_sbox_table(const std::array<std::uint8_t, 256>& table, std::string name) {
    auto t = oracle_table();
    int bad = 0;
    for (std::size_t x = 0; x < 256; ++x)
        bad += table[x] != t[x];
    return {std::move(name), bad == 0, std::to_string(bad) + " mismatches over 256 inputs"};
}

CheckResult check_field_oracle() {
    CheckResult r{"field-oracle", true, ""};
    int bad = 0;
    std::array<std::uint8_t, 256> table;
    for (int x = 0; x < 256; ++x)
        table[std::size_t(x)] = sbox(std::uint8_t(x));
    if (!check_sbox_table(table).pass)
        ++bad;
    for (int x = 0; x < 256; ++x) {
        std::uint8_t inv = from_tower(gf256_inv_tower(to_tower(std::uint8_t(x))));
        if (x && gf256_mul_poly(std::uint8_t(x), inv) != 1)
            ++bad;
    }
    r.pass = bad == 0;
    r.detail = bad ? "S-box table or tower inverse disagrees with the oracle"
                   : "tower S-box and inverse agree with the oracle on 256 inputs";
    return r;
}

CheckResult check_sbox_models(int seeds) {
    CheckResult r{"sbox-models", true, ""};
    auto t = oracle_table();
    std::uint64_t bad = 0, n = 0;
    for (auto m : {Model::kUnprotected, Model::kTi, Model::kRsMask, Model::kInfective})
        for (int seed = 0; seed < seeds; ++seed)
            for (int blk = 0; blk < 4; ++blk) {
                std::array<std::uint8_t, 64> xs;
                for (int l = 0; l < 64; ++l)
                    xs[std::size_t(l)] = std::uint8_t(blk * 64 + l);
                Rng rng(std::uint64_t(seed), {std::uint64_t(m), std::uint64_t(blk)});
                Slots in = share(m, pack(xs), rng);
                Probe p;
                p.reset();
                SboxLanesOut o;
                eval_sbox(m, p, rng, in, o);
                auto out = unpack(combined(o.out));
                for (int l = 0; l < 64; ++l, ++n)
                    bad += out[std::size_t(l)] != t[xs[std::size_t(l)]];
            }
    r.pass = bad == 0;
    r.detail = std::to_string(bad) + " mismatches over " + std::to_string(n) + " evaluations";
    return r;
}

CheckResult check_rs_exhaustive() {
    CheckResult r{"rs-exhaustive", true, ""};
    auto t = oracle_table();
    std::uint64_t bad = 0, n = 0;
    for (auto m : {Model::kRsMask, Model::kInfective})
        for (int rs = 0; rs < 256; ++rs)
            for (int blk = 0; blk < 4; ++blk) {
                std::array<std::uint8_t, 64> xs;
                for (int l = 0; l < 64; ++l)
                    xs[std::size_t(l)] = std::uint8_t(blk * 64 + l);
                Rng rng(std::uint64_t(rs), {std::uint64_t(blk), 7});
                Slots in;
                in[2] = W8::broadcast(unsigned(rs));
                in[1] = rng.word<8>();
                in[0] = pack(xs) ^ in[1] ^ in[2];
                Probe p;
                p.reset();
                SboxLanesOut o;
                eval_sbox(m, p, rng, in, o);
                auto out = unpack(combined(o.out));
                auto err = unpack(o.err[0] ^ o.err[1] ^ o.err[2]);
                for (int l = 0; l < 64; ++l, ++n)
                    bad += out[std::size_t(l)] != t[xs[std::size_t(l)]] || err[std::size_t(l)] != 0;
            }
    r.pass = bad == 0;
    r.detail = std::to_string(bad) + " mismatches over " + std::to_string(n) + " (X, R) evaluations";
    return r;
}

CheckResult check_aes_vectors() {
    CheckResult r{"aes-vectors", true, ""};
    struct V {
        const char *pt, *key, *ct;
    } vs[] = {{"3243f6a8885a308d313198a2e0370734", "2b7e151628aed2a6abf7158809cf4f3c",
               "3925841d02dc09fbdc118597196a0b32"},
              {"00112233445566778899aabbccddeeff", "000102030405060708090a0b0c0d0e0f",
               "69c4e0d86a7b0430d8cdb78070b4c55a"}};
    int bad = 0;
    if (to_hex(expand_key_reference(Block{})[1]) != "62636363626363636263636362636363")
        ++bad;
    if (to_hex(expand_key_reference(*parse_hex_block("2b7e151628aed2a6abf7158809cf4f3c"))[10]) !=
        "d014f9a8c9ee2589e13f0cc8b6630ca6")
        ++bad;
    for (const auto& v : vs) {
        Block pt = *parse_hex_block(v.pt), key = *parse_hex_block(v.key);
        bad += to_hex(encrypt_reference(pt, key)) != v.ct;
        for (auto m : {Model::kUnprotected, Model::kTi, Model::kRsMask, Model::kInfective}) {
            EncryptConfig cfg;
            cfg.model = m;
            bad += to_hex(encrypt(pt, key, cfg, 1).ct) != v.ct;
        }
    }
    r.pass = bad == 0;
    r.detail = std::to_string(bad) + " failing vectors";
    return r;
}

CheckResult check_aes_equivalence(std::uint64_t triples) {
    CheckResult r{"aes-equivalence", true, ""};
    std::uint64_t bad = 0, n = 0;
    std::uint64_t batches = (triples + 63) / 64;
    for (auto m : {Model::kUnprotected, Model::kTi, Model::kRsMask, Model::kInfective})
        for (std::uint64_t b = 0; b < batches; ++b) {
            Rng rng(b, {std::uint64_t(m), 31});
            BatchInput in;
            for (std::size_t i = 0; i < 16; ++i) {
                in.pt[i] = rng.word<8>();
                in.key[i] = rng.word<8>();
            }
            EncryptConfig cfg;
            cfg.model = m;
            BatchResult res;
            encrypt_batch(cfg, b * 7 + 1, b, in, res);
            for (int l = 0; l < 64 && b * 64 + std::uint64_t(l) < triples; ++l, ++n) {
                Block pt, key, ct;
                for (std::size_t i = 0; i < 16; ++i) {
                    pt[i] = std::uint8_t(in.pt[i].lane(l));
                    key[i] = std::uint8_t(in.key[i].lane(l));
                    ct[i] = std::uint8_t(res.ct[i].lane(l));
                }
                bad += ct != encrypt_reference(pt, key);
            }
        }
    r.pass = bad == 0;
    r.detail = std::to_string(bad) + " mismatches over " + std::to_string(n) + " encryptions";
    return r;
}

CheckResult check_rs_hygiene() {
    CheckResult r{"rs-hygiene", true, ""};
    int bad = 0;
    for (auto m : {Model::kRsMask, Model::kInfective}) {
        EncryptConfig cfg;
        cfg.model = m;
        BatchResult a, b;
        for (int s = 0; s < 2; ++s) {
            Rng rng(std::uint64_t(s), {41});
            BatchInput in;
            for (std::size_t i = 0; i < 16; ++i) {
                in.pt[i] = rng.word<8>();
                in.key[i] = rng.word<8>();
            }
            encrypt_batch(cfg, 99, 0, in, s ? b : a);
        }
        for (int round = 1; round <= 10; ++round)
            bad += a.rs_trace[std::size_t(round)] != b.rs_trace[std::size_t(round)];
    }
    r.pass = bad == 0;
    r.detail = bad ? "RS slot depends on key or plaintext" : "RS slot identical under different keys and plaintexts";
    return r;
}

CheckResult check_theorems() {
    CheckResult r{"theorems", true, ""};
    auto t = theorem_checks();
    r.pass = t.ok();
    std::ostringstream s;
    s << "MI uniform R " << t.mi_uniform << "; biased R";
    for (auto& [name, mi] : t.mi_biased)
        s << ' ' << name << '=' << mi;
    s << "; delta p(K=0) " << t.delta_p_true << ", wrong keys uniform " << t.wrong_keys_uniform
      << "/255; MI(X1;X2) key-invariant " << (t.mi_key_invariant ? "yes" : "no");
    r.detail = s.str();
    return r;
}

std::vector<CheckResult> run_verify() {
    return {check_field_oracle(), check_sbox_models(),  check_rs_exhaustive(), check_aes_vectors(),
            check_aes_equivalence(), check_rs_hygiene(), check_theorems()};
}

}  // namespace rsmask
