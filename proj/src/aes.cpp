#include "rsmask/aes.h"

#include <algorithm>
#include <stdexcept>

namespace rsmask {

namespace {

constexpr std::uint8_t kRcon[11] = {0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1B, 0x36};

std::uint8_t xtime8(std::uint8_t x) { return std::uint8_t((x << 1) ^ ((x & 0x80) ? 0x1B : 0)); }

}  // namespace

std::optional<Block> parse_hex_block(std::string_view hex) {
    if (hex.size() != 32)
        return std::nullopt;
    Block b{};
    auto nib = [](char c) -> int {
        if (c >= '0' && c <= '9')
            return c - '0';
        if (c >= 'a' && c <= 'f')
            return c - 'a' + 10;
        if (c >= 'A' && c <= 'F')
            return c - 'A' + 10;
        return -1;
    };
    for (std::size_t i = 0; i < 16; ++i) {
        int h = nib(hex[2 * i]), l = nib(hex[2 * i + 1]);
        if (h < 0 || l < 0)
            return std::nullopt;
        b[i] = std::uint8_t(h << 4 | l);
    }
    return b;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
    static const char* d = "0123456789abcdef";
    std::string s;
    for (auto b : bytes) {
        s += d[b >> 4];
        s += d[b & 15];
    }
    return s;
}

std::array<Block, 11> expand_key_reference(const Block& key) {
    std::array<Block, 11> rk{};
    rk[0] = key;
    for (int r = 1; r <= 10; ++r) {
        const Block& p = rk[std::size_t(r - 1)];
        Block& k = rk[std::size_t(r)];
        std::uint8_t t[4] = {sbox(p[13]), sbox(p[14]), sbox(p[15]), sbox(p[12])};
        t[0] ^= kRcon[r];
        for (int i = 0; i < 4; ++i)
            k[std::size_t(i)] = p[std::size_t(i)] ^ t[i];
        for (int i = 4; i < 16; ++i)
            k[std::size_t(i)] = p[std::size_t(i)] ^ k[std::size_t(i - 4)];
    }
    return rk;
}

Block encrypt_reference(const Block& pt, const Block& key) {
    auto rk = expand_key_reference(key);
    Block s = pt;
    for (int i = 0; i < 16; ++i)
        s[std::size_t(i)] ^= rk[0][std::size_t(i)];
    for (int r = 1; r <= 10; ++r) {
        for (auto& b : s)
            b = sbox(b);
        Block t;
        for (int c = 0; c < 4; ++c)
            for (int row = 0; row < 4; ++row)
                t[std::size_t(4 * c + row)] = s[std::size_t(4 * ((c + row) % 4) + row)];
        s = t;
        if (r < 10) {
            for (int c = 0; c < 4; ++c) {
                std::uint8_t* a = &s[std::size_t(4 * c)];
                std::uint8_t all = a[0] ^ a[1] ^ a[2] ^ a[3], a0 = a[0];
                a[0] ^= all ^ xtime8(a[0] ^ a[1]);
                a[1] ^= all ^ xtime8(a[1] ^ a[2]);
                a[2] ^= all ^ xtime8(a[2] ^ a[3]);
                a[3] ^= all ^ xtime8(a[3] ^ a0);
            }
        }
        for (int i = 0; i < 16; ++i)
            s[std::size_t(i)] ^= rk[std::size_t(r)][std::size_t(i)];
    }
    return s;
}

W8 xtime(const W8& x) {
    W8 y;
    Lanes h = x.bit[7];
    y.bit[0] = h;
    y.bit[1] = x.bit[0] ^ h;
    y.bit[2] = x.bit[1];
    y.bit[3] = x.bit[2] ^ h;
    y.bit[4] = x.bit[3] ^ h;
    y.bit[5] = x.bit[4];
    y.bit[6] = x.bit[5];
    y.bit[7] = x.bit[6];
    return y;
}

void shift_rows(std::array<W8, 16>& s) {
    auto t = s;
    for (int c = 0; c < 4; ++c)
        for (int row = 0; row < 4; ++row)
            s[std::size_t(4 * c + row)] = t[std::size_t(4 * ((c + row) % 4) + row)];
}

void mix_columns(std::array<W8, 16>& s) {
    for (int c = 0; c < 4; ++c) {
        W8* a = &s[std::size_t(4 * c)];
        W8 all = a[0] ^ a[1] ^ a[2] ^ a[3], a0 = a[0];
        a[0] ^= all ^ xtime(a[0] ^ a[1]);
        a[1] ^= all ^ xtime(a[1] ^ a[2]);
        a[2] ^= all ^ xtime(a[2] ^ a[3]);
        a[3] ^= all ^ xtime(a[3] ^ a0);
    }
}

namespace {

std::array<W8, 16> slot_view(const LaneState& st, int slot) {
    std::array<W8, 16> v;
    for (std::size_t i = 0; i < 16; ++i)
        v[i] = st[i][std::size_t(slot)];
    return v;
}
void set_slot(LaneState& st, int slot, const std::array<W8, 16>& v) {
    for (std::size_t i = 0; i < 16; ++i)
        st[i][std::size_t(slot)] = v[i];
}

int share_slots(Model m) { return m == Model::kUnprotected ? 1 : 3; }

}  // namespace

RoundKeyLanes expand_key_lanes(Model m, const std::array<W8, 16>& key, Rng& rng) {
    RoundKeyLanes rk{};
    for (std::size_t i = 0; i < 16; ++i) {
        if (m == Model::kUnprotected) {
            rk.k[0][i] = {key[i], W8{}};
        } else {
            W8 mask = rng.word<8>();
            rk.k[0][i] = {key[i] ^ mask, mask};
        }
    }
    Probe p;
    for (int r = 1; r <= 10; ++r) {
        const auto& prev = rk.k[std::size_t(r - 1)];
        auto& k = rk.k[std::size_t(r)];
        std::array<std::array<W8, 2>, 4> t;
        static constexpr int src[4] = {13, 14, 15, 12};
        for (int i = 0; i < 4; ++i) {
            Slots in{prev[std::size_t(src[i])][0], prev[std::size_t(src[i])][1], W8{}};
            SboxLanesOut o;
            p.reset();
            eval_sbox(m, p, rng, in, o);
            // fold the third slot into share 1; for RS models it is L(0) = 0
            t[std::size_t(i)] = {o.out[0], o.out[1] ^ o.out[2]};
        }
        t[0][0] ^= W8::broadcast(kRcon[r]);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t s = 0; s < 2; ++s)
                k[i][s] = prev[i][s] ^ t[i][s];
        for (std::size_t i = 4; i < 16; ++i)
            for (std::size_t s = 0; s < 2; ++s)
                k[i][s] = prev[i][s] ^ k[i - 4][s];
    }
    return rk;
}

Block RoundKeys::combined(int round) const {
    Block b{};
    for (std::size_t i = 0; i < 16; ++i)
        b[i] = shares[std::size_t(round)][0][i] ^ shares[std::size_t(round)][1][i];
    return b;
}

RoundKeys expand_key(const Block& key, Rng& rng, Model m) {
    std::array<W8, 16> k;
    for (std::size_t i = 0; i < 16; ++i)
        k[i] = W8::broadcast(key[i]);
    auto lanes = expand_key_lanes(m, k, rng);
    RoundKeys rk;
    for (std::size_t r = 0; r < 11; ++r)
        for (std::size_t i = 0; i < 16; ++i)
            for (std::size_t s = 0; s < 2; ++s)
                rk.shares[r][s][i] = std::uint8_t(lanes.k[r][i][s].lane(0));
    return rk;
}

int leak_samples(Model m) { return 10 * stage_count(m); }

void validate(const EncryptConfig& cfg) {
    for (const auto& f : cfg.faults)
        validate_fault(f, cfg.model);
}

namespace {

struct Runner {
    const EncryptConfig& cfg;
    std::uint64_t seed, batch;
    const RoundKeyLanes& rk;
    BatchResult& out;
    std::array<std::array<std::vector<ArmedFault>, 16>, 11> armed{};
    std::array<std::array<Rng, 16>, 11> fault_rng{};
    Probe p;

    void add_round_key(LaneState& st, int r) {
        for (std::size_t i = 0; i < 16; ++i) {
            st[i][0] ^= rk.k[std::size_t(r)][i][0];
            st[i][1] ^= rk.k[std::size_t(r)][i][1];
        }
    }

    void infect(LaneState& st, const std::array<Shared<8, 3>, 16>& err, int r) {
        std::array<Shared<8, 3>, 16> e_sr;
        for (int c = 0; c < 4; ++c)
            for (int row = 0; row < 4; ++row)
                e_sr[std::size_t(4 * c + row)] = err[std::size_t(4 * ((c + row) % 4) + row)];
        Rng irng(seed, {batch, std::uint64_t(Stream::kInfection), std::uint64_t(r)});
        for (int c = 0; c < 4; ++c)
            for (int src = 0; src < 4; ++src) {
                const auto& e = e_sr[std::size_t(4 * c + src)];
                W8 e1 = e[1] ^ e[2];
                for (int j = 0; j < 4; ++j) {
                    W8 rj = irng.word<8>();
                    auto& dst = st[std::size_t(4 * c + j)];
                    dst[0] ^= apply(sbox_output_map(), infection_product(e[0], rj));
                    dst[1] ^= apply(sbox_output_map(), infection_product(e1, rj));
                }
            }
    }

    void round(LaneState& st, int r, bool faulty) {
        Model m = cfg.model;
        if (!faulty)
            for (std::size_t i = 0; i < 16; ++i)
                out.rs_trace[std::size_t(r)][i] = st[i][2];
        std::array<Shared<8, 3>, 16> err{};
        bool leak = !faulty && cfg.leakage;
        if (!leak)
            p.set_leak(nullptr, 0);
        for (int b = 0; b < 16; ++b) {
            Rng rng(seed, {batch, std::uint64_t(Stream::kSbox), std::uint64_t(r), std::uint64_t(b)});
            p.reset();
            const auto& af = armed[std::size_t(r)][std::size_t(b)];
            if (faulty && !af.empty())
                p.arm(af, &fault_rng[std::size_t(r)][std::size_t(b)]);
            else
                p.disarm();
            if (leak)
                p.set_leak(&out.leak, (r - 1) * stage_count(m));
            const Slots in = st[std::size_t(b)];
            SboxLanesOut o;
            eval_sbox(m, p, rng, in, o, cfg.datapath);
            st[std::size_t(b)] = o.out;
            err[std::size_t(b)] = o.err;
            if (r == cfg.observe_round && b == cfg.observe_byte) {
                W8 v = o.out[0] ^ o.out[1] ^ o.out[2];
                if (faulty) {
                    out.target_out_faulty = v;
                } else {
                    out.target_in = in[0] ^ in[1] ^ in[2];
                    out.target_out = v;
                }
            }
        }
        for (int s = 0; s < 3; ++s) {
            auto v = slot_view(st, s);
            shift_rows(v);
            set_slot(st, s, v);
        }
        if (m == Model::kInfective)
            infect(st, err, r);
        if (r < 10)
            for (int s = 0; s < 3; ++s) {
                auto v = slot_view(st, s);
                mix_columns(v);
                set_slot(st, s, v);
            }
        add_round_key(st, r);
    }
};

std::array<W8, 16> combined(const LaneState& st) {
    std::array<W8, 16> c;
    for (std::size_t i = 0; i < 16; ++i)
        c[i] = st[i][0] ^ st[i][1] ^ st[i][2];
    return c;
}

}  // namespace

void encrypt_batch(const EncryptConfig& cfg, std::uint64_t seed, std::uint64_t batch, const BatchInput& in,
                   BatchResult& out) {
    Model m = cfg.model;
    Rng ks_rng(seed, {batch, std::uint64_t(Stream::kKeySchedule)});
    RoundKeyLanes rk = expand_key_lanes(m, in.key, ks_rng);

    if (cfg.leakage) {
        if (out.leak.samples() != leak_samples(m))
            out.leak = LeakSink(leak_samples(m));
        out.leak.reset();
    }

    Runner run{cfg, seed, batch, rk, out, {}, {}, {}};
    int first_fault = 11;
    for (const auto& f : cfg.faults)
        first_fault = std::min(first_fault, f.round);
    for (int r = first_fault; r <= 10; ++r)
        for (int b = 0; b < 16; ++b) {
            auto& frng = run.fault_rng[std::size_t(r)][std::size_t(b)];
            frng = Rng(seed, {batch, std::uint64_t(Stream::kFault), std::uint64_t(r), std::uint64_t(b)});
            run.armed[std::size_t(r)][std::size_t(b)] = arm_faults(m, cfg.faults, r, b, frng);
        }

    Rng mrng(seed, {batch, std::uint64_t(Stream::kMaskInit)});
    LaneState st;
    for (std::size_t i = 0; i < 16; ++i) {
        if (share_slots(m) == 1) {
            st[i] = {in.pt[i], W8{}, W8{}};
        } else {
            W8 m1 = mrng.word<8>(), m2 = mrng.word<8>();
            st[i] = {in.pt[i] ^ m1 ^ m2, m1, m2};
        }
    }
    run.add_round_key(st, 0);

    LaneState fork{};
    for (int r = 1; r <= 10; ++r) {
        if (r == first_fault)
            fork = st;
        run.round(st, r, false);
    }
    for (std::size_t i = 0; i < 16; ++i)
        out.rs_trace[0][i] = W8{};
    out.ct_correct = combined(st);

    if (first_fault > 10) {
        out.ct = out.ct_correct;
        out.target_out_faulty = out.target_out;
        out.effective = 0;
        return;
    }
    if (cfg.observe_round < first_fault)
        out.target_out_faulty = out.target_out;
    for (int r = first_fault; r <= 10; ++r)
        run.round(fork, r, true);
    out.ct = combined(fork);
    Lanes eff = 0;
    for (std::size_t i = 0; i < 16; ++i) {
        W8 d = out.ct[i] ^ out.ct_correct[i];
        for (auto w : d.bit)
            eff |= w;
    }
    out.effective = eff;
}

TraceRecord extract(const BatchResult& r, const BatchInput& in, int lane) {
    TraceRecord t;
    for (std::size_t i = 0; i < 16; ++i) {
        t.pt[i] = std::uint8_t(in.pt[i].lane(lane));
        t.ct[i] = std::uint8_t(r.ct[i].lane(lane));
        t.ct_correct[i] = std::uint8_t(r.ct_correct[i].lane(lane));
    }
    t.effective = (r.effective >> lane) & 1;
    t.target_in = std::uint8_t(r.target_in.lane(lane));
    t.target_out = std::uint8_t(r.target_out.lane(lane));
    t.target_out_faulty = std::uint8_t(r.target_out_faulty.lane(lane));
    t.leak.resize(std::size_t(r.leak.samples()));
    for (int s = 0; s < r.leak.samples(); ++s)
        t.leak[std::size_t(s)] = std::uint16_t(r.leak.value(s, lane));
    return t;
}

TraceRecord encrypt(const Block& pt, const Block& key, const EncryptConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    BatchInput in;
    for (std::size_t i = 0; i < 16; ++i) {
        in.pt[i] = W8::broadcast(pt[i]);
        in.key[i] = W8::broadcast(key[i]);
    }
    BatchResult r;
    encrypt_batch(cfg, seed, 0, in, r);
    return extract(r, in, 0);
}

}  // namespace rsmask
