#include "rsmask/sbox.h"

#include <algorithm>
#include <stdexcept>

namespace rsmask {

namespace {

template <std::size_t S>
Shared<8, S> to_tower_shares(const Slots& in) {
    Shared<8, S> x;
    for (std::size_t i = 0; i < S; ++i)
        x[i] = apply(poly_to_tower(), in[i]);
    return x;
}

template <std::size_t S>
Shared<4, S> sq_term(const Shared<4, S>& x1, const Shared<4, S>& x0) {
    return per_share(x1 ^ x0, [](const W4& v) { return sq_scale_nu(v); });
}

template <int N, std::size_t S>
Shared<1, S> bit_of(const Shared<N, S>& v, int b) {
    Shared<1, S> o;
    for (std::size_t i = 0; i < S; ++i)
        o[i].bit[0] = v[i].bit[std::size_t(b)];
    return o;
}
template <int N, std::size_t S>
void set_bit(Shared<N, S>& v, int b, const Shared<1, S>& x) {
    for (std::size_t i = 0; i < S; ++i)
        v[i].bit[std::size_t(b)] = x[i].bit[0];
}

// GF(2^4) inversion split at its register boundary: first half gives e
// (GF(2^2)), second half y = (e b, e a).
template <std::size_t S>
Shared<2, S> inv16_first(Probe& p, const Shared<4, S>& d, Rng& rng) {
    auto a = shares_hi(d), b = shares_lo(d);
    auto c = per_share(a ^ b, [](const W2& v) { return scale_n(sq(v)); });
    auto ab = masked_mul4<S>(p, "mul_ab", a, b, rng);
    return per_share(c ^ ab, [](const W2& v) { return sq(v); });
}

template <std::size_t S>
Shared<4, S> inv16_second(Probe& p, const Shared<2, S>& e, const Shared<4, S>& d, Rng& rng) {
    auto a = shares_hi(d), b = shares_lo(d);
    auto yh = masked_mul4<S>(p, "mul_eb", e, b, rng);
    auto yl = masked_mul4<S>(p, "mul_ea", e, a, rng);
    Shared<4, S> y;
    for (std::size_t i = 0; i < S; ++i)
        y[i] = join(yh[i], yl[i]);
    return y;
}

template <std::size_t S>
void output_stage(Probe& p, const Shared<8, S>& z, Slots& out) {
    Scope sc(p, "out");
    Shared<8, S> q;
    for (std::size_t i = 0; i < S; ++i)
        q[i] = apply(sbox_output_map(), z[i]);
    q[0] ^= W8::broadcast(kAffineConstant);
    p.reg(q, "q");
    out = Slots{};
    for (std::size_t i = 0; i < S; ++i)
        out[i] = q[i];
}

// Unprotected and TI: plain Canright pipeline on S shares.
template <std::size_t S>
void eval_plain(Probe& p, Rng& rng, const Slots& in, Slots& out) {
    auto x = to_tower_shares<S>(in);

    p.stage(1);
    Shared<4, S> d;
    {
        auto x1 = shares_hi(x), x0 = shares_lo(x);
        Scope sc(p, "inv");
        d = sq_term<S>(x1, x0) ^ masked_mul16<S>(p, "mul_x", x1, x0, rng);
        p.reg(d, "d");
    }
    p.reg(x, "pipe.x_1");

    p.stage(2);
    Shared<2, S> e;
    {
        Scope sc(p, "inv");
        Scope sc2(p, "inv16");
        e = inv16_first<S>(p, d, rng);
        p.reg(e, "e");
    }
    p.reg(d, "pipe.d_2");
    p.reg(x, "pipe.x_2");

    p.stage(3);
    Shared<4, S> y;
    {
        Scope sc(p, "inv");
        {
            Scope sc2(p, "inv16");
            y = inv16_second<S>(p, e, d, rng);
        }
        p.reg(y, "y");
    }
    p.reg(x, "pipe.x_3");

    p.stage(4);
    Shared<8, S> z;
    {
        Scope sc(p, "inv");
        auto z1 = masked_mul16<S>(p, "mul_z1", shares_lo(x), y, rng);
        auto z0 = masked_mul16<S>(p, "mul_z0", shares_hi(x), y, rng);
        z = shares_join(z1, z0);
        p.reg(z, "z");
    }

    p.stage(5);
    output_stage<S>(p, z, out);
}

// f = unity when X != 0, 0 when X == 0: masked AND tree over complemented
// bits gives [X == 0], then replicated and complemented. Stages 1..4.
Shared<4, 3> f_tree(Probe& p, Rng& rng, const Shared<8, 3>& x) {
    Scope sc(p, "f");
    Shared<8, 3> xc = x;
    xc[0] ^= W8::broadcast(0xFF);

    p.stage(1);
    Shared<4, 3> l1{};
    for (int j = 0; j < 4; ++j) {
        static constexpr const char* names[] = {"and1_0", "and1_1", "and1_2", "and1_3"};
        set_bit(l1, j, masked_and<3>(p, names[j], bit_of(xc, 2 * j), bit_of(xc, 2 * j + 1), rng));
    }
    p.reg(l1, "l1");

    p.stage(2);
    Shared<2, 3> l2{};
    set_bit(l2, 0, masked_and<3>(p, "and2_0", bit_of(l1, 0), bit_of(l1, 1), rng));
    set_bit(l2, 1, masked_and<3>(p, "and2_1", bit_of(l1, 2), bit_of(l1, 3), rng));
    p.reg(l2, "l2");

    p.stage(3);
    auto z = masked_and<3>(p, "and3", bit_of(l2, 0), bit_of(l2, 1), rng);
    p.reg(z, "l3");

    p.stage(4);
    Shared<4, 3> f;
    for (std::size_t i = 0; i < 3; ++i) {
        Lanes v = z[i].bit[0] ^ (i == 0 ? kAllLanes : 0);
        f[i] = W4{{v, v, v, v}};
    }
    p.reg(f, "f");
    return f;
}

// Single-share inverter on the RS mask. Stages 1..4, returns R^-1; r is
// the carried mask register.
W8 r_path(Probe& p, Rng& rng, W8& r) {
    Scope sc(p, "rpath");
    using S1 = Shared<4, 1>;

    p.stage(1);
    S1 r1{hi(r)}, r0{lo(r)};
    S1 d = sq_term<1>(r1, r0) ^ masked_mul16<1>(p, "mul_r", r1, r0, rng);
    p.reg(d, "d");
    p.reg(r, "r_1");

    p.stage(2);
    auto e = inv16_first<1>(p, d, rng);
    p.reg(e, "e");
    p.reg(d, "d_2");
    p.reg(r, "r_2");

    p.stage(3);
    auto y = inv16_second<1>(p, e, d, rng);
    p.reg(y, "y");
    p.reg(r, "r_3");

    p.stage(4);
    auto z1 = masked_mul16<1>(p, "mul_z1", S1{lo(r)}, y, rng);
    auto z0 = masked_mul16<1>(p, "mul_z0", S1{hi(r)}, y, rng);
    W8 rinv = join(z1[0], z0[0]);
    p.reg(rinv, "rinv");
    return rinv;
}

void eval_rs(Probe& p, Rng& rng, const Slots& in, SboxLanesOut& res, bool infective, const DatapathOptions& opt) {
    using Sh4 = Shared<4, 3>;
    using Sh8 = Shared<8, 3>;

    Sh8 x = to_tower_shares<3>(in);
    W8 r = x[2];

    Sh4 f = f_tree(p, rng, x);
    W8 rinv = r_path(p, rng, r);
    for (int k = 1; k <= 4; ++k) {
        static constexpr const char* names[] = {"pipe.x_1", "pipe.x_2", "pipe.x_3", "pipe.x_4"};
        p.stage(k);
        p.reg(x, names[k - 1]);
    }

    // stage 5: X'' = X ^ fbar (x) R^-1
    p.stage(5);
    Sh8 xin;
    {
        Scope sc(p, "zero");
        Sh4 fbar = f;
        fbar[0] ^= W4::broadcast(15);
        auto mh = mul_single<3>(p, "mul_hi", fbar, hi(rinv));
        auto ml = mul_single<3>(p, "mul_lo", fbar, lo(rinv));
        xin = x ^ shares_join(mh, ml);
        p.reg(xin, "xin");
    }
    p.reg(f, "pipe.f_5");
    p.reg(r, "pipe.r_5");
    if (infective)
        p.reg(x, "pipe.xo_5");

    // stage 6: main d, and d r_a / d r_b on a separate datapath
    p.stage(6);
    Sh4 x1 = shares_hi(xin), x0 = shares_lo(xin);
    // mask nibble absorbed by z1' (ra) and by z0' (rb)
    bool paired = opt.assignment == MaskAssignment::kPaired;
    W4 ra = paired ? hi(r) : lo(r);
    W4 rb = paired ? lo(r) : hi(r);
    Sh4 d, dr1, dr0;
    {
        Scope sc(p, "inv");
        d = sq_term<3>(x1, x0) ^ masked_mul16<3>(p, "mul_x", x1, x0, rng);
        p.reg(d, "d");
    }
    {
        Scope sc(p, "map");
        Sh4 sq = sq_term<3>(x1, x0);
        p.wire(sq, "sq");
        auto u1 = mul_single<3>(p, "mul_u1", x0, ra);
        auto t1 = masked_mul16<3>(p, "mul_t1", u1, x1, rng);
        auto s1 = mul_single<3>(p, "mul_s1", sq, ra);
        dr1 = s1 ^ t1;
        p.reg(dr1, "dr1");
        auto u0 = mul_single<3>(p, "mul_u0", x1, rb);
        auto t0 = masked_mul16<3>(p, "mul_t0", u0, x0, rng);
        auto s0 = mul_single<3>(p, "mul_s0", sq, rb);
        dr0 = s0 ^ t0;
        p.reg(dr0, "dr0");
    }
    p.reg(xin, "pipe.x_6");
    p.reg(f, "pipe.f_6");
    p.reg(r, "pipe.r_6");
    if (infective)
        p.reg(x, "pipe.xo_6");

    // stage 7: inverter level 1; g = f (x) d r
    p.stage(7);
    Shared<2, 3> e;
    Sh4 g1, g0;
    {
        Scope sc(p, "inv");
        Scope sc2(p, "inv16");
        e = inv16_first<3>(p, d, rng);
        p.reg(e, "e");
    }
    {
        Scope sc(p, "map");
        g1 = masked_mul16<3>(p, "mul_g1", f, dr1, rng);
        p.reg(g1, "g1");
        g0 = masked_mul16<3>(p, "mul_g0", f, dr0, rng);
        p.reg(g0, "g0");
    }
    p.reg(d, "pipe.d_7");
    p.reg(xin, "pipe.x_7");
    p.reg(r, "pipe.r_7");
    if (infective)
        p.reg(x, "pipe.xo_7");

    // stage 8: y, and the mapped inputs x0' = x0'' ^ g1, x1' = x1'' ^ g0
    p.stage(8);
    Sh4 y;
    Sh8 xp;
    {
        Scope sc(p, "inv");
        {
            Scope sc2(p, "inv16");
            y = inv16_second<3>(p, e, d, rng);
        }
        p.reg(y, "y");
    }
    {
        Scope sc(p, "map");
        xp = shares_join(x1 ^ g0, x0 ^ g1);
        p.reg(xp, "xp");
    }
    p.reg(r, "pipe.r_8");
    if (infective)
        p.reg(x, "pipe.xo_8");

    // stage 9: Z' = (x0' y, x1' y)
    p.stage(9);
    Sh8 z, zc;
    {
        Scope sc(p, "inv");
        auto z1 = masked_mul16<3>(p, "mul_z1", shares_lo(xp), y, rng);
        auto z0 = masked_mul16<3>(p, "mul_z0", shares_hi(xp), y, rng);
        z = shares_join(z1, z0);
        p.reg(z, "z");
    }
    if (infective) {
        Scope sc(p, "inf");
        auto z1 = masked_mul16<3>(p, "mul_z1", shares_lo(x), y, rng);
        auto z0 = masked_mul16<3>(p, "mul_z0", shares_hi(x), y, rng);
        zc = shares_join(z1, z0);
        p.reg(zc, "z");
    }
    p.reg(r, "pipe.r_9");

    // stage 10: linear output layer; Z' shares 1 and 2 fold into data share 1
    p.stage(10);
    {
        Scope sc(p, "out");
        W8 d0 = apply(sbox_output_map(), z[0]) ^ W8::broadcast(kAffineConstant);
        W8 d1 = apply(sbox_output_map(), z[1] ^ z[2]);
        W8 rs = apply(sbox_output_map(), r);
        p.reg(d0, "d0");
        p.reg(d1, "d1");
        p.reg(rs, "rs");
        res.out = {d0, d1, rs};
    }
    if (infective) {
        Scope sc(p, "inf");
        Sh8 err = z ^ zc;
        err[2] ^= r;
        p.wire(err, "e");
        res.err = err;
    } else {
        res.err = Sh8{};
    }
}

NodeCatalog build_catalog(Model m) {
    NodeCatalog c;
    c.model = m;
    Probe p;
    p.set_catalog(&c.nodes);
    p.reset();
    Rng rng = Rng::zero();
    SboxLanesOut out;
    eval_sbox(m, p, rng, Slots{}, out);
    for (std::uint32_t i = 0; i < c.nodes.size(); ++i) {
        if (!c.index.emplace(c.nodes[i].id, i).second)
            throw std::logic_error("duplicate node id " + c.nodes[i].id);
    }
    return c;
}

}  // namespace

std::string_view to_string(Model m) {
    switch (m) {
    case Model::kUnprotected:
        return "unprotected";
    case Model::kTi:
        return "ti";
    case Model::kRsMask:
        return "rsmask";
    case Model::kInfective:
        return "infective";
    }
    return "?";
}

std::optional<Model> parse_model(std::string_view s) {
    for (auto m : {Model::kUnprotected, Model::kTi, Model::kRsMask, Model::kInfective})
        if (to_string(m) == s)
            return m;
    return std::nullopt;
}

int stage_count(Model m) { return is_rs(m) ? 10 : 5; }
bool is_rs(Model m) { return m == Model::kRsMask || m == Model::kInfective; }

void eval_sbox(Model m, Probe& p, Rng& rng, const Slots& in, SboxLanesOut& out, const DatapathOptions& opt) {
    switch (m) {
    case Model::kUnprotected:
        eval_plain<1>(p, rng, in, out.out);
        out.err = {};
        break;
    case Model::kTi:
        eval_plain<3>(p, rng, in, out.out);
        out.err = {};
        break;
    case Model::kRsMask:
        eval_rs(p, rng, in, out, false, opt);
        break;
    case Model::kInfective:
        eval_rs(p, rng, in, out, true, opt);
        break;
    }
}

std::optional<std::uint32_t> NodeCatalog::find(std::string_view id) const {
    auto it = index.find(std::string(id));
    if (it == index.end())
        return std::nullopt;
    return it->second;
}

const NodeCatalog& catalog(Model m) {
    static const std::array<NodeCatalog, 4> all = {build_catalog(Model::kUnprotected), build_catalog(Model::kTi),
                                                   build_catalog(Model::kRsMask), build_catalog(Model::kInfective)};
    return all[std::size_t(m)];
}

void validate_fault(const FaultSpec& f, Model m) {
    const auto& c = catalog(m);
    auto idx = c.find(f.node);
    if (!idx)
        throw std::invalid_argument("unknown node '" + f.node + "' for model " + std::string(to_string(m)));
    const auto& n = c.nodes[*idx];
    if (f.stage != 0 && f.stage != n.stage)
        throw std::invalid_argument("node '" + f.node + "' lives in stage " + std::to_string(n.stage) + ", not " +
                                    std::to_string(f.stage));
    if (f.round < 1 || f.round > 10)
        throw std::invalid_argument("fault round must be in 1..10");
    if (f.byte < 0 || f.byte > 15)
        throw std::invalid_argument("fault byte must be in 0..15");
    if (!(f.probability >= 0.0 && f.probability <= 1.0))
        throw std::invalid_argument("fault probability must be in [0,1]");
    if (f.kind != FaultKind::kRandomReplace && (f.mask & ((1u << n.width) - 1)) == 0)
        throw std::invalid_argument("fault mask selects no bit of node '" + f.node + "'");
}

std::vector<ArmedFault> arm_faults(Model m, std::span<const FaultSpec> specs, int round, int byte, Rng& fault_rng) {
    std::vector<ArmedFault> out;
    const auto& c = catalog(m);
    for (const auto& s : specs) {
        if (round >= 0 && (s.round != round || s.byte != byte))
            continue;
        auto idx = c.find(s.node);
        if (!idx)
            throw std::invalid_argument("unknown node '" + s.node + "'");
        out.push_back(ArmedFault{*idx, s.kind, s.mask, draw_activation(s.probability, fault_rng)});
    }
    std::stable_sort(out.begin(), out.end(), [](const ArmedFault& a, const ArmedFault& b) { return a.node < b.node; });
    return out;
}

// ---- scalar wrappers ----------------------------------------------------------

namespace {

struct ScalarRun {
    Probe probe;
    Rng fault_rng{0, {static_cast<std::uint64_t>(Stream::kFault)}};
    std::vector<ArmedFault> armed;
    SboxLanesOut out;

    ScalarRun(Model m, std::span<const FaultSpec> faults, const NodeRecorder& tap) {
        armed = arm_faults(m, faults, -1, 0, fault_rng);
        probe.arm(armed, &fault_rng);
        if (tap)
            probe.set_tap(tap, 0);
        probe.reset();
    }
};

Slots broadcast_slots(std::uint8_t a, std::uint8_t b, std::uint8_t c) {
    return Slots{W8::broadcast(a), W8::broadcast(b), W8::broadcast(c)};
}

RsMaskState rs_out(const SboxLanesOut& o) {
    RsMaskState s;
    s.data = {std::uint8_t(o.out[0].lane(0)), std::uint8_t(o.out[1].lane(0))};
    s.rs = std::uint8_t(o.out[2].lane(0));
    return s;
}

}  // namespace

std::uint8_t sbox_unprotected(std::uint8_t x, std::span<const FaultSpec> faults, const NodeRecorder& tap) {
    ScalarRun run(Model::kUnprotected, faults, tap);
    Rng rng = Rng::zero();
    eval_sbox(Model::kUnprotected, run.probe, rng, broadcast_slots(x, 0, 0), run.out);
    return std::uint8_t(run.out.out[0].lane(0));
}

SharedByte sbox_ti(const SharedByte& x, Rng& rng, std::span<const FaultSpec> faults, const NodeRecorder& tap) {
    if (x.shares.size() != 3)
        throw std::invalid_argument("sbox_ti expects three shares");
    ScalarRun run(Model::kTi, faults, tap);
    eval_sbox(Model::kTi, run.probe, rng, broadcast_slots(x.shares[0], x.shares[1], x.shares[2]), run.out);
    SharedByte o;
    for (int i = 0; i < 3; ++i)
        o.shares.push_back(std::uint8_t(run.out.out[std::size_t(i)].lane(0)));
    return o;
}

RsMapResult rs_forward_map(const RsMaskState& x, Rng& rng, std::span<const FaultSpec> faults, const NodeRecorder& tap,
                           const DatapathOptions& opt) {
    std::array<std::uint8_t, 3> z{};
    NodeRecorder grab = [&](std::string_view id, unsigned v) {
        if (id.starts_with("inv.z.s"))
            z[std::size_t(id.back() - '0')] = std::uint8_t(v);
        if (tap)
            tap(id, v);
    };
    ScalarRun run(Model::kRsMask, faults, grab);
    eval_sbox(Model::kRsMask, run.probe, rng, broadcast_slots(x.data[0], x.data[1], x.rs), run.out, opt);
    RsMapResult r;
    for (std::size_t i = 0; i < 3; ++i)
        r.z[i] = TowerElement::from_byte(z[i]);
    r.r = to_tower(x.rs);
    return r;
}

SharedGf16 compute_f(const RsMaskState& x, Rng& rng, const NodeRecorder& tap) {
    Probe p;
    if (tap)
        p.set_tap(tap, 0);
    p.reset();
    Slots in = broadcast_slots(x.data[0], x.data[1], x.rs);
    auto f = f_tree(p, rng, to_tower_shares<3>(in));
    SharedGf16 o;
    for (std::size_t i = 0; i < 3; ++i)
        o[i] = Gf16{std::uint8_t(f[i].lane(0))};
    return o;
}

RsMaskState sbox_rsmask(const RsMaskState& x, Rng& rng, std::span<const FaultSpec> faults, const NodeRecorder& tap) {
    ScalarRun run(Model::kRsMask, faults, tap);
    eval_sbox(Model::kRsMask, run.probe, rng, broadcast_slots(x.data[0], x.data[1], x.rs), run.out);
    return rs_out(run.out);
}

TowerElement infection_product(TowerElement e, TowerElement r) { return tower_mul(e, r); }

W8 infection_product(const W8& e, const W8& r) {
    W4 a = hi(e), b = lo(e), c = hi(r), d = lo(r);
    W4 f = mul(W4::broadcast(gf16_nu().bits), mul(a ^ b, c ^ d));
    return join(mul(a, c) ^ f, mul(b, d) ^ f);
}

RsMaskState sbox_infective(const RsMaskState& x, InfectiveAux& aux, Rng& rng, std::span<const FaultSpec> faults,
                           const NodeRecorder& tap) {
    ScalarRun run(Model::kInfective, faults, tap);
    eval_sbox(Model::kInfective, run.probe, rng, broadcast_slots(x.data[0], x.data[1], x.rs), run.out);
    RsMaskState s = rs_out(run.out);
    std::array<TowerElement, 3> e;
    for (std::size_t i = 0; i < 3; ++i)
        e[i] = TowerElement::from_byte(std::uint8_t(run.out.err[i].lane(0)));
    aux.error = e[0] ^ e[1] ^ e[2];
    for (std::size_t j = 0; j < 4; ++j) {
        aux.infect_masks[j] = rng.byte();
        auto rj = TowerElement::from_byte(aux.infect_masks[j]);
        aux.infections[j] = sbox_output_map().apply(infection_product(aux.error, rj).byte());
    }
    // share-wise, as the lane datapath does: d0 gets E_0 R, d1 gets (E_1 ^ E_2) R
    auto r0 = TowerElement::from_byte(aux.infect_masks[0]);
    s.data[0] ^= sbox_output_map().apply(infection_product(e[0], r0).byte());
    s.data[1] ^= sbox_output_map().apply(infection_product(e[1] ^ e[2], r0).byte());
    return s;
}

}  // namespace rsmask
