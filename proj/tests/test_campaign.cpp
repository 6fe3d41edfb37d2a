#include "rsmask/campaign.h"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace rsmask;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("rsmask_test_" + name);
    fs::remove_all(p);
    return p;
}

CampaignConfig distribution_config(Model m, const std::string& node, int width) {
    CampaignConfig c;
    c.model = m;
    c.samples = 100000;
    FaultSpec f;
    f.node = node;
    f.mask = (1u << width) - 1;
    c.faults = std::vector<FaultSpec>{f};
    return c;
}

int width_of(Model m, const std::string& id) {
    for (const auto& n : catalog(m).nodes)
        if (n.id == id)
            return n.width;
    return -1;
}

}  // namespace

TEST(Config, DefaultsFromEmptyObject) {
    auto c = parse_config(json::object());
    EXPECT_EQ(c.model, Model::kTi);
    EXPECT_EQ(c.traces, 10000u);
    EXPECT_FALSE(c.key);
    EXPECT_FALSE(c.faults);
}

TEST(Config, RejectsBadInput) {
    EXPECT_THROW(parse_config(json::array()), ConfigError);
    EXPECT_THROW(parse_config(json{{"bogus", 1}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"model", "aes"}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"key", "0011"}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"traces", -5}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"traces", 1.5}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"target_byte", 16}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"projection", "nibble"}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"faults", json{{"node", "x"}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"faults", json::array({json{{"kind", "stuck-at-0"}}})}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"faults", json::array({json{{"node", "inv.z.s0"}, {"colour", 1}}})}}),
                 ConfigError);
}

TEST(Config, FaultNodeCheckedAgainstModel) {
    json f = json::array({json{{"node", "inv.mul_z1.hh.b.s0"}}});
    EXPECT_NO_THROW(parse_config(json{{"model", "rsmask"}, {"faults", f}}));
    EXPECT_THROW(parse_config(json{{"model", "unprotected"}, {"faults", f}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"model", "ti"}, {"faults", json::array({json{{"node", "rpath.d"}}})}}),
                 ConfigError);
}

TEST(Config, LoadRejectsMalformedFile) {
    auto dir = scratch("badcfg");
    fs::create_directories(dir);
    std::ofstream(dir / "c.json") << "{\"model\": ";
    EXPECT_THROW(load_config(dir / "c.json"), ConfigError);
    EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
}

TEST(Config, RoundTripAndHash) {
    json j{{"model", "rsmask"},
           {"key", "000102030405060708090a0b0c0d0e0f"},
           {"traces", 1234},
           {"seed", 9},
           {"faults", json::array({json{{"node", "inv.z.s1"}, {"kind", "bit-flip"}, {"mask", 3}}})}};
    auto c = parse_config(j);
    auto again = parse_config(to_json(c));
    EXPECT_EQ(to_json(c), to_json(again));
    EXPECT_EQ(config_hash(c), config_hash(again));

    auto d = c;
    d.workers = 7;
    d.out = "elsewhere";
    EXPECT_EQ(config_hash(c), config_hash(d));
    d.seed = 10;
    EXPECT_NE(config_hash(c), config_hash(d));
}

TEST(Config, Fnv1aKnownValues) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Helpers, FinalRoundPosition) {
    // ShiftRows moves (row r, column c) to column c - r
    for (int b = 0; b < 16; ++b) {
        int found = -1;
        for (int p = 0; p < 16; ++p)
            if (p % 4 == b % 4 && (p / 4 + p % 4) % 4 == b / 4)
                found = p;
        EXPECT_EQ(final_round_position(b), found) << b;
    }
}

TEST(Helpers, SustainedCrossover) {
    auto pts = [](std::initializer_list<std::pair<int, int>> v) {
        std::vector<CurvePoint> c;
        for (auto [n, r] : v)
            c.push_back(CurvePoint{std::uint64_t(n), 0, 0, r});
        return c;
    };
    EXPECT_EQ(sustained_crossover({}), -1);
    EXPECT_EQ(sustained_crossover(pts({{250, 1}, {500, 1}})), 250);
    EXPECT_EQ(sustained_crossover(pts({{250, 1}, {500, 3}, {1000, 1}, {2000, 1}})), 1000);
    EXPECT_EQ(sustained_crossover(pts({{250, 1}, {500, 1}, {1000, 2}})), -1);
}

TEST(Helpers, CampaignKeyFollowsSeed) {
    CampaignConfig a, b;
    b.seed = 2;
    EXPECT_EQ(campaign_key(a), campaign_key(a));
    EXPECT_NE(campaign_key(a), campaign_key(b));
    a.key = *parse_hex_block("000102030405060708090a0b0c0d0e0f");
    EXPECT_EQ(campaign_key(a), *a.key);
}

TEST(Sifa, NeverFiringFaultLeavesEverythingIneffective) {
    CampaignConfig c;
    auto f = default_fault(c.model);
    f.probability = 0;
    c.faults = std::vector<FaultSpec>{f};
    c.traces = 2000;
    auto r = run_sifa(c);
    EXPECT_EQ(r.traces, 2000u);
    EXPECT_EQ(r.ineffective, 2000u);
    EXPECT_EQ(r.effective, 0u);
    EXPECT_EQ(r.faulty_effective.n(), 0u);
}

TEST(Sifa, TiRecoversKeyAndCountsAddUp) {
    CampaignConfig c;
    c.traces = 8000;
    auto r = run_sifa(c);
    EXPECT_EQ(r.ineffective + r.effective, r.traces);
    EXPECT_EQ(r.true_key, expand_key_reference(campaign_key(c))[10][std::size_t(r.target)]);
    EXPECT_EQ(r.ranking.rank_of(r.true_key), 1);
    EXPECT_GE(r.crossover, 0);
}

TEST(Sifa, StopAfterCapsIneffectiveCount) {
    CampaignConfig c;
    c.traces = 100000;
    c.stop_after = 700;
    auto r = run_sifa(c);
    EXPECT_GE(r.ineffective, 700u);
    EXPECT_LT(r.traces, 100000u);
}

TEST(Artifacts, ByteIdenticalAcrossRunsAndWorkers) {
    CampaignConfig c;
    c.model = Model::kRsMask;
    c.traces = 3000;
    auto a = scratch("det_a"), b = scratch("det_b");
    write_sifa(c, run_sifa(c), a);
    c.workers = 3;
    write_sifa(c, run_sifa(c), b);
    for (const char* f : {"sei_curve.csv", "key_ranking.csv", "histograms.csv", "summary.json"}) {
        ASSERT_TRUE(fs::exists(a / f)) << f;
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
    auto head = slurp(a / "sei_curve.csv");
    EXPECT_EQ(head.rfind("# tool=rsmask version=1.0.0 config_hash=" + config_hash(c) + " seed=1\n", 0), 0u);
}

TEST(Artifacts, TruncatedRunIsMarked) {
    CampaignConfig c;
    c.traces = 100000;
    std::atomic<bool> stop{true};
    auto r = run_sifa(c, &stop);
    EXPECT_TRUE(r.truncated);
    auto dir = scratch("trunc");
    write_sifa(c, r, dir);
    EXPECT_NE(slurp(dir / "sei_curve.csv").find("# truncated=true"), std::string::npos);
}

TEST(Differential, PlainRsMaskRecoversInfectiveDoesNot) {
    CampaignConfig c;
    c.traces = 200000;
    c.stop_after = 20000;
    auto plain = run_differential(c, Model::kRsMask);
    auto inf = run_differential(c, Model::kInfective);
    EXPECT_EQ(plain.ranking.rank_of(plain.true_key), 1);
    EXPECT_EQ(plain.true_key, inf.true_key);
    EXPECT_GE(inf.pairs, 20000u);
    EXPECT_LT(inf.ranking.score[inf.true_key], 10 * inf.ranking.max_excluding(inf.true_key));
    EXPECT_LT(sustained_crossover(inf.curve), 0);
}

TEST(Distribution, TiDefaultNodeIsBiased) {
    CampaignConfig c;
    c.model = Model::kTi;
    c.samples = 100000;
    auto r = run_distribution(c);
    EXPECT_LT(r.p_faulty, 1e-6);
    EXPECT_LT(r.p_correct, 1e-6);
}

// Output wires and registers from the inversion stage onwards keep both
// histograms uniform.
TEST(Distribution, RsMaskDownstreamNodesStayUniform) {
    for (const char* id : {"inv.mul_z1.hh.b.s0", "inv.mul_z0.ll.b.s1", "inv.mul_z1.hh.q.s1", "inv.z.s2",
                           "inv.y.s0", "inv.d.s2", "inv.inv16.mul_ab.q.s0", "inv.inv16.mul_eb.q.s2",
                           "inv.inv16.e.s0", "map.g0.s0", "pipe.f_5.s1", "out.d0", "out.d1", "out.rs"}) {
        for (auto m : {Model::kRsMask, Model::kInfective}) {
            int w = width_of(m, id);
            ASSERT_GT(w, 0) << id;
            auto r = run_distribution(distribution_config(m, id, w));
            EXPECT_GT(r.faulty_effective.n(), 1000u) << id;
            EXPECT_GT(r.p_faulty, 1e-3) << to_string(m) << ' ' << id;
            EXPECT_GT(r.p_correct, 1e-3) << to_string(m) << ' ' << id;
        }
    }
}

// Characterization: the mapped operand of a final multiplier is multiplied by
// the unmasked inverse y, and operands of the shared multipliers, the zero
// detector and the mask path all see data before randomization. These leak.
TEST(Distribution, RsMaskOperandAndMappingFaultsLeak) {
    for (const char* id : {"inv.mul_z1.hh.a.s0", "inv.mul_z0.ll.a.s2", "inv.inv16.mul_ab.a.s0", "map.mul_g0.hh.b.s0",
                           "f.l1.s0", "rpath.d", "pipe.x_2.s1"}) {
        int w = width_of(Model::kRsMask, id);
        ASSERT_GT(w, 0) << id;
        auto r = run_distribution(distribution_config(Model::kRsMask, id, w));
        EXPECT_LT(std::min(r.p_faulty, r.p_correct), 1e-6) << id;
    }
}

TEST(Tvla, CampaignWrapperMatchesConfig) {
    CampaignConfig c;
    c.model = Model::kUnprotected;
    c.traces = 4000;
    auto r = run_tvla(c);
    EXPECT_EQ(r.traces, 4000u);
    EXPECT_TRUE(r.report.leaks());
}

TEST(Sifa, EmptyFaultListTiesEveryKeyOnTheFullByte) {
    CampaignConfig c;
    c.faults = std::vector<FaultSpec>{};
    c.projection = Projection::kByte;
    c.traces = 20000;
    auto r = run_sifa(c);
    EXPECT_EQ(r.ineffective, 20000u);
    EXPECT_TRUE(r.ranking.all_tied());
    EXPECT_GT(chi2_uniform_p(r.correct_ineffective), 1e-3);
}

TEST(ColumnSifa, TiRecoversFourKeyBytes) {
    CampaignConfig c;
    c.column_attack = true;
    c.traces = 100000;
    c.stop_after = 3000;
    c.column_candidates = 1023;
    auto r = run_column_sifa(c);
    auto k10 = expand_key_reference(campaign_key(c))[10];
    for (std::size_t j = 0; j < 4; ++j)
        EXPECT_EQ(r.true_key[j], k10[std::size_t(r.positions[j])]);
    EXPECT_EQ(r.ineffective, 3000u);
    EXPECT_EQ(r.candidates, 1024u);
    EXPECT_EQ(r.rank, 1u);
    ASSERT_FALSE(r.top.empty());
    EXPECT_EQ(r.top.front().first, r.true_key);
}

TEST(ColumnSifa, RsMaskHidesTheColumnKey) {
    CampaignConfig c;
    c.model = Model::kRsMask;
    c.column_attack = true;
    c.traces = 100000;
    c.stop_after = 3000;
    c.column_candidates = 1023;
    auto r = run_column_sifa(c);
    EXPECT_LT(r.sei_true, r.sei_max_wrong);
    EXPECT_GT(r.rank, 1u);
}

TEST(ColumnSifa, PositionsFollowShiftRowsAndNeedRoundNine) {
    CampaignConfig c;
    c.column_attack = true;
    c.traces = 64;
    auto f = default_fault(c.model, 9, 6);  // row 2, column 1
    c.faults = std::vector<FaultSpec>{f};
    auto r = run_column_sifa(c);
    EXPECT_EQ(r.row, 2);
    // column (1 - 2) mod 4 = 3 after ShiftRows, then each row shifts again
    EXPECT_EQ(r.positions, (std::array<int, 4>{12, 9, 6, 3}));
    c.faults = std::vector<FaultSpec>{default_fault(c.model, 10, 6)};
    EXPECT_THROW(run_column_sifa(c), ConfigError);
}
