#include "rsmask/campaign.h"

#include "rsmask/parallel.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace rsmask {

using nlohmann::json;

// ---- configuration -----------------------------------------------------------

namespace {

const std::set<std::string> kKeys = {
    "model",      "key",        "plaintext",        "faults",           "traces",     "seed",
    "workers",    "out",        "assignment",       "target_byte",      "projection", "stop_after",
    "checkpoint_start", "checkpoint_every", "min_samples", "compare", "sigma",    "partition",
    "tvla_round", "tvla_byte",  "tvla_bit",         "samples",          "alpha",      "column_attack",
    "column_candidates",
};
const std::set<std::string> kFaultKeys = {"node", "kind", "mask", "round", "byte", "stage", "probability"};

Model model_of(const json& v, const char* what) {
    if (!v.is_string())
        throw ConfigError(std::string(what) + ": expected a model name");
    auto m = parse_model(v.get<std::string>());
    if (!m)
        throw ConfigError(std::string(what) + ": unknown model '" + v.get<std::string>() + "'");
    return *m;
}

template <class T>
T number(const json& j, const char* key, T lo, T hi) {
    const json& v = j.at(key);
    if (!v.is_number())
        throw ConfigError(std::string(key) + ": expected a number");
    if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer())
            throw ConfigError(std::string(key) + ": expected an integer");
        if (v.is_number_unsigned()) {
            auto u = v.get<std::uint64_t>();
            if (u > std::uint64_t(hi))
                throw ConfigError(std::string(key) + ": out of range");
            return T(u);
        }
        auto s = v.get<std::int64_t>();
        if (s < std::int64_t(lo) || (s >= 0 && std::uint64_t(s) > std::uint64_t(hi)))
            throw ConfigError(std::string(key) + ": out of range");
        return T(s);
    } else {
        T x = v.get<T>();
        if (!(x >= lo && x <= hi))
            throw ConfigError(std::string(key) + ": out of range");
        return x;
    }
}

std::optional<Block> block_or_random(const json& v, const char* key) {
    if (!v.is_string())
        throw ConfigError(std::string(key) + ": expected 32 hex digits or \"random\"");
    auto s = v.get<std::string>();
    if (s == "random")
        return std::nullopt;
    auto b = parse_hex_block(s);
    if (!b)
        throw ConfigError(std::string(key) + ": expected 32 hex digits or \"random\"");
    return b;
}

FaultSpec parse_fault(const json& f) {
    if (!f.is_object())
        throw ConfigError("faults: each entry must be an object");
    for (auto it = f.begin(); it != f.end(); ++it)
        if (!kFaultKeys.count(it.key()))
            throw ConfigError("faults: unknown key '" + it.key() + "'");
    FaultSpec s;
    if (!f.contains("node") || !f["node"].is_string())
        throw ConfigError("faults: 'node' is required");
    s.node = f["node"].get<std::string>();
    if (f.contains("kind")) {
        auto k = f["kind"].is_string() ? parse_fault_kind(f["kind"].get<std::string>()) : std::nullopt;
        if (!k)
            throw ConfigError("faults: unknown kind");
        s.kind = *k;
    }
    if (f.contains("mask"))
        s.mask = number<unsigned>(f, "mask", 0, 255);
    if (f.contains("round"))
        s.round = number<int>(f, "round", 1, 10);
    if (f.contains("byte"))
        s.byte = number<int>(f, "byte", 0, 15);
    if (f.contains("stage"))
        s.stage = number<int>(f, "stage", 0, 10);
    if (f.contains("probability"))
        s.probability = number<double>(f, "probability", 0.0, 1.0);
    return s;
}

json fault_json(const FaultSpec& f) {
    return {{"node", f.node},   {"kind", std::string(to_string(f.kind))},
            {"mask", f.mask},   {"round", f.round},
            {"byte", f.byte},   {"stage", f.stage},
            {"probability", f.probability}};
}

}  // namespace

CampaignConfig parse_config(const json& j) {
    if (!j.is_object())
        throw ConfigError("config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!kKeys.count(it.key()))
            throw ConfigError("unknown config key '" + it.key() + "'");
    CampaignConfig c;
    try {
        if (j.contains("model"))
            c.model = model_of(j["model"], "model");
        if (j.contains("key"))
            c.key = block_or_random(j["key"], "key");
        if (j.contains("plaintext"))
            c.plaintext = block_or_random(j["plaintext"], "plaintext");
        if (j.contains("faults")) {
            if (!j["faults"].is_array())
                throw ConfigError("faults: expected an array");
            std::vector<FaultSpec> fs;
            for (const auto& f : j["faults"])
                fs.push_back(parse_fault(f));
            c.faults = fs;
        }
        if (j.contains("traces"))
            c.traces = number<std::uint64_t>(j, "traces", 1, std::uint64_t(1) << 40);
        if (j.contains("seed"))
            c.seed = number<std::uint64_t>(j, "seed", 0, ~std::uint64_t(0));
        if (j.contains("workers"))
            c.workers = number<int>(j, "workers", 1, 1024);
        if (j.contains("out")) {
            if (!j["out"].is_string())
                throw ConfigError("out: expected a path");
            c.out = j["out"].get<std::string>();
        }
        if (j.contains("assignment")) {
            auto a = j["assignment"].is_string() ? j["assignment"].get<std::string>() : "";
            if (a == "paired")
                c.datapath.assignment = MaskAssignment::kPaired;
            else if (a == "crossed")
                c.datapath.assignment = MaskAssignment::kCrossed;
            else
                throw ConfigError("assignment: expected \"paired\" or \"crossed\"");
        }
        if (j.contains("target_byte"))
            c.target_byte = number<int>(j, "target_byte", -1, 15);
        if (j.contains("projection")) {
            if (!j["projection"].is_string() || !parse_projection(j["projection"].get<std::string>(), c.projection))
                throw ConfigError("projection: expected byte, tower-low or tower-high");
        }
        if (j.contains("stop_after"))
            c.stop_after = number<std::uint64_t>(j, "stop_after", 0, std::uint64_t(1) << 40);
        if (j.contains("checkpoint_start"))
            c.checkpoint_start = number<std::uint64_t>(j, "checkpoint_start", 1, std::uint64_t(1) << 40);
        if (j.contains("checkpoint_every"))
            c.checkpoint_every = number<std::uint64_t>(j, "checkpoint_every", 0, std::uint64_t(1) << 40);
        if (j.contains("min_samples"))
            c.min_samples = number<std::uint64_t>(j, "min_samples", 1, std::uint64_t(1) << 40);
        if (j.contains("compare")) {
            if (!j["compare"].is_array())
                throw ConfigError("compare: expected an array of model names");
            for (const auto& m : j["compare"])
                c.compare.push_back(model_of(m, "compare"));
        }
        if (j.contains("column_attack")) {
            if (!j["column_attack"].is_boolean())
                throw ConfigError("column_attack: expected true or false");
            c.column_attack = j["column_attack"].get<bool>();
        }
        if (j.contains("column_candidates"))
            c.column_candidates = number<std::uint64_t>(j, "column_candidates", 0, (std::uint64_t(1) << 32) - 1);
        if (j.contains("sigma"))
            c.sigma = number<double>(j, "sigma", 0.0, 1e12);
        if (j.contains("partition")) {
            auto p = j["partition"].is_string() ? j["partition"].get<std::string>() : "";
            if (p == "sbox-output-bit")
                c.partition = Partition::kSboxOutputBit;
            else if (p == "fixed-vs-random")
                c.partition = Partition::kFixedVsRandom;
            else
                throw ConfigError("partition: expected sbox-output-bit or fixed-vs-random");
        }
        if (j.contains("tvla_round"))
            c.tvla_round = number<int>(j, "tvla_round", 1, 10);
        if (j.contains("tvla_byte"))
            c.tvla_byte = number<int>(j, "tvla_byte", 0, 15);
        if (j.contains("tvla_bit"))
            c.tvla_bit = number<int>(j, "tvla_bit", 0, 7);
        if (j.contains("samples"))
            c.samples = number<std::uint64_t>(j, "samples", 1, std::uint64_t(1) << 40);
        if (j.contains("alpha"))
            c.alpha = number<double>(j, "alpha", 0.0, 1.0);
    } catch (const json::exception& e) {
        throw ConfigError(e.what());
    }

    // node ids are checked before anything runs
    if (c.faults) {
        std::vector<Model> models{c.model};
        models.insert(models.end(), c.compare.begin(), c.compare.end());
        for (auto m : models)
            for (const auto& f : *c.faults) {
                try {
                    validate_fault(f, m);
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(std::string(to_string(m)) + ": " + e.what());
                }
            }
    }
    return c;
}

CampaignConfig load_config(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in)
        throw ConfigError("cannot read config " + p.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_config(j);
}

json to_json(const CampaignConfig& c) {
    json j;
    j["model"] = std::string(to_string(c.model));
    j["key"] = c.key ? to_hex(*c.key) : "random";
    j["plaintext"] = c.plaintext ? to_hex(*c.plaintext) : "random";
    if (c.faults) {
        j["faults"] = json::array();
        for (const auto& f : *c.faults)
            j["faults"].push_back(fault_json(f));
    }
    j["traces"] = c.traces;
    j["seed"] = c.seed;
    j["assignment"] = c.datapath.assignment == MaskAssignment::kPaired ? "paired" : "crossed";
    j["target_byte"] = c.target_byte;
    j["projection"] = to_string(c.projection);
    j["stop_after"] = c.stop_after;
    j["checkpoint_start"] = c.checkpoint_start;
    j["checkpoint_every"] = c.checkpoint_every;
    j["min_samples"] = c.min_samples;
    j["compare"] = json::array();
    for (auto m : c.compare)
        j["compare"].push_back(std::string(to_string(m)));
    j["column_attack"] = c.column_attack;
    j["column_candidates"] = c.column_candidates;
    j["sigma"] = c.sigma;
    j["partition"] = c.partition == Partition::kSboxOutputBit ? "sbox-output-bit" : "fixed-vs-random";
    j["tvla_round"] = c.tvla_round;
    j["tvla_byte"] = c.tvla_byte;
    j["tvla_bit"] = c.tvla_bit;
    j["samples"] = c.samples;
    j["alpha"] = c.alpha;
    return j;
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string config_hash(const CampaignConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)fnv1a64(to_json(c).dump()));
    return buf;
}

FaultSpec default_fault(Model m, int round, int byte) {
    FaultSpec f;
    f.node = m == Model::kUnprotected ? "inv.mul_z1.hh.b" : "inv.mul_z1.hh.b.s0";
    f.kind = FaultKind::kStuckAt0;
    f.mask = 0xFF;
    f.round = round;
    f.byte = byte;
    return f;
}

Block campaign_key(const CampaignConfig& c) {
    if (c.key)
        return *c.key;
    Rng rng(c.seed, {std::uint64_t(Stream::kKey)});
    Block k;
    for (auto& b : k)
        b = rng.byte();
    return k;
}

int final_round_position(int byte) {
    int col = byte / 4, row = byte % 4;
    return 4 * ((col - row + 4) % 4) + row;
}

std::int64_t sustained_crossover(const std::vector<CurvePoint>& curve) {
    std::int64_t from = -1;
    for (auto it = curve.rbegin(); it != curve.rend() && it->rank == 1; ++it)
        from = std::int64_t(it->n);
    return from;
}

// ---- runners -----------------------------------------------------------------

namespace {

struct LaneBytes {
    std::uint64_t lanes = 0;
    Lanes effective = 0;
    std::array<std::uint8_t, 64> ct{}, ct_correct{}, out{}, out_faulty{};
};

std::vector<FaultSpec> faults_or(const CampaignConfig& c, FaultSpec def) {
    return c.faults ? *c.faults : std::vector<FaultSpec>{def};
}

int target_position(const CampaignConfig& c, const std::vector<FaultSpec>& faults) {
    if (c.target_byte >= 0)
        return c.target_byte;
    if (faults.empty())
        return 0;
    const auto& f = faults.front();
    int p = final_round_position(f.byte);
    // an earlier fault passes one more ShiftRows before reaching the output
    return f.round == 10 ? p : final_round_position(p);
}

bool is_checkpoint(const CampaignConfig& c, std::uint64_t n) {
    if (c.checkpoint_every)
        return n % c.checkpoint_every == 0;
    for (std::uint64_t k = c.checkpoint_start; k <= n; k *= 2)
        if (k == n)
            return true;
    return false;
}

// Random-plaintext AES batches under a fixed key; returns the target
// ciphertext byte pair and S-box ground truth per lane.
struct AesBatches {
    const CampaignConfig& c;
    EncryptConfig ec;
    Block key;
    int target;

    LaneBytes operator()(std::uint64_t batch) const {
        BatchInput in;
        Rng prng(c.seed, {batch, std::uint64_t(Stream::kPlaintext)});
        for (std::size_t i = 0; i < 16; ++i) {
            in.key[i] = W8::broadcast(key[i]);
            in.pt[i] = c.plaintext ? W8::broadcast((*c.plaintext)[i]) : prng.word<8>();
        }
        BatchResult r;
        encrypt_batch(ec, c.seed, batch, in, r);
        LaneBytes o;
        o.lanes = std::min<std::uint64_t>(64, c.traces - batch * 64);
        o.effective = r.effective;
        o.ct = unpack(r.ct[std::size_t(target)]);
        o.ct_correct = unpack(r.ct_correct[std::size_t(target)]);
        o.out = unpack(r.target_out);
        o.out_faulty = unpack(r.target_out_faulty);
        return o;
    }
};

CurvePoint point(std::uint64_t n, const KeyRanking& r, std::uint8_t k) {
    return {n, r.score[k], r.max_excluding(k), r.rank_of(k)};
}

}  // namespace

SifaResult run_sifa(const CampaignConfig& c, const std::atomic<bool>* stop) {
    auto faults = faults_or(c, default_fault(c.model));
    EncryptConfig ec;
    ec.model = c.model;
    ec.datapath = c.datapath;
    ec.faults = faults;
    if (!faults.empty()) {
        ec.observe_round = faults.front().round;
        ec.observe_byte = faults.front().byte;
    }
    validate(ec);

    SifaResult res;
    Block key = campaign_key(c);
    res.target = target_position(c, faults);
    res.true_key = expand_key_reference(key)[10][std::size_t(res.target)];
    AesBatches gen{c, ec, key, res.target};

    SifaAccumulator acc(c.projection);
    bool done = false;
    auto consume = [&](std::uint64_t, LaneBytes&& b) {
        for (std::size_t l = 0; l < b.lanes && !done; ++l) {
            ++res.traces;
            if ((b.effective >> l) & 1) {
                ++res.effective;
                res.faulty_effective.add(b.out_faulty[l]);
                continue;
            }
            ++res.ineffective;
            res.correct_ineffective.add(b.out[l]);
            acc.add(b.ct[l]);
            if (is_checkpoint(c, res.ineffective))
                res.curve.push_back(point(res.ineffective, acc.ranking(), res.true_key));
            done = c.stop_after && res.ineffective >= c.stop_after;
        }
        return !done;
    };
    std::uint64_t batches = (c.traces + 63) / 64;
    std::uint64_t used = run_ordered<LaneBytes>(batches, c.workers, gen, consume, stop);
    res.truncated = used < batches && !done;
    res.ranking = acc.ranking();
    if (acc.n() && (res.curve.empty() || res.curve.back().n != acc.n()))
        res.curve.push_back(point(acc.n(), res.ranking, res.true_key));
    res.crossover = sustained_crossover(res.curve);
    return res;
}

namespace {

struct ColumnLanes {
    std::uint64_t lanes = 0;
    Lanes effective = 0;
    std::array<ColumnBytes, 64> ct{};
};

std::uint32_t pack_guess(const ColumnBytes& k) {
    return std::uint32_t(k[0]) << 24 | std::uint32_t(k[1]) << 16 | std::uint32_t(k[2]) << 8 | k[3];
}

ColumnBytes unpack_guess(std::uint32_t g) {
    return {std::uint8_t(g >> 24), std::uint8_t(g >> 16), std::uint8_t(g >> 8), std::uint8_t(g)};
}

struct GuessChunk {
    std::uint64_t above = 0;  // guesses that outrank the true one
    double max_wrong = 0;
    std::vector<std::pair<std::uint32_t, double>> top;
};

bool better(const std::pair<std::uint32_t, double>& a, const std::pair<std::uint32_t, double>& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
}

constexpr std::size_t kTopGuesses = 32;

void keep_top(std::vector<std::pair<std::uint32_t, double>>& v) {
    std::sort(v.begin(), v.end(), better);
    if (v.size() > kTopGuesses)
        v.resize(kTopGuesses);
}

}  // namespace

ColumnSifaResult run_column_sifa(const CampaignConfig& c, const std::atomic<bool>* stop) {
    auto faults = faults_or(c, default_fault(c.model, 9));
    if (faults.empty() || faults.front().round != 9)
        throw ConfigError("column_attack: the first fault must sit in round 9");
    EncryptConfig ec;
    ec.model = c.model;
    ec.datapath = c.datapath;
    ec.faults = faults;
    ec.observe_round = 9;
    ec.observe_byte = faults.front().byte;
    validate(ec);

    ColumnSifaResult res;
    Block key = campaign_key(c);
    auto k10 = expand_key_reference(key)[10];
    res.row = faults.front().byte % 4;
    int col = final_round_position(faults.front().byte) / 4;
    for (int j = 0; j < 4; ++j) {
        res.positions[std::size_t(j)] = final_round_position(4 * col + j);
        res.true_key[std::size_t(j)] = k10[std::size_t(res.positions[std::size_t(j)])];
    }

    auto gen = [&](std::uint64_t batch) {
        BatchInput in;
        Rng prng(c.seed, {batch, std::uint64_t(Stream::kPlaintext)});
        for (std::size_t i = 0; i < 16; ++i) {
            in.key[i] = W8::broadcast(key[i]);
            in.pt[i] = c.plaintext ? W8::broadcast((*c.plaintext)[i]) : prng.word<8>();
        }
        BatchResult r;
        encrypt_batch(ec, c.seed, batch, in, r);
        ColumnLanes o;
        o.lanes = std::min<std::uint64_t>(64, c.traces - batch * 64);
        o.effective = r.effective;
        for (std::size_t j = 0; j < 4; ++j) {
            auto b = unpack(r.ct[std::size_t(res.positions[j])]);
            for (std::size_t l = 0; l < 64; ++l)
                o.ct[l][j] = b[l];
        }
        return o;
    };
    std::vector<ColumnBytes> corpus;
    bool done = false;
    auto consume = [&](std::uint64_t, ColumnLanes&& b) {
        for (std::size_t l = 0; l < b.lanes && !done; ++l) {
            ++res.traces;
            if ((b.effective >> l) & 1) {
                ++res.effective;
                continue;
            }
            ++res.ineffective;
            corpus.push_back(b.ct[l]);
            done = c.stop_after && res.ineffective >= c.stop_after;
        }
        return !done;
    };
    std::uint64_t batches = (c.traces + 63) / 64;
    std::uint64_t used = run_ordered<ColumnLanes>(batches, c.workers, gen, consume, stop);
    res.truncated = used < batches && !done;
    if (corpus.empty() || res.truncated)
        return res;

    ColumnSifaScorer scorer(std::move(corpus), res.row);
    std::uint32_t truth = pack_guess(res.true_key);
    res.sei_true = scorer.sei(res.true_key);

    std::vector<std::uint32_t> sampled;
    if (c.column_candidates) {
        std::set<std::uint32_t> seen{truth};
        Rng g(c.seed, {std::uint64_t(Stream::kColumn)});
        while (sampled.size() < c.column_candidates) {
            auto v = std::uint32_t(g.next());
            if (seen.insert(v).second)
                sampled.push_back(v);
        }
    }
    const std::uint64_t total = c.column_candidates ? sampled.size() : (std::uint64_t(1) << 32);
    constexpr std::uint64_t kChunk = 1 << 12;
    auto score_chunk = [&](std::uint64_t chunk) {
        GuessChunk o;
        std::uint64_t end = std::min(total, (chunk + 1) * kChunk);
        for (std::uint64_t i = chunk * kChunk; i < end; ++i) {
            std::uint32_t g = c.column_candidates ? sampled[i] : std::uint32_t(i);
            if (g == truth)
                continue;
            double s = scorer.sei(unpack_guess(g));
            o.above += s > res.sei_true || (s == res.sei_true && g < truth);
            o.max_wrong = std::max(o.max_wrong, s);
            o.top.emplace_back(g, s);
            if (o.top.size() >= 4 * kTopGuesses)
                keep_top(o.top);
        }
        keep_top(o.top);
        return o;
    };
    std::vector<std::pair<std::uint32_t, double>> top{{truth, res.sei_true}};
    std::uint64_t above = 0;
    auto merge = [&](std::uint64_t, GuessChunk&& o) {
        above += o.above;
        res.sei_max_wrong = std::max(res.sei_max_wrong, o.max_wrong);
        top.insert(top.end(), o.top.begin(), o.top.end());
        keep_top(top);
        return true;
    };
    std::uint64_t chunks = (total + kChunk - 1) / kChunk;
    std::uint64_t scored = run_ordered<GuessChunk>(chunks, c.workers, score_chunk, merge, stop);
    res.truncated = scored < chunks;
    res.candidates = std::min(total, scored * kChunk) + (c.column_candidates ? 1 : 0);
    res.rank = above + 1;
    for (auto& [g, s] : top)
        res.top.emplace_back(unpack_guess(g), s);
    return res;
}

DifferentialResult run_differential(const CampaignConfig& c, Model m, const std::atomic<bool>* stop) {
    auto faults = faults_or(c, default_fault(m, 9));
    EncryptConfig ec;
    ec.model = m;
    ec.datapath = c.datapath;
    ec.faults = faults;
    validate(ec);

    DifferentialResult res;
    res.model = m;
    Block key = campaign_key(c);
    res.target = target_position(c, faults);
    res.true_key = expand_key_reference(key)[10][std::size_t(res.target)];
    AesBatches gen{c, ec, key, res.target};

    DifferentialAccumulator acc;
    bool done = false;
    auto consume = [&](std::uint64_t, LaneBytes&& b) {
        for (std::size_t l = 0; l < b.lanes && !done; ++l) {
            ++res.traces;
            if (!((b.effective >> l) & 1))
                continue;
            ++res.pairs;
            acc.add(b.ct_correct[l], b.ct[l]);
            if (is_checkpoint(c, res.pairs))
                res.curve.push_back(point(res.pairs, acc.ranking(), res.true_key));
            done = c.stop_after && res.pairs >= c.stop_after;
        }
        return !done;
    };
    std::uint64_t batches = (c.traces + 63) / 64;
    std::uint64_t used = run_ordered<LaneBytes>(batches, c.workers, gen, consume, stop);
    res.truncated = used < batches && !done;
    res.ranking = acc.ranking();
    if (acc.n() && (res.curve.empty() || res.curve.back().n != acc.n()))
        res.curve.push_back(point(acc.n(), res.ranking, res.true_key));
    return res;
}

namespace {

struct SboxBatch {
    Lanes effective = 0;
    std::array<std::uint8_t, 64> correct{}, faulty{};
};

}  // namespace

DistributionResult run_distribution(const CampaignConfig& c, const std::atomic<bool>* stop) {
    auto faults = faults_or(c, default_fault(c.model));
    for (const auto& f : faults)
        validate_fault(f, c.model);
    const Model m = c.model;

    auto produce = [&](std::uint64_t batch) {
        Rng xr(c.seed, {batch, std::uint64_t(Stream::kStandalone), 0});
        W8 x = xr.word<8>();
        Slots in{};
        if (m == Model::kUnprotected) {
            in[0] = x;
        } else {
            in[1] = xr.word<8>();
            in[2] = xr.word<8>();
            in[0] = x ^ in[1] ^ in[2];
        }
        Rng frng(c.seed, {batch, std::uint64_t(Stream::kFault)});
        auto armed = arm_faults(m, faults, -1, 0, frng);
        Probe p;
        SboxLanesOut good, bad;
        Rng r1(c.seed, {batch, std::uint64_t(Stream::kStandalone), 1}), r2 = r1;
        p.reset();
        eval_sbox(m, p, r1, in, good, c.datapath);
        p.reset();
        p.arm(armed, &frng);
        eval_sbox(m, p, r2, in, bad, c.datapath);
        W8 g = good.out[0] ^ good.out[1] ^ good.out[2], b = bad.out[0] ^ bad.out[1] ^ bad.out[2];
        SboxBatch o;
        for (auto w : (g ^ b).bit)
            o.effective |= w;
        o.correct = unpack(g);
        o.faulty = unpack(b);
        return o;
    };

    DistributionResult res;
    bool done = false;
    auto consume = [&](std::uint64_t, SboxBatch&& b) {
        for (std::size_t l = 0; l < 64; ++l) {
            ++res.evaluations;
            res.faulty_all.add(b.faulty[l]);
            if ((b.effective >> l) & 1) {
                if (res.faulty_effective.n() < c.samples)
                    res.faulty_effective.add(b.faulty[l]);
            } else if (res.correct_ineffective.n() < c.samples) {
                res.correct_ineffective.add(b.correct[l]);
            }
        }
        done = res.faulty_effective.n() >= c.samples && res.correct_ineffective.n() >= c.samples;
        return !done;
    };
    // at most 64 * samples evaluations, so a fault that is almost never
    // (in)effective still terminates
    std::uint64_t batches = std::max<std::uint64_t>(1, c.samples);
    run_ordered<SboxBatch>(batches, c.workers, produce, consume, stop);
    res.truncated = !done && stop && stop->load();
    auto p_or = [](const Histogram& h) { return h.n() ? chi2_uniform_p(h) : std::nan(""); };
    res.p_faulty = p_or(res.faulty_effective);
    res.p_correct = p_or(res.correct_ineffective);
    res.p_all = p_or(res.faulty_all);
    return res;
}

TvlaResult run_tvla(const CampaignConfig& c, const std::atomic<bool>* stop) {
    TvlaConfig t;
    t.model = c.model;
    t.key = campaign_key(c);
    t.traces = c.traces;
    t.sigma = c.sigma;
    t.partition = c.partition;
    t.round = c.tvla_round;
    t.byte = c.tvla_byte;
    t.bit = c.tvla_bit;
    t.fixed_pt = c.plaintext.value_or(Block{});
    t.seed = c.seed;
    t.workers = c.workers;
    return tvla_campaign(t, stop);
}

// ---- artifacts -----------------------------------------------------------------

namespace {

std::string num(double v) {
    if (std::isnan(v))
        return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

json jnum(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

void write_file(const std::filesystem::path& p, const std::string& s) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream o(p, std::ios::binary);
    if (!o)
        throw std::runtime_error("cannot write " + p.string());
    o << s;
}

std::string curve_csv(const std::vector<CurvePoint>& curve, const std::string& prefix = "") {
    std::ostringstream s;
    for (const auto& p : curve)
        s << prefix << p.n << ',' << num(p.sei_correct) << ',' << num(p.sei_max_wrong) << ',' << p.rank << '\n';
    return s.str();
}

std::string ranking_csv(const KeyRanking& r, const std::string& prefix = "") {
    std::ostringstream s;
    for (int i = 0; i < 256; ++i) {
        auto k = r.order[std::size_t(i)];
        s << prefix << i + 1 << ',' << int(k) << ',' << num(r.score[k]) << '\n';
    }
    return s.str();
}

}  // namespace

std::string csv_header(const CampaignConfig& c, bool truncated) {
    std::ostringstream s;
    s << "# tool=" << kToolName << " version=" << kToolVersion << " config_hash=" << config_hash(c)
      << " seed=" << c.seed << '\n';
    if (truncated)
        s << "# truncated=true\n";
    return s.str();
}

json meta(const CampaignConfig& c, bool truncated) {
    return {{"tool", kToolName},
            {"version", kToolVersion},
            {"config_hash", config_hash(c)},
            {"seed", c.seed},
            {"truncated", truncated},
            {"config", to_json(c)}};
}

void write_sifa(const CampaignConfig& c, const SifaResult& r, const std::filesystem::path& dir) {
    std::string h = csv_header(c, r.truncated);
    write_file(dir / "sei_curve.csv", h + "n,sei_correct,sei_max_wrong,rank\n" + curve_csv(r.curve));
    write_file(dir / "key_ranking.csv", h + "rank,key,sei\n" + ranking_csv(r.ranking));
    std::ostringstream hs;
    hs << h << "value,correct_ineffective,faulty_effective\n";
    for (std::size_t v = 0; v < 256; ++v)
        hs << v << ',' << r.correct_ineffective[v] << ',' << r.faulty_effective[v] << '\n';
    write_file(dir / "histograms.csv", hs.str());
    json s = meta(c, r.truncated);
    s["command"] = "sifa";
    s["target_byte"] = r.target;
    s["true_key"] = r.true_key;
    s["traces"] = r.traces;
    s["ineffective"] = r.ineffective;
    s["effective"] = r.effective;
    s["final_rank"] = r.ranking.rank_of(r.true_key);
    s["crossover"] = r.crossover;
    if (r.ineffective < c.min_samples)
        s["warning"] = "fewer ineffective ciphertexts than min_samples";
    write_file(dir / "summary.json", s.dump(2) + "\n");
}

void write_column_sifa(const CampaignConfig& c, const ColumnSifaResult& r, const std::filesystem::path& dir) {
    auto hex4 = [](const ColumnBytes& k) {
        char b[9];
        std::snprintf(b, sizeof b, "%02x%02x%02x%02x", k[0], k[1], k[2], k[3]);
        return std::string(b);
    };
    std::ostringstream t;
    t << csv_header(c, r.truncated) << "rank,guess,sei,true\n";
    for (std::size_t i = 0; i < r.top.size(); ++i)
        t << i + 1 << ',' << hex4(r.top[i].first) << ',' << num(r.top[i].second) << ','
          << (r.top[i].first == r.true_key ? 1 : 0) << '\n';
    write_file(dir / "column_ranking.csv", t.str());
    json s = meta(c, r.truncated);
    s["command"] = "sifa";
    s["attack"] = "column";
    s["positions"] = r.positions;
    s["row"] = r.row;
    s["true_key"] = hex4(r.true_key);
    s["traces"] = r.traces;
    s["ineffective"] = r.ineffective;
    s["effective"] = r.effective;
    s["candidates"] = r.candidates;
    s["sei_true"] = r.sei_true;
    s["sei_max_wrong"] = r.sei_max_wrong;
    s["rank"] = r.rank;
    if (r.ineffective < c.min_samples)
        s["warning"] = "fewer ineffective ciphertexts than min_samples";
    write_file(dir / "summary.json", s.dump(2) + "\n");
}

void write_differential(const CampaignConfig& c, const std::vector<DifferentialResult>& rs,
                        const std::filesystem::path& dir) {
    bool truncated = false;
    for (const auto& r : rs)
        truncated = truncated || r.truncated;
    std::string h = csv_header(c, truncated);
    std::string curve = h + "model,n,sei_correct,sei_max_wrong,rank\n";
    std::string rank = h + "model,rank,key,sei\n";
    json s = meta(c, truncated);
    s["command"] = "infective";
    s["results"] = json::array();
    for (const auto& r : rs) {
        std::string m = std::string(to_string(r.model)) + ",";
        curve += curve_csv(r.curve, m);
        rank += ranking_csv(r.ranking, m);
        s["results"].push_back({{"model", std::string(to_string(r.model))},
                                {"target_byte", r.target},
                                {"true_key", r.true_key},
                                {"traces", r.traces},
                                {"pairs", r.pairs},
                                {"final_rank", r.pairs ? r.ranking.rank_of(r.true_key) : 0},
                                {"recovered", r.pairs && r.ranking.rank_of(r.true_key) == 1}});
    }
    write_file(dir / "differential_curve.csv", curve);
    write_file(dir / "differential_ranking.csv", rank);
    write_file(dir / "summary.json", s.dump(2) + "\n");
}

void write_distribution(const CampaignConfig& c, const DistributionResult& r, const std::filesystem::path& dir) {
    std::ostringstream hs;
    hs << csv_header(c, r.truncated) << "value,faulty_effective,correct_ineffective,faulty_all\n";
    for (std::size_t v = 0; v < 256; ++v)
        hs << v << ',' << r.faulty_effective[v] << ',' << r.correct_ineffective[v] << ',' << r.faulty_all[v] << '\n';
    write_file(dir / "distribution.csv", hs.str());
    json s = meta(c, r.truncated);
    s["command"] = "distribution";
    s["evaluations"] = r.evaluations;
    auto entry = [&](const Histogram& h, double p) {
        return json{{"n", h.n()}, {"sei", h.n() ? jnum(sei(h).sei) : json(nullptr)}, {"chi2_p", jnum(p)},
                    {"uniform", !std::isnan(p) && p > c.alpha}};
    };
    s["faulty_effective"] = entry(r.faulty_effective, r.p_faulty);
    s["correct_ineffective"] = entry(r.correct_ineffective, r.p_correct);
    s["faulty_all"] = entry(r.faulty_all, r.p_all);
    s["alpha"] = c.alpha;
    write_file(dir / "summary.json", s.dump(2) + "\n");
}

void write_tvla(const CampaignConfig& c, const TvlaResult& r, const std::filesystem::path& dir) {
    std::ostringstream ts;
    ts << csv_header(c, r.truncated) << "sample,round,stage,t,degenerate\n";
    int stages = stage_count(c.model);
    for (std::size_t i = 0; i < r.report.t.size(); ++i)
        ts << i << ',' << int(i) / stages + 1 << ',' << int(i) % stages + 1 << ',' << num(r.report.t[i]) << ','
           << (r.report.degenerate[i] ? 1 : 0) << '\n';
    write_file(dir / "tvla.csv", ts.str());
    json s = meta(c, r.truncated);
    s["command"] = "tvla";
    s["traces"] = r.traces;
    s["n_a"] = r.report.n_a;
    s["n_b"] = r.report.n_b;
    s["max_abs_t"] = r.report.max_abs_t;
    s["argmax_sample"] = r.report.argmax;
    s["threshold"] = TTestReport::kThreshold;
    s["leakage_detected"] = r.report.leaks();
    s["degenerate_samples"] = r.report.any_degenerate;
    write_file(dir / "summary.json", s.dump(2) + "\n");
}

void write_nodes(Model m, const std::filesystem::path& dir) {
    std::ostringstream s;
    s << "id,width,stage,reg,region\n";
    for (const auto& n : catalog(m).nodes)
        s << n.id << ',' << n.width << ',' << n.stage << ',' << (n.reg ? 1 : 0) << ',' << n.region << '\n';
    write_file(dir / ("nodes_" + std::string(to_string(m)) + ".csv"), s.str());
}

}  // namespace rsmask
