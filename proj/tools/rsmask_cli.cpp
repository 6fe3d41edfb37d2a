// rsmask: fault, leakage and verification campaigns on the simulated S-boxes.
//
//   rsmask verify
//   rsmask sifa --config ti.json --traces 20000 --out out/ti
//   rsmask nodes --model rsmask

#include "rsmask/campaign.h"
#include "rsmask/verify.h"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>

using namespace rsmask;
using nlohmann::json;

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_sigint(int) { g_stop.store(true); }

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed, traces;
    std::optional<int> workers;
    std::optional<std::string> out, model;
};

CampaignConfig resolve(const Options& o) {
    json j = json::object();
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in)
            throw ConfigError("cannot read config " + o.config);
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config parse error: ") + e.what());
        }
        if (!j.is_object())
            throw ConfigError("config must be a JSON object");
    }
    if (o.seed)
        j["seed"] = *o.seed;
    if (o.traces)
        j["traces"] = *o.traces;
    if (o.workers)
        j["workers"] = *o.workers;
    if (o.out)
        j["out"] = *o.out;
    if (o.model)
        j["model"] = *o.model;
    return parse_config(j);
}

void note_truncated(bool t) {
    if (t)
        std::cerr << "interrupted: partial artifacts written\n";
}

int cmd_verify(const Options& o) {
    auto results = run_verify();
    bool ok = true;
    json rep = json::array();
    for (const auto& r : results) {
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
        ok = ok && r.pass;
        rep.push_back({{"suite", r.name}, {"pass", r.pass}, {"detail", r.detail}});
    }
    if (o.out) {
        std::filesystem::create_directories(*o.out);
        std::ofstream f(std::filesystem::path(*o.out) / "verify.json");
        f << json{{"tool", kToolName}, {"version", kToolVersion}, {"suites", rep}, {"pass", ok}}.dump(2) << '\n';
    }
    std::cout << (ok ? "all suites passed" : "verification FAILED") << '\n';
    return ok ? 0 : 1;
}

int cmd_column_sifa(const CampaignConfig& c) {
    auto r = run_column_sifa(c, &g_stop);
    write_column_sifa(c, r, c.out);
    std::cout << "column sifa " << to_string(c.model) << ": " << r.ineffective << " ineffective of " << r.traces
              << " traces, true guess rank " << r.rank << " of " << r.candidates << " scored\n";
    if (r.ineffective < c.min_samples)
        std::cerr << "warning: only " << r.ineffective << " ineffective ciphertexts\n";
    note_truncated(r.truncated);
    return 0;
}

int cmd_sifa(const Options& o) {
    auto c = resolve(o);
    if (c.column_attack)
        return cmd_column_sifa(c);
    auto r = run_sifa(c, &g_stop);
    write_sifa(c, r, c.out);
    std::cout << "sifa " << to_string(c.model) << ": " << r.ineffective << " ineffective of " << r.traces
              << " traces, true key 0x" << std::hex << int(r.true_key) << std::dec << " rank "
              << r.ranking.rank_of(r.true_key) << ", sustained rank 1 from "
              << (r.crossover < 0 ? std::string("never") : std::to_string(r.crossover)) << '\n';
    if (r.ineffective < c.min_samples)
        std::cerr << "warning: only " << r.ineffective << " ineffective ciphertexts\n";
    note_truncated(r.truncated);
    return 0;
}

int cmd_tvla(const Options& o) {
    auto c = resolve(o);
    auto r = run_tvla(c, &g_stop);
    write_tvla(c, r, c.out);
    std::cout << "tvla " << to_string(c.model) << ": " << r.traces << " traces, max|t| = " << r.report.max_abs_t
              << (r.report.leaks() ? " (leakage detected)" : " (below 4.5)") << '\n';
    note_truncated(r.truncated);
    return 0;
}

int cmd_distribution(const Options& o) {
    auto c = resolve(o);
    auto r = run_distribution(c, &g_stop);
    write_distribution(c, r, c.out);
    std::cout << "distribution " << to_string(c.model) << ": faulty n=" << r.faulty_effective.n()
              << " p=" << r.p_faulty << ", correct-ineffective n=" << r.correct_ineffective.n() << " p=" << r.p_correct
              << '\n';
    note_truncated(r.truncated);
    return 0;
}

int cmd_infective(const Options& o) {
    auto c = resolve(o);
    auto models = c.compare.empty() ? std::vector<Model>{Model::kRsMask, Model::kInfective} : c.compare;
    std::vector<DifferentialResult> rs;
    for (auto m : models) {
        if (g_stop)
            break;
        rs.push_back(run_differential(c, m, &g_stop));
        const auto& r = rs.back();
        std::cout << "differential " << to_string(m) << ": " << r.pairs << " pairs, true key rank "
                  << (r.pairs ? r.ranking.rank_of(r.true_key) : 0) << '\n';
    }
    write_differential(c, rs, c.out);
    note_truncated(g_stop.load());
    return 0;
}

int cmd_nodes(const Options& o) {
    auto c = resolve(o);
    write_nodes(c.model, c.out);
    for (const auto& n : catalog(c.model).nodes)
        std::cout << n.id << " width=" << n.width << " stage=" << n.stage << (n.reg ? " reg" : "") << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RS-Mask S-box simulator: fault injection, SIFA, differential ranking and TVLA"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--config", o.config, "JSON campaign config")->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "master seed");
    app.add_option("--traces", o.traces, "number of traces");
    app.add_option("--workers", o.workers, "worker threads")->check(CLI::Range(1, 1024));
    app.add_option("--out", o.out, "output directory");
    app.add_option("--model", o.model, "unprotected | ti | rsmask | infective");

    int (*fn)(const Options&) = nullptr;
    auto sub = [&](const char* name, const char* help, int (*f)(const Options&)) {
        app.add_subcommand(name, help)->callback([&fn, f] { fn = f; });
    };
    sub("verify", "run the built-in oracle suites", cmd_verify);
    sub("sifa", "statistical ineffective fault attack on one key byte", cmd_sifa);
    sub("tvla", "Welch t-test on simulated leakage", cmd_tvla);
    sub("distribution", "S-box output histograms under fault", cmd_distribution);
    sub("infective", "differential ranking, plain vs infective RS-Mask", cmd_infective);
    sub("nodes", "dump the fault-node catalog", cmd_nodes);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    std::signal(SIGINT, on_sigint);
    try {
        return fn(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
