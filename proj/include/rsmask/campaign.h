#pragma once

// Campaign runners behind the command line: configuration, the fault and
// leakage experiments, and CSV/JSON artifacts.

#include "rsmask/aes.h"
#include "rsmask/analysis.h"
#include "rsmask/leakage.h"

#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsmask {

inline constexpr const char* kToolName = "rsmask";
inline constexpr const char* kToolVersion = "1.0.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CampaignConfig {
    Model model = Model::kTi;
    std::optional<Block> key;        // unset: drawn from the seed
    std::optional<Block> plaintext;  // unset: random per trace
    std::optional<std::vector<FaultSpec>> faults;  // unset: the command's default fault
    std::uint64_t traces = 10000;
    std::uint64_t seed = 1;
    int workers = 1;
    std::string out = "out";
    DatapathOptions datapath{};

    // sifa / infective
    int target_byte = -1;  // ciphertext position; -1 follows the faulted byte
    Projection projection = Projection::kTowerLow;
    std::uint64_t stop_after = 0;  // stop once this many ineffective (sifa) or effective (infective) traces
    std::uint64_t checkpoint_start = 250;
    std::uint64_t checkpoint_every = 0;  // 0: geometric from checkpoint_start
    std::uint64_t min_samples = 100;
    std::vector<Model> compare;  // infective: models to rank side by side
    bool column_attack = false;  // sifa: round-9 fault, four K10 bytes guessed together
    std::uint64_t column_candidates = 4095;  // wrong guesses scored besides the true one; 0: all 2^32

    // tvla
    double sigma = 1.0;
    Partition partition = Partition::kSboxOutputBit;
    int tvla_round = 1, tvla_byte = 0, tvla_bit = 0;

    // distribution
    std::uint64_t samples = 1000000;  // per histogram
    double alpha = 1e-3;              // chi-square significance for "uniform"
};

/// Parse and validate; throws ConfigError. Unknown keys are rejected.
CampaignConfig parse_config(const nlohmann::json& j);
CampaignConfig load_config(const std::filesystem::path& p);
/// Canonical form (excludes workers and out, which do not change results).
nlohmann::json to_json(const CampaignConfig& c);
std::uint64_t fnv1a64(std::string_view s);
std::string config_hash(const CampaignConfig& c);

FaultSpec default_fault(Model m, int round = 10, int byte = 0);
Block campaign_key(const CampaignConfig& c);
/// Ciphertext position that carries the S-box output of `byte` in round 10.
int final_round_position(int byte);

struct CurvePoint {
    std::uint64_t n = 0;
    double sei_correct = 0, sei_max_wrong = 0;
    int rank = 0;
};

/// Smallest checkpoint from which the true key stays at rank 1; -1 if the
/// last checkpoint is not rank 1.
std::int64_t sustained_crossover(const std::vector<CurvePoint>& curve);

struct SifaResult {
    std::uint8_t true_key = 0;
    int target = 0;
    std::uint64_t traces = 0, ineffective = 0, effective = 0;
    std::vector<CurvePoint> curve;
    KeyRanking ranking;
    Histogram correct_ineffective{256}, faulty_effective{256};
    std::int64_t crossover = -1;
    bool truncated = false;
};

SifaResult run_sifa(const CampaignConfig& c, const std::atomic<bool>* stop = nullptr);

struct ColumnSifaResult {
    ColumnBytes true_key{};
    std::array<int, 4> positions{};  // ciphertext bytes, InvMixColumns input order
    int row = 0;
    std::uint64_t traces = 0, ineffective = 0, effective = 0, candidates = 0;
    double sei_true = 0, sei_max_wrong = 0;
    std::uint64_t rank = 0;  // among scored candidates, ties to the lower guess
    std::vector<std::pair<ColumnBytes, double>> top;  // best first
    bool truncated = false;
};

/// Column SIFA for a round-9 fault. Slow: every candidate rescans the corpus.
ColumnSifaResult run_column_sifa(const CampaignConfig& c, const std::atomic<bool>* stop = nullptr);

struct DifferentialResult {
    Model model{};
    std::uint8_t true_key = 0;
    int target = 0;
    std::uint64_t traces = 0, pairs = 0;
    std::vector<CurvePoint> curve;
    KeyRanking ranking;
    bool truncated = false;
};

/// Effective-fault pairs (correct, faulty) at the target ciphertext byte.
DifferentialResult run_differential(const CampaignConfig& c, Model m, const std::atomic<bool>* stop = nullptr);

struct DistributionResult {
    Histogram faulty_effective{256}, correct_ineffective{256}, faulty_all{256};
    double p_faulty = 0, p_correct = 0, p_all = 0;
    std::uint64_t evaluations = 0;
    bool truncated = false;
};

/// Stand-alone S-box with uniform inputs under the configured faults.
DistributionResult run_distribution(const CampaignConfig& c, const std::atomic<bool>* stop = nullptr);

TvlaResult run_tvla(const CampaignConfig& c, const std::atomic<bool>* stop = nullptr);

// ---- artifacts ---------------------------------------------------------------

/// "# tool=... version=... config_hash=... seed=..." plus a truncation marker.
std::string csv_header(const CampaignConfig& c, bool truncated);
nlohmann::json meta(const CampaignConfig& c, bool truncated);

void write_sifa(const CampaignConfig& c, const SifaResult& r, const std::filesystem::path& dir);
void write_column_sifa(const CampaignConfig& c, const ColumnSifaResult& r, const std::filesystem::path& dir);
void write_differential(const CampaignConfig& c, const std::vector<DifferentialResult>& rs,
                        const std::filesystem::path& dir);
void write_distribution(const CampaignConfig& c, const DistributionResult& r, const std::filesystem::path& dir);
void write_tvla(const CampaignConfig& c, const TvlaResult& r, const std::filesystem::path& dir);
void write_nodes(Model m, const std::filesystem::path& dir);

}  // namespace rsmask
