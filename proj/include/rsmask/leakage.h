#pragma once

// Simulated power traces (Hamming weight of the registers written each
// clock, plus Gaussian noise) and Welch's t-test.

#include "rsmask/aes.h"

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

namespace rsmask {

/// Per-sample running mean and variance (Welford, Chan merge).
class MomentAccumulator {
public:
    explicit MomentAccumulator(std::size_t samples = 0) : mean_(samples, 0), m2_(samples, 0) {}

    void add(std::span<const double> trace);
    void merge(const MomentAccumulator& o);
    std::size_t samples() const { return mean_.size(); }
    std::uint64_t n() const { return n_; }
    double mean(std::size_t i) const { return mean_[i]; }
    double variance(std::size_t i) const { return n_ > 1 ? m2_[i] / double(n_ - 1) : 0; }

private:
    std::vector<double> mean_, m2_;
    std::uint64_t n_ = 0;
};

struct TTestReport {
    std::vector<double> t;
    std::vector<bool> degenerate;  // zero variance in both sets: t forced to 0
    double max_abs_t = 0;
    std::size_t argmax = 0;
    std::uint64_t n_a = 0, n_b = 0;
    bool any_degenerate = false;

    static constexpr double kThreshold = 4.5;
    bool leaks() const { return max_abs_t > kThreshold; }
};

/// Throws std::invalid_argument when either set has fewer than 2 traces.
TTestReport welch_t(const MomentAccumulator& a, const MomentAccumulator& b);
TTestReport welch_t(std::span<const std::vector<double>> a, std::span<const std::vector<double>> b);

enum class Partition {
    kSboxOutputBit,   // one bit of an unmasked S-box output (random plaintexts)
    kFixedVsRandom,   // fixed plaintext vs random plaintext, chosen per trace
};

struct TvlaConfig {
    Model model = Model::kRsMask;
    Block key{};
    std::uint64_t traces = 100000;
    double sigma = 1.0;
    Partition partition = Partition::kSboxOutputBit;
    int round = 1;  // partition target, kSboxOutputBit only
    int byte = 0;
    int bit = 0;
    Block fixed_pt{};
    std::uint64_t seed = 1;
    int workers = 1;
};

struct TvlaResult {
    TTestReport report;
    std::uint64_t traces = 0;  // may be short if interrupted
    bool truncated = false;
};

TvlaResult tvla_campaign(const TvlaConfig& cfg, const std::atomic<bool>* stop = nullptr);

}  // namespace rsmask
