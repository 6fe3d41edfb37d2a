#pragma once

// Statistics for fault attacks: histograms, SEI, key rankings and the
// exhaustive checks of the security argument.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rsmask {

class Histogram {
public:
    explicit Histogram(std::size_t bins = 256) : counts_(bins, 0) {}

    void add(std::size_t v, std::uint64_t w = 1) {
        counts_[v] += w;
        n_ += w;
    }
    void merge(const Histogram& o);
    std::size_t bins() const { return counts_.size(); }
    std::uint64_t n() const { return n_; }
    std::uint64_t operator[](std::size_t i) const { return counts_[i]; }
    const std::vector<std::uint64_t>& counts() const { return counts_; }

private:
    std::vector<std::uint64_t> counts_;
    std::uint64_t n_ = 0;
};

struct SeiResult {
    double sei = 0;
    std::uint64_t n = 0;
};

/// Sum over bins of (p_i - 1/bins)^2. Throws std::invalid_argument if empty.
SeiResult sei(const Histogram& h);

/// Pearson chi-square against the uniform distribution; upper tail p-value.
double chi2_uniform_p(const Histogram& h);
double chi2_uniform_p(std::span<const double> probs, double n);

/// What a key hypothesis is scored on. SEI is invariant under bijections, so
/// scoring the full byte InvSbox(c ^ k) ranks every key equally; the attack
/// needs a non-injective view of the recovered S-box input.
enum class Projection { kByte, kTowerLow, kTowerHigh };

std::string to_string(Projection p);
bool parse_projection(std::string_view s, Projection& out);
std::size_t projection_bins(Projection p);
std::uint8_t project(Projection p, std::uint8_t x);

struct KeyRanking {
    std::array<double, 256> score{};        // indexed by key byte
    std::array<std::uint8_t, 256> order{};  // best first, ties to the lower key

    int rank_of(std::uint8_t k) const;  // 1 = best
    double max_excluding(std::uint8_t k) const;
    bool all_tied() const;
};

KeyRanking rank_scores(const std::array<double, 256>& score);

/// Incremental SIFA scorer: one histogram per key candidate of
/// project(InvSbox(c ^ k)).
class SifaAccumulator {
public:
    explicit SifaAccumulator(Projection p = Projection::kTowerLow);
    void add(std::uint8_t c);
    void merge(const SifaAccumulator& o);
    std::uint64_t n() const { return n_; }
    KeyRanking ranking() const;
    Histogram histogram(std::uint8_t k) const;

private:
    Projection proj_;
    std::size_t bins_;
    std::array<std::array<std::uint8_t, 256>, 256> table_{};  // [k][c] -> bin
    std::vector<std::uint64_t> counts_;                        // [k * bins + bin]
    std::uint64_t n_ = 0;
};

/// Incremental differential scorer: histogram of
/// InvSbox(c ^ k) ^ InvSbox(c' ^ k) per key candidate.
class DifferentialAccumulator {
public:
    DifferentialAccumulator();
    void add(std::uint8_t c, std::uint8_t c_faulty);
    void merge(const DifferentialAccumulator& o);
    std::uint64_t n() const { return n_; }
    KeyRanking ranking() const;

private:
    std::vector<std::uint64_t> counts_;  // [k * 256 + delta]
    std::uint64_t n_ = 0;
};

/// Batch forms. Throw std::invalid_argument below min_samples.
KeyRanking sifa_rank(std::span<const std::uint8_t> cts, Projection p = Projection::kTowerLow,
                     std::size_t min_samples = 1);
KeyRanking differential_rank(std::span<const std::pair<std::uint8_t, std::uint8_t>> pairs,
                             std::size_t min_samples = 1);

/// Round-9 column attack. A fault before the round-9 S-box reaches four
/// ciphertext bytes through MixColumns. Guessing those four bytes of K10 and
/// inverting one MixColumns row gives the round-9 S-box output XOR a constant,
/// and four-to-one compression makes the full-byte SEI key dependent.
using ColumnBytes = std::array<std::uint8_t, 4>;

/// Row `row` of InvMixColumns applied to InvSbox(c ^ k) per byte.
std::uint8_t column_value(const ColumnBytes& c, const ColumnBytes& k, int row);

class ColumnSifaScorer {
public:
    ColumnSifaScorer(std::vector<ColumnBytes> cts, int row);
    std::size_t n() const { return cts_.size(); }
    double sei(const ColumnBytes& k) const;

private:
    std::vector<ColumnBytes> cts_;
    std::array<std::array<std::uint8_t, 256>, 4> t_{};  // coef_j * InvSbox(v)
};

/// Shannon MI in bits of a 256x256 joint table (row = first variable).
/// Throws on negative entries or a total off 1 by more than 1e-9.
double mutual_information_exact(std::span<const double> joint);

struct TheoremReport {
    // masking with R: MI(X ^ R; X) for uniform X
    double mi_uniform = 0;
    std::vector<std::pair<std::string, double>> mi_biased;
    double mi_constant_zero = 0;
    bool thm1_ok = false;

    // stuck-at coupling pushed through the inverse S-box
    std::size_t pairs = 0;
    double delta_sei_true = 0, delta_p_true = 0;
    double delta_p_min_wrong = 1, delta_sei_max_wrong = 0;
    int wrong_keys_uniform = 0;
    bool prop1_ok = false;

    // MI(X1; X2) over key hypotheses
    double mi_true = 0, mi_wrong_min = 0, mi_wrong_max = 0;
    bool mi_key_invariant = false;

    bool ok() const { return thm1_ok && prop1_ok && mi_key_invariant; }
};

TheoremReport theorem_checks();

}  // namespace rsmask
