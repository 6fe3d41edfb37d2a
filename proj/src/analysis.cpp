#include "rsmask/analysis.h"

#include "rsmask/gf_tower.h"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rsmask {

void Histogram::merge(const Histogram& o) {
    if (o.bins() != bins())
        throw std::invalid_argument("histogram bin mismatch");
    for (std::size_t i = 0; i < bins(); ++i)
        counts_[i] += o.counts_[i];
    n_ += o.n_;
}

namespace {

// sum (c_i/n - 1/bins)^2 = sum c_i^2 / n^2 - 1/bins. The integer sum makes the
// value exactly invariant under any permutation of the bins.
template <class Count>
double sei_counts(const Count* c, std::size_t bins, std::uint64_t n) {
    if (n == 0)
        return 0;
    unsigned __int128 sq = 0;
    for (std::size_t i = 0; i < bins; ++i)
        sq += static_cast<unsigned __int128>(c[i]) * c[i];
    double nn = double(n);
    return double(sq) / (nn * nn) - 1.0 / double(bins);
}

}  // namespace

SeiResult sei(const Histogram& h) {
    if (h.n() == 0)
        throw std::invalid_argument("sei of empty histogram");
    return {sei_counts(h.counts().data(), h.bins(), h.n()), h.n()};
}

double chi2_uniform_p(std::span<const double> probs, double n) {
    double k = double(probs.size()), x = 0;
    for (double p : probs) {
        double d = p - 1.0 / k;
        x += d * d;
    }
    x *= n * k;
    boost::math::chi_squared dist(k - 1);
    return boost::math::cdf(boost::math::complement(dist, x));
}

double chi2_uniform_p(const Histogram& h) {
    if (h.n() == 0)
        throw std::invalid_argument("chi-square of empty histogram");
    std::vector<double> p(h.bins());
    for (std::size_t i = 0; i < p.size(); ++i)
        p[i] = double(h[i]) / double(h.n());
    return chi2_uniform_p(p, double(h.n()));
}

std::string to_string(Projection p) {
    switch (p) {
    case Projection::kByte: return "byte";
    case Projection::kTowerLow: return "tower-low";
    case Projection::kTowerHigh: return "tower-high";
    }
    return "?";
}

bool parse_projection(std::string_view s, Projection& out) {
    for (auto p : {Projection::kByte, Projection::kTowerLow, Projection::kTowerHigh})
        if (s == to_string(p)) {
            out = p;
            return true;
        }
    return false;
}

std::size_t projection_bins(Projection p) { return p == Projection::kByte ? 256 : 16; }

std::uint8_t project(Projection p, std::uint8_t x) {
    switch (p) {
    case Projection::kByte: return x;
    case Projection::kTowerLow: return to_tower(x).byte() & 0x0F;
    case Projection::kTowerHigh: return to_tower(x).byte() >> 4;
    }
    return x;
}

int KeyRanking::rank_of(std::uint8_t k) const {
    for (int i = 0; i < 256; ++i)
        if (order[std::size_t(i)] == k)
            return i + 1;
    return 257;
}

double KeyRanking::max_excluding(std::uint8_t k) const {
    double m = -1;
    for (int i = 0; i < 256; ++i)
        if (i != k)
            m = std::max(m, score[std::size_t(i)]);
    return m;
}

bool KeyRanking::all_tied() const {
    for (double s : score)
        if (s != score[0])
            return false;
    return true;
}

KeyRanking rank_scores(const std::array<double, 256>& score) {
    KeyRanking r;
    r.score = score;
    std::iota(r.order.begin(), r.order.end(), std::uint8_t(0));
    std::stable_sort(r.order.begin(), r.order.end(),
                     [&](std::uint8_t a, std::uint8_t b) { return score[a] > score[b]; });
    return r;
}

SifaAccumulator::SifaAccumulator(Projection p) : proj_(p), bins_(projection_bins(p)), counts_(256 * bins_, 0) {
    for (int k = 0; k < 256; ++k)
        for (int c = 0; c < 256; ++c)
            table_[std::size_t(k)][std::size_t(c)] = project(p, inv_sbox(std::uint8_t(c ^ k)));
}

void SifaAccumulator::add(std::uint8_t c) {
    for (std::size_t k = 0; k < 256; ++k)
        ++counts_[k * bins_ + table_[k][c]];
    ++n_;
}

void SifaAccumulator::merge(const SifaAccumulator& o) {
    if (o.proj_ != proj_)
        throw std::invalid_argument("projection mismatch");
    for (std::size_t i = 0; i < counts_.size(); ++i)
        counts_[i] += o.counts_[i];
    n_ += o.n_;
}

KeyRanking SifaAccumulator::ranking() const {
    std::array<double, 256> s{};
    for (std::size_t k = 0; k < 256; ++k)
        s[k] = sei_counts(&counts_[k * bins_], bins_, n_);
    return rank_scores(s);
}

Histogram SifaAccumulator::histogram(std::uint8_t k) const {
    Histogram h(bins_);
    for (std::size_t b = 0; b < bins_; ++b)
        h.add(b, counts_[k * bins_ + b]);
    return h;
}

DifferentialAccumulator::DifferentialAccumulator() : counts_(65536, 0) {}

void DifferentialAccumulator::add(std::uint8_t c, std::uint8_t cf) {
    for (std::size_t k = 0; k < 256; ++k) {
        std::uint8_t d = inv_sbox(std::uint8_t(c ^ k)) ^ inv_sbox(std::uint8_t(cf ^ k));
        ++counts_[k * 256 + d];
    }
    ++n_;
}

void DifferentialAccumulator::merge(const DifferentialAccumulator& o) {
    for (std::size_t i = 0; i < counts_.size(); ++i)
        counts_[i] += o.counts_[i];
    n_ += o.n_;
}

KeyRanking DifferentialAccumulator::ranking() const {
    std::array<double, 256> s{};
    for (std::size_t k = 0; k < 256; ++k)
        s[k] = sei_counts(&counts_[k * 256], 256, n_);
    return rank_scores(s);
}

KeyRanking sifa_rank(std::span<const std::uint8_t> cts, Projection p, std::size_t min_samples) {
    if (cts.size() < std::max<std::size_t>(min_samples, 1))
        throw std::invalid_argument("too few ineffective ciphertexts");
    SifaAccumulator acc(p);
    for (auto c : cts)
        acc.add(c);
    return acc.ranking();
}

KeyRanking differential_rank(std::span<const std::pair<std::uint8_t, std::uint8_t>> pairs, std::size_t min_samples) {
    if (pairs.size() < std::max<std::size_t>(min_samples, 1))
        throw std::invalid_argument("too few ciphertext pairs");
    DifferentialAccumulator acc;
    for (auto [c, cf] : pairs)
        acc.add(c, cf);
    return acc.ranking();
}

namespace {

constexpr std::uint8_t kInvMixRow[4] = {0x0e, 0x0b, 0x0d, 0x09};

std::uint8_t inv_mix_coef(int row, int j) { return kInvMixRow[(j - row + 4) % 4]; }

}  // namespace

std::uint8_t column_value(const ColumnBytes& c, const ColumnBytes& k, int row) {
    std::uint8_t v = 0;
    for (int j = 0; j < 4; ++j)
        v ^= gf256_mul_poly(inv_mix_coef(row, j), inv_sbox(std::uint8_t(c[std::size_t(j)] ^ k[std::size_t(j)])));
    return v;
}

ColumnSifaScorer::ColumnSifaScorer(std::vector<ColumnBytes> cts, int row) : cts_(std::move(cts)) {
    if (row < 0 || row > 3)
        throw std::invalid_argument("column row out of range");
    for (int j = 0; j < 4; ++j)
        for (int v = 0; v < 256; ++v)
            t_[std::size_t(j)][std::size_t(v)] = gf256_mul_poly(inv_mix_coef(row, j), inv_sbox(std::uint8_t(v)));
}

double ColumnSifaScorer::sei(const ColumnBytes& k) const {
    if (cts_.empty())
        throw std::invalid_argument("column scorer: no ciphertexts");
    std::array<std::uint32_t, 256> h{};
    for (const auto& c : cts_)
        ++h[std::uint8_t(t_[0][c[0] ^ k[0]] ^ t_[1][c[1] ^ k[1]] ^ t_[2][c[2] ^ k[2]] ^ t_[3][c[3] ^ k[3]])];
    return sei_counts(h.data(), h.size(), cts_.size());
}

double mutual_information_exact(std::span<const double> joint) {
    if (joint.size() != 65536)
        throw std::invalid_argument("joint table must be 256x256");
    double total = 0;
    for (double p : joint) {
        if (p < 0)
            throw std::invalid_argument("negative probability");
        total += p;
    }
    if (std::abs(total - 1) > 1e-9)
        throw std::invalid_argument("joint table does not sum to 1");
    std::array<double, 256> px{}, py{};
    for (std::size_t a = 0; a < 256; ++a)
        for (std::size_t b = 0; b < 256; ++b) {
            px[a] += joint[a * 256 + b];
            py[b] += joint[a * 256 + b];
        }
    double mi = 0;
    for (std::size_t a = 0; a < 256; ++a)
        for (std::size_t b = 0; b < 256; ++b) {
            double p = joint[a * 256 + b];
            if (p > 0)
                mi += p * std::log2(p / (px[a] * py[b]));
        }
    return std::max(mi, 0.0);
}

namespace {

// MI(X ^ R; X) with X uniform and R ~ r.
double masked_mi(const std::array<double, 256>& r) {
    std::vector<double> joint(65536, 0);
    for (std::size_t x = 0; x < 256; ++x)
        for (std::size_t v = 0; v < 256; ++v)
            joint[(x ^ v) * 256 + x] += r[v] / 256.0;
    return mutual_information_exact(joint);
}

std::array<double, 256> normalized(std::array<double, 256> w) {
    double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& v : w)
        v /= s;
    return w;
}

}  // namespace

TheoremReport theorem_checks() {
    TheoremReport rep;

    std::array<double, 256> uni;
    uni.fill(1.0 / 256);
    rep.mi_uniform = masked_mi(uni);

    std::array<double, 256> zero{};
    zero[0] = 1;
    rep.mi_constant_zero = masked_mi(zero);

    std::array<double, 256> half{}, parity{}, bump{};
    for (std::size_t v = 0; v < 256; ++v) {
        half[v] = v < 128 ? 1 : 0;
        parity[v] = (std::popcount(v) & 1) ? 1.5 : 1.0;
        bump[v] = v < 16 ? 3.0 : 1.0;
    }
    rep.mi_biased = {{"msb-clear", masked_mi(normalized(half))},
                     {"odd-parity-weighted", masked_mi(normalized(parity))},
                     {"low-range-heavy", masked_mi(normalized(bump))}};
    rep.thm1_ok = rep.mi_uniform < 1e-12 && std::abs(rep.mi_constant_zero - 8) < 1e-9;
    for (auto& [name, mi] : rep.mi_biased)
        rep.thm1_ok = rep.thm1_ok && mi >= 1e-3;

    // Intermediate X1 uniform; a stuck-at-0 on its two low bits gives X2.
    // Only effective pairs are observed. Ciphertext-side Y_i = Sbox(X_i), so
    // under hypothesis K the attacker computes InvSbox(Y_i ^ K).
    std::vector<std::pair<std::uint8_t, std::uint8_t>> pairs;
    for (int x = 0; x < 256; ++x) {
        std::uint8_t x2 = std::uint8_t(x & 0xFC);
        if (x2 != x)
            pairs.emplace_back(sbox(std::uint8_t(x)), sbox(x2));
    }
    rep.pairs = pairs.size();
    double w = 1.0 / double(pairs.size());
    rep.delta_p_min_wrong = 1;
    rep.mi_wrong_min = 1e9;
    rep.mi_wrong_max = -1;
    for (int k = 0; k < 256; ++k) {
        std::vector<double> delta(256, 0), joint(65536, 0);
        for (auto [y1, y2] : pairs) {
            std::uint8_t a = inv_sbox(std::uint8_t(y1 ^ k)), b = inv_sbox(std::uint8_t(y2 ^ k));
            delta[a ^ b] += w;
            joint[std::size_t(a) * 256 + b] += w;
        }
        double s = 0;
        for (double p : delta)
            s += (p - 1.0 / 256) * (p - 1.0 / 256);
        double p = chi2_uniform_p(delta, double(pairs.size()));
        double mi = mutual_information_exact(joint);
        if (k == 0) {
            rep.delta_sei_true = s;
            rep.delta_p_true = p;
            rep.mi_true = mi;
        } else {
            rep.delta_sei_max_wrong = std::max(rep.delta_sei_max_wrong, s);
            rep.delta_p_min_wrong = std::min(rep.delta_p_min_wrong, p);
            rep.wrong_keys_uniform += p > 1e-3;
            rep.mi_wrong_min = std::min(rep.mi_wrong_min, mi);
            rep.mi_wrong_max = std::max(rep.mi_wrong_max, mi);
        }
    }
    rep.prop1_ok = rep.delta_p_true < 1e-6 && rep.wrong_keys_uniform == 255;
    // the joint of (X1, X2) is a relabelling of (Y1, Y2) for every K
    rep.mi_key_invariant = std::abs(rep.mi_wrong_min - rep.mi_true) < 1e-9 &&
                           std::abs(rep.mi_wrong_max - rep.mi_true) < 1e-9;
    return rep;
}

}  // namespace rsmask
