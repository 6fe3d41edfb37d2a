#include "rsmask/leakage.h"

#include "rsmask/parallel.h"

#include <cmath>
#include <random>
#include <stdexcept>

namespace rsmask {

void MomentAccumulator::add(std::span<const double> trace) {
    if (trace.size() != samples())
        throw std::invalid_argument("trace length mismatch");
    ++n_;
    double inv = 1.0 / double(n_);
    for (std::size_t i = 0; i < trace.size(); ++i) {
        double d = trace[i] - mean_[i];
        mean_[i] += d * inv;
        m2_[i] += d * (trace[i] - mean_[i]);
    }
}

void MomentAccumulator::merge(const MomentAccumulator& o) {
    if (o.n_ == 0)
        return;
    if (n_ == 0) {
        *this = o;
        return;
    }
    if (o.samples() != samples())
        throw std::invalid_argument("sample count mismatch");
    double na = double(n_), nb = double(o.n_), n = na + nb;
    for (std::size_t i = 0; i < samples(); ++i) {
        double d = o.mean_[i] - mean_[i];
        mean_[i] += d * nb / n;
        m2_[i] += o.m2_[i] + d * d * na * nb / n;
    }
    n_ += o.n_;
}

TTestReport welch_t(const MomentAccumulator& a, const MomentAccumulator& b) {
    if (a.n() < 2 || b.n() < 2)
        throw std::invalid_argument("t-test needs at least 2 traces per set");
    if (a.samples() != b.samples())
        throw std::invalid_argument("sample count mismatch");
    TTestReport r;
    r.n_a = a.n();
    r.n_b = b.n();
    r.t.assign(a.samples(), 0);
    r.degenerate.assign(a.samples(), false);
    for (std::size_t i = 0; i < a.samples(); ++i) {
        double se = a.variance(i) / double(a.n()) + b.variance(i) / double(b.n());
        if (se <= 0) {
            r.degenerate[i] = true;
            r.any_degenerate = true;
            continue;
        }
        r.t[i] = (a.mean(i) - b.mean(i)) / std::sqrt(se);
        if (std::abs(r.t[i]) > r.max_abs_t) {
            r.max_abs_t = std::abs(r.t[i]);
            r.argmax = i;
        }
    }
    return r;
}

TTestReport welch_t(std::span<const std::vector<double>> a, std::span<const std::vector<double>> b) {
    std::size_t s = a.empty() ? (b.empty() ? 0 : b[0].size()) : a[0].size();
    MomentAccumulator ma(s), mb(s);
    for (const auto& t : a)
        ma.add(t);
    for (const auto& t : b)
        mb.add(t);
    return welch_t(ma, mb);
}

namespace {

struct BatchMoments {
    MomentAccumulator a, b;
    std::uint64_t traces = 0;
};

}  // namespace

TvlaResult tvla_campaign(const TvlaConfig& cfg, const std::atomic<bool>* stop) {
    if (cfg.round < 1 || cfg.round > 10 || cfg.byte < 0 || cfg.byte > 15 || cfg.bit < 0 || cfg.bit > 7)
        throw std::invalid_argument("partition target out of range");
    const std::size_t samples = std::size_t(leak_samples(cfg.model));
    const std::uint64_t batches = (cfg.traces + 63) / 64;

    EncryptConfig ec;
    ec.model = cfg.model;
    ec.leakage = true;
    ec.observe_round = cfg.round;
    ec.observe_byte = cfg.byte;

    auto produce = [&](std::uint64_t batch) {
        BatchMoments out{MomentAccumulator(samples), MomentAccumulator(samples), 0};
        Rng prng(cfg.seed, {batch, std::uint64_t(Stream::kPlaintext)});
        Rng part(cfg.seed, {batch, std::uint64_t(Stream::kPartition)});
        Rng noise(cfg.seed, {batch, std::uint64_t(Stream::kNoise)});
        std::normal_distribution<double> gauss(0.0, cfg.sigma);

        BatchInput in;
        for (std::size_t i = 0; i < 16; ++i)
            in.key[i] = W8::broadcast(cfg.key[i]);
        Lanes fixed = 0;
        if (cfg.partition == Partition::kFixedVsRandom)
            fixed = part.next();
        for (std::size_t i = 0; i < 16; ++i) {
            W8 r = prng.word<8>(), f = W8::broadcast(cfg.fixed_pt[i]);
            for (int k = 0; k < 8; ++k)
                in.pt[i].bit[k] = (f.bit[k] & fixed) | (r.bit[k] & ~fixed);
        }

        BatchResult res;
        encrypt_batch(ec, cfg.seed, batch, in, res);
        Lanes set_a = cfg.partition == Partition::kFixedVsRandom ? fixed : res.target_out.bit[cfg.bit];

        std::uint64_t lanes = std::min<std::uint64_t>(64, cfg.traces - batch * 64);
        std::vector<double> trace(samples);
        for (int lane = 0; lane < int(lanes); ++lane) {
            for (std::size_t s = 0; s < samples; ++s)
                trace[s] = double(res.leak.value(int(s), lane)) + (cfg.sigma > 0 ? gauss(noise) : 0.0);
            ((set_a >> lane) & 1 ? out.a : out.b).add(trace);
        }
        out.traces = lanes;
        return out;
    };

    MomentAccumulator a(samples), b(samples);
    TvlaResult result;
    auto consume = [&](std::uint64_t, BatchMoments&& m) {
        a.merge(m.a);
        b.merge(m.b);
        result.traces += m.traces;
        return true;
    };
    std::uint64_t done = run_ordered<BatchMoments>(batches, cfg.workers, produce, consume, stop);
    result.truncated = done < batches;
    result.report = welch_t(a, b);
    return result;
}

}  // namespace rsmask
