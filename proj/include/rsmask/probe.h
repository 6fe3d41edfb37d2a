#pragma once

// Probe: the single hook every datapath node passes through. It numbers the
// nodes in evaluation order (the order is data independent), fires armed
// faults, feeds registered values to the leakage accumulator, and, when
// asked, records node names for the catalog or a scalar tap.

#include "rsmask/fault.h"
#include "rsmask/gf_tower.h"
#include "rsmask/lanes.h"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rsmask {

struct NodeInfo {
    std::string id;
    int width = 0;
    int stage = 0;
    bool reg = false;     // registered (leaks) or combinational wire
    std::string region;   // top-level scope: inv, map, f, rpath, ...
};

/// Hamming-weight accumulator: one bitsliced 16-bit counter per sample.
class LeakSink {
public:
    explicit LeakSink(int samples = 0) : acc_(std::size_t(samples)) {}

    void reset() {
        for (auto& a : acc_)
            a.fill(0);
    }
    int samples() const { return int(acc_.size()); }
    void select(int sample) { cur_ = (sample >= 0 && sample < samples()) ? sample : -1; }

    template <int N>
    void add(const Word<N>& w) {
        if (cur_ < 0)
            return;
        auto& c = acc_[std::size_t(cur_)];
        for (Lanes carry : w.bit) {
            for (std::size_t j = 0; carry && j < c.size(); ++j) {
                Lanes t = c[j] & carry;
                c[j] ^= carry;
                carry = t;
            }
        }
    }
    unsigned value(int sample, int lane) const {
        const auto& c = acc_[std::size_t(sample)];
        unsigned v = 0;
        for (std::size_t j = 0; j < c.size(); ++j)
            v |= unsigned((c[j] >> lane) & 1) << j;
        return v;
    }

private:
    std::vector<std::array<Lanes, 16>> acc_;
    int cur_ = -1;
};

class Probe {
public:
    /// Faults must be sorted by node index.
    void arm(std::span<const ArmedFault> faults, Rng* fault_rng) {
        faults_ = faults;
        fault_rng_ = fault_rng;
    }
    void disarm() { faults_ = {}; }
    void set_leak(LeakSink* sink, int sample_base) {
        leak_ = sink;
        sample_base_ = sample_base;
    }
    void set_catalog(std::vector<NodeInfo>* out) { catalog_ = out; }
    void set_tap(NodeRecorder tap, int lane = 0) {
        tap_ = std::move(tap);
        tap_lane_ = lane;
    }

    /// Start a fresh evaluation.
    void reset() {
        idx_ = 0;
        next_ = 0;
        stage_ = 0;
        scope_.clear();
    }
    void stage(int k) {
        stage_ = k;
        if (leak_)
            leak_->select(sample_base_ + k - 1);
    }
    int current_stage() const { return stage_; }
    std::uint32_t count() const { return idx_; }
    bool naming() const { return catalog_ || tap_; }

    void push(std::string_view s) {
        if (naming())
            scope_.emplace_back(s);
    }
    void pop() {
        if (naming())
            scope_.pop_back();
    }

    template <int N>
    void wire(Word<N>& w, std::string_view name) {
        node(w, name, -1, false);
    }
    template <int N>
    void reg(Word<N>& w, std::string_view name) {
        node(w, name, -1, true);
    }
    template <int N, std::size_t S>
    void wire(std::array<Word<N>, S>& v, std::string_view name) {
        for (std::size_t i = 0; i < S; ++i)
            node(v[i], name, S > 1 ? int(i) : -1, false);
    }
    template <int N, std::size_t S>
    void reg(std::array<Word<N>, S>& v, std::string_view name) {
        for (std::size_t i = 0; i < S; ++i)
            node(v[i], name, S > 1 ? int(i) : -1, true);
    }

private:
    template <int N>
    void node(Word<N>& w, std::string_view name, int share, bool is_reg) {
        if (next_ < faults_.size() && faults_[next_].node == idx_) {
            while (next_ < faults_.size() && faults_[next_].node == idx_)
                apply_fault(w, faults_[next_++], *fault_rng_);
        }
        if (is_reg && leak_)
            leak_->add(w);
        if (naming())
            record(full_name(name, share), N, is_reg, w.lane(tap_lane_));
        ++idx_;
    }

    std::string full_name(std::string_view name, int share) const;
    void record(const std::string& id, int width, bool is_reg, unsigned lane_value);

    std::span<const ArmedFault> faults_;
    std::size_t next_ = 0;
    Rng* fault_rng_ = nullptr;
    LeakSink* leak_ = nullptr;
    int sample_base_ = 0;
    std::vector<NodeInfo>* catalog_ = nullptr;
    NodeRecorder tap_;
    int tap_lane_ = 0;
    std::vector<std::string> scope_;
    std::uint32_t idx_ = 0;
    int stage_ = 0;
};

/// RAII naming scope.
class Scope {
public:
    Scope(Probe& p, std::string_view s) : p_(p) { p_.push(s); }
    ~Scope() { p_.pop(); }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

private:
    Probe& p_;
};

}  // namespace rsmask
