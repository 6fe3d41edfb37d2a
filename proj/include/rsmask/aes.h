#pragma once

// AES-128 around a pluggable S-box model. All linear layers act slot by
// slot; round keys only ever touch slots 0 and 1, so the RS slot of the
// state never meets key material.

#include "rsmask/fault.h"
#include "rsmask/lanes.h"
#include "rsmask/probe.h"
#include "rsmask/rng.h"
#include "rsmask/sbox.h"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rsmask {

using Block = std::array<std::uint8_t, 16>;

std::optional<Block> parse_hex_block(std::string_view hex);
std::string to_hex(std::span<const std::uint8_t> bytes);

// unmasked reference, byte-at-a-time
std::array<Block, 11> expand_key_reference(const Block& key);
Block encrypt_reference(const Block& pt, const Block& key);

/// State in lane form: 16 byte positions (column-major, FIPS order), each
/// with three slots.
using LaneState = std::array<Slots, 16>;

/// Round keys in two shares; the third slot is implicitly zero.
struct RoundKeyLanes {
    std::array<std::array<std::array<W8, 2>, 16>, 11> k;
};

RoundKeyLanes expand_key_lanes(Model m, const std::array<W8, 16>& key, Rng& rng);

struct RoundKeys {
    std::array<std::array<Block, 2>, 11> shares{};
    Block combined(int round) const;
};

/// Masked key schedule through the model's S-box (lane 0 of a batch).
RoundKeys expand_key(const Block& key, Rng& rng, Model m = Model::kTi);

struct EncryptConfig {
    Model model = Model::kUnprotected;
    DatapathOptions datapath{};
    std::vector<FaultSpec> faults;
    bool leakage = false;
    int observe_round = 10;  // S-box instance whose ground truth is recorded
    int observe_byte = 0;
};

struct BatchInput {
    std::array<W8, 16> pt;
    std::array<W8, 16> key;
};

struct BatchResult {
    std::array<W8, 16> ct;          // faulty run (equals ct_correct without faults)
    std::array<W8, 16> ct_correct;  // fault-free shadow run
    Lanes effective = 0;
    W8 target_in;           // combined S-box input at the observed instance
    W8 target_out;          // fault-free combined output
    W8 target_out_faulty;   // combined output in the faulty run
    LeakSink leak;
    std::array<std::array<W8, 16>, 11> rs_trace;  // combined RS slot per round input, for hygiene checks
};

int leak_samples(Model m);

/// Encrypt 64 traces. Randomness comes from streams keyed by (seed, batch).
void encrypt_batch(const EncryptConfig& cfg, std::uint64_t seed, std::uint64_t batch, const BatchInput& in,
                   BatchResult& out);

struct TraceRecord {
    Block pt{};
    Block ct{};
    Block ct_correct{};
    bool effective = false;
    std::uint8_t target_in = 0;
    std::uint8_t target_out = 0;
    std::uint8_t target_out_faulty = 0;
    std::vector<std::uint16_t> leak;  // Hamming weight per sample, noise free
};

TraceRecord extract(const BatchResult& r, const BatchInput& in, int lane);

/// Single encryption. Throws std::invalid_argument for faults whose node is
/// not in the model's catalog.
TraceRecord encrypt(const Block& pt, const Block& key, const EncryptConfig& cfg, std::uint64_t seed);

/// Validate every fault of the config against the model catalog.
void validate(const EncryptConfig& cfg);

// lane-level linear layers, exposed for tests
void shift_rows(std::array<W8, 16>& s);
void mix_columns(std::array<W8, 16>& s);
W8 xtime(const W8& x);

}  // namespace rsmask
