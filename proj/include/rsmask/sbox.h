#pragma once

// S-box datapaths. Four models share one skeleton: the Canright inverter on
// tower-basis shares, pipelined into register stages, with every wire and
// register passing through a Probe.
//
//   unprotected  1 share, 5 stages
//   ti           3 shares, 5 stages
//   rsmask       2 data shares + RS share, 10 stages
//   infective    rsmask plus a recomputed Z and error E = Z' ^ Z ^ R

#include "rsmask/fault.h"
#include "rsmask/gf_tower.h"
#include "rsmask/lanes.h"
#include "rsmask/masking.h"
#include "rsmask/probe.h"
#include "rsmask/rng.h"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rsmask {

enum class Model { kUnprotected, kTi, kRsMask, kInfective };

std::string_view to_string(Model m);
std::optional<Model> parse_model(std::string_view s);
int stage_count(Model m);
bool is_rs(Model m);

/// Which RS mask nibble each output nibble absorbs. kPaired adds r1 to z1
/// and r0 to z0; kCrossed swaps them. Only kPaired is correct (see tests).
enum class MaskAssignment { kPaired, kCrossed };

struct DatapathOptions {
    MaskAssignment assignment = MaskAssignment::kPaired;
};

/// Three byte slots in polynomial basis. unprotected: (v, 0, 0);
/// ti: three shares; rs models: (d0, d1, rs).
using Slots = std::array<W8, 3>;

struct SboxLanesOut {
    Slots out;
    Shared<8, 3> err{};  // infective only: E in tower basis, shared
};

/// One lane-parallel S-box evaluation. The probe must have been reset.
void eval_sbox(Model m, Probe& p, Rng& rng, const Slots& in, SboxLanesOut& out, const DatapathOptions& opt = {});

struct NodeCatalog {
    Model model{};
    std::vector<NodeInfo> nodes;
    std::unordered_map<std::string, std::uint32_t> index;

    std::optional<std::uint32_t> find(std::string_view id) const;
};

const NodeCatalog& catalog(Model m);

/// Throws std::invalid_argument when the spec does not fit the model.
void validate_fault(const FaultSpec& f, Model m);

/// Faults of `specs` that fire in instance (round, byte), resolved and
/// sorted. round < 0 selects every spec regardless of timing.
std::vector<ArmedFault> arm_faults(Model m, std::span<const FaultSpec> specs, int round, int byte, Rng& fault_rng);

// ---- scalar API ------------------------------------------------------------

struct RsMaskState {
    std::array<std::uint8_t, 2> data{};
    std::uint8_t rs = 0;
    std::uint8_t value() const { return std::uint8_t(data[0] ^ data[1] ^ rs); }
};

/// E (combined) and the per-byte infection terms E x R_i, polynomial basis.
struct InfectiveAux {
    TowerElement error{};
    std::array<std::uint8_t, 4> infect_masks{};  // R_i, tower basis
    std::array<std::uint8_t, 4> infections{};    // L(E x R_i)
};

std::uint8_t sbox_unprotected(std::uint8_t x, std::span<const FaultSpec> faults = {}, const NodeRecorder& tap = {});
SharedByte sbox_ti(const SharedByte& x, Rng& rng, std::span<const FaultSpec> faults = {}, const NodeRecorder& tap = {});

struct RsMapResult {
    std::array<TowerElement, 3> z;  // shares of Z'
    TowerElement r;                 // RS mask, tower basis
    TowerElement combined() const { return z[0] ^ z[1] ^ z[2]; }
};

/// Inverter with the random space mapping: combined Z' = X^-1 ^ R.
RsMapResult rs_forward_map(const RsMaskState& x, Rng& rng, std::span<const FaultSpec> faults = {},
                           const NodeRecorder& tap = {}, const DatapathOptions& opt = {});
SharedGf16 compute_f(const RsMaskState& x, Rng& rng, const NodeRecorder& tap = {});
RsMaskState sbox_rsmask(const RsMaskState& x, Rng& rng, std::span<const FaultSpec> faults = {},
                        const NodeRecorder& tap = {});
/// Single-instance infective S-box: fills aux (drawing R_i from rng) and
/// applies its own infection term L(E x R_0) to the output.
RsMaskState sbox_infective(const RsMaskState& x, InfectiveAux& aux, Rng& rng, std::span<const FaultSpec> faults = {},
                           const NodeRecorder& tap = {});

/// Field product E x R in GF(2^8) used by the infection; uniform in R for E != 0.
TowerElement infection_product(TowerElement e, TowerElement r);

// lane helpers used by the AES core
W8 infection_product(const W8& e, const W8& r);

}  // namespace rsmask
