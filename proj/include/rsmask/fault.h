#pragma once

#include "rsmask/lanes.h"
#include "rsmask/rng.h"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace rsmask {

enum class FaultKind { kStuckAt0, kStuckAt1, kBitFlip, kRandomReplace };

std::string_view to_string(FaultKind k);
std::optional<FaultKind> parse_fault_kind(std::string_view s);

/// One fault: where (node id), what (kind, bit mask) and when (round,
/// state byte, stage). stage 0 means "whatever stage the node lives in".
/// mask selects the affected bits for stuck-at and bit-flip; random-replace
/// always rewrites the whole node.
struct FaultSpec {
    std::string node;
    FaultKind kind = FaultKind::kStuckAt0;
    unsigned mask = 0xFF;
    int round = 10;
    int byte = 0;
    int stage = 0;
    double probability = 1.0;
};

/// Scalar fault model on a `width`-bit value.
unsigned apply_fault(unsigned value, int width, FaultKind kind, unsigned mask, Rng& rng);

/// A fault resolved against a node catalog and ready to fire.
struct ArmedFault {
    std::uint32_t node = 0;
    FaultKind kind = FaultKind::kStuckAt0;
    unsigned mask = 0xFF;
    Lanes active = kAllLanes;
};

/// Per-lane Bernoulli(p) activation mask.
Lanes draw_activation(double p, Rng& rng);

template <int N>
void apply_fault(Word<N>& w, const ArmedFault& f, Rng& rng) {
    Lanes m = f.active;
    for (int i = 0; i < N; ++i) {
        Lanes& b = w.bit[std::size_t(i)];
        bool sel = (f.mask >> i) & 1;
        switch (f.kind) {
        case FaultKind::kStuckAt0:
            if (sel)
                b &= ~m;
            break;
        case FaultKind::kStuckAt1:
            if (sel)
                b |= m;
            break;
        case FaultKind::kBitFlip:
            if (sel)
                b ^= m;
            break;
        case FaultKind::kRandomReplace:
            b = (b & ~m) | (rng.next() & m);
            break;
        }
    }
}

}  // namespace rsmask
