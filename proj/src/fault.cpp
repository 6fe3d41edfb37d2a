#include "rsmask/fault.h"

namespace rsmask {

std::string_view to_string(FaultKind k) {
    switch (k) {
    case FaultKind::kStuckAt0:
        return "stuck-at-0";
    case FaultKind::kStuckAt1:
        return "stuck-at-1";
    case FaultKind::kBitFlip:
        return "bit-flip";
    case FaultKind::kRandomReplace:
        return "random-replace";
    }
    return "?";
}

std::optional<FaultKind> parse_fault_kind(std::string_view s) {
    for (auto k : {FaultKind::kStuckAt0, FaultKind::kStuckAt1, FaultKind::kBitFlip, FaultKind::kRandomReplace})
        if (to_string(k) == s)
            return k;
    return std::nullopt;
}

unsigned apply_fault(unsigned value, int width, FaultKind kind, unsigned mask, Rng& rng) {
    unsigned full = (1u << width) - 1;
    mask &= full;
    switch (kind) {
    case FaultKind::kStuckAt0:
        return value & ~mask & full;
    case FaultKind::kStuckAt1:
        return (value | mask) & full;
    case FaultKind::kBitFlip:
        return (value ^ mask) & full;
    case FaultKind::kRandomReplace:
        return unsigned(rng.next() >> (64 - width)) & full;
    }
    return value;
}

Lanes draw_activation(double p, Rng& rng) {
    if (p >= 1.0)
        return kAllLanes;
    if (p <= 0.0)
        return 0;
    Lanes m = 0;
    for (int l = 0; l < kLanes; ++l)
        if (rng.uniform() < p)
            m |= Lanes{1} << l;
    return m;
}

}  // namespace rsmask
