#include "rsmask/probe.h"

namespace rsmask {

std::string Probe::full_name(std::string_view name, int share) const {
    std::string s;
    for (const auto& p : scope_) {
        s += p;
        s += '.';
    }
    s += name;
    if (share >= 0) {
        s += ".s";
        s += char('0' + share);
    }
    return s;
}

void Probe::record(const std::string& id, int width, bool is_reg, unsigned lane_value) {
    if (catalog_) {
        NodeInfo n;
        n.id = id;
        n.width = width;
        n.stage = stage_;
        n.reg = is_reg;
        n.region = id.substr(0, id.find('.'));
        catalog_->push_back(std::move(n));
    }
    if (tap_)
        tap_(id, lane_value);
}

}  // namespace rsmask
