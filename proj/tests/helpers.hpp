#pragma once

#include "hetrax/common.hpp"
#include "hetrax/platform.hpp"

namespace testing {

/// Default core specs on a single tier of gx x gy slots filled with SMs and `mcs` MCs.
inline hetrax::Platform single_tier(int gx, int gy, int mcs = 0) {
    using namespace hetrax;
    Platform p = default_platform();
    p.name = "single";
    p.tiers.clear();
    TierSpec t;
    t.name = "t0";
    t.grid_x = gx;
    t.grid_y = gy;
    t.allowed_kinds = {CoreKind::SM, CoreKind::MC};
    t.population = {{CoreKind::SM, gx * gy - mcs}};
    if (mcs > 0) t.population[CoreKind::MC] = mcs;
    p.tiers.push_back(t);
    p.thermal.r_layer = {1.2};
    return p;
}

/// n tiers of 1x1 slots: SM, MC, then ReRAM tiers.
inline hetrax::Platform unit_tiers() {
    using namespace hetrax;
    Platform p = default_platform();
    p.name = "unit";
    p.tiers.clear();
    auto add = [&](const char* name, CoreKind k, PlanarLinks planar) {
        TierSpec t;
        t.name = name;
        t.grid_x = 1;
        t.grid_y = 1;
        t.allowed_kinds = {k};
        t.population = {{k, 1}};
        t.planar = planar;
        p.tiers.push_back(t);
    };
    add("sm", CoreKind::SM, PlanarLinks::Searchable);
    add("mc", CoreKind::MC, PlanarLinks::Searchable);
    add("reram", CoreKind::RERAM, PlanarLinks::FixedChain);
    p.thermal.r_layer = {1.2, 1.2, 1.2};
    return p;
}

}  // namespace testing
