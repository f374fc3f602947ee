#include "hetrax/platform.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

#include "hetrax/common.hpp"

namespace hetrax {

namespace {

constexpr std::array<CoreKind, 3> kAllKinds{CoreKind::SM, CoreKind::MC, CoreKind::RERAM};

bool connected(int slot_count, const std::vector<Link>& links, const std::vector<int>& slot_core) {
    std::vector<std::vector<int>> adj(slot_count);
    for (const auto& l : links) {
        adj[l.a].push_back(l.b);
        adj[l.b].push_back(l.a);
    }
    int start = -1;
    int occupied = 0;
    for (int s = 0; s < slot_count; ++s) {
        if (slot_core[s] >= 0) {
            ++occupied;
            if (start < 0) start = s;
        }
    }
    if (occupied <= 1) return true;
    std::vector<char> seen(slot_count, 0);
    std::vector<int> stack{start};
    seen[start] = 1;
    int reached = 0;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        ++reached;
        for (int v : adj[u]) {
            if (!seen[v] && slot_core[v] >= 0) {
                seen[v] = 1;
                stack.push_back(v);
            }
        }
    }
    return reached == occupied;
}

std::vector<Link> grid_links(const Platform& p, int tier) {
    std::vector<Link> out;
    const auto& t = p.tiers[tier];
    const int off = p.tier_offset(tier);
    for (int y = 0; y < t.grid_y; ++y) {
        for (int x = 0; x < t.grid_x; ++x) {
            int s = off + y * t.grid_x + x;
            if (x + 1 < t.grid_x) out.push_back(make_link(s, s + 1));
            if (y + 1 < t.grid_y) out.push_back(make_link(s, s + t.grid_x));
        }
    }
    return out;
}

std::vector<Link> vertical_links_for_order(const Platform& p, const std::vector<int>& order) {
    std::vector<Link> out;
    for (std::size_t lvl = 0; lvl + 1 < order.size(); ++lvl) {
        auto c = vertical_candidates(p, order[lvl], order[lvl + 1]);
        out.insert(out.end(), c.begin(), c.end());
    }
    return out;
}

void sort_unique(std::vector<Link>& links) {
    std::sort(links.begin(), links.end());
    links.erase(std::unique(links.begin(), links.end()), links.end());
}

MeshReference build_mesh_reference(const Platform& p, const std::vector<int>& order,
                                   const std::vector<int>* slot_core) {
    MeshReference ref;
    for (int t = 0; t < p.tier_count(); ++t) {
        auto g = grid_links(p, t);
        ref.links.insert(ref.links.end(), g.begin(), g.end());
    }
    auto v = vertical_links_for_order(p, order);
    ref.links.insert(ref.links.end(), v.begin(), v.end());
    sort_unique(ref.links);
    ref.link_count = static_cast<int>(ref.links.size());

    std::vector<int> degree(p.slot_count(), 0);
    for (const auto& l : ref.links) {
        ++degree[l.a];
        ++degree[l.b];
    }
    std::vector<CoreKind> kinds;
    if (slot_core) kinds = p.core_kinds();
    for (int s = 0; s < p.slot_count(); ++s) {
        int ports = degree[s] + 1;
        if (slot_core && (*slot_core)[s] >= 0 && kinds[(*slot_core)[s]] == CoreKind::MC) {
            ++ports;
        }
        ref.radix_histogram[ports] += 1;
        ref.max_ports = std::max(ref.max_ports, ports);
    }
    return ref;
}

}  // namespace

std::string to_string(CoreKind kind) {
    switch (kind) {
        case CoreKind::SM: return "SM";
        case CoreKind::MC: return "MC";
        case CoreKind::RERAM: return "RERAM";
    }
    return "?";
}

CoreKind core_kind_from_string(const std::string& s) {
    if (s == "SM") return CoreKind::SM;
    if (s == "MC") return CoreKind::MC;
    if (s == "RERAM") return CoreKind::RERAM;
    throw Error("unknown core kind '" + s + "'");
}

const SmParams& CoreSpec::sm() const {
    if (auto* p = std::get_if<SmParams>(&details)) return *p;
    throw Error("core spec " + to_string(kind) + " has no SM parameters");
}

const McParams& CoreSpec::mc() const {
    if (auto* p = std::get_if<McParams>(&details)) return *p;
    throw Error("core spec " + to_string(kind) + " has no MC parameters");
}

const ReramParams& CoreSpec::reram() const {
    if (auto* p = std::get_if<ReramParams>(&details)) return *p;
    throw Error("core spec " + to_string(kind) + " has no ReRAM parameters");
}

void CoreSpec::validate() const {
    const std::string who = "core spec " + to_string(kind);
    if (!(area_mm2 > 0)) throw Error(who + ": area must be > 0");
    if (!(idle_power_w >= 0)) throw Error(who + ": idle power must be >= 0");
    if (!(active_power_w >= idle_power_w)) throw Error(who + ": active power must be >= idle power");
    if (!(frequency_hz > 0)) throw Error(who + ": frequency must be > 0");
    switch (kind) {
        case CoreKind::SM:
            if (!(sm().peak_flops > 0)) throw Error(who + ": peak_flops must be > 0");
            break;
        case CoreKind::MC:
            if (mc().cache_bytes < 0) throw Error(who + ": cache_bytes must be >= 0");
            break;
        case CoreKind::RERAM: {
            const auto& r = reram();
            if (r.cell_capacity() <= 0) throw Error(who + ": cell capacity must be > 0");
            if (r.bits_per_cell <= 0) throw Error(who + ": bits_per_cell must be > 0");
            if (!(r.row_write_time_s > 0)) throw Error(who + ": row_write_time must be > 0");
            if (!(r.endurance > 0)) throw Error(who + ": endurance must be > 0");
            break;
        }
    }
}

// ---------------------------------------------------------------------------

const CoreSpec& Platform::spec(CoreKind kind) const {
    for (const auto& s : core_specs) {
        if (s.kind == kind) return s;
    }
    throw Error("platform has no core spec for " + to_string(kind));
}

bool Platform::has_spec(CoreKind kind) const {
    return std::any_of(core_specs.begin(), core_specs.end(),
                       [&](const CoreSpec& s) { return s.kind == kind; });
}

int Platform::slot_count() const {
    int n = 0;
    for (const auto& t : tiers) n += t.slots();
    return n;
}

int Platform::tier_offset(int tier) const {
    int off = 0;
    for (int t = 0; t < tier; ++t) off += tiers[t].slots();
    return off;
}

int Platform::core_count() const {
    int n = 0;
    for (const auto& t : tiers) {
        for (const auto& [kind, count] : t.population) n += count;
    }
    return n;
}

std::vector<CoreKind> Platform::core_kinds() const {
    std::vector<CoreKind> out;
    for (const auto& t : tiers) {
        for (CoreKind k : kAllKinds) {
            auto it = t.population.find(k);
            if (it != t.population.end()) out.insert(out.end(), it->second, k);
        }
    }
    return out;
}

std::vector<int> Platform::core_tiers() const {
    std::vector<int> out;
    for (int i = 0; i < tier_count(); ++i) {
        for (const auto& [kind, count] : tiers[i].population) out.insert(out.end(), count, i);
    }
    return out;
}

std::map<CoreKind, int> Platform::inventory() const {
    std::map<CoreKind, int> out;
    for (const auto& t : tiers) {
        for (const auto& [kind, count] : t.population) out[kind] += count;
    }
    return out;
}

void Platform::validate() const {
    if (tiers.empty()) throw Error("platform needs at least one tier");
    std::set<CoreKind> seen;
    for (const auto& s : core_specs) {
        if (!seen.insert(s.kind).second) throw Error("duplicate core spec for " + to_string(s.kind));
        s.validate();
    }
    for (const auto& t : tiers) {
        const std::string who = "tier '" + t.name + "'";
        if (t.grid_x < 1 || t.grid_y < 1) throw Error(who + ": grid must be at least 1x1");
        int pop = 0;
        for (const auto& [kind, count] : t.population) {
            if (count < 0) throw Error(who + ": negative population");
            if (count == 0) continue;
            if (std::find(t.allowed_kinds.begin(), t.allowed_kinds.end(), kind) == t.allowed_kinds.end()) {
                throw Error(who + ": " + to_string(kind) + " not allowed on this tier");
            }
            if (!has_spec(kind)) throw Error(who + ": no core spec for " + to_string(kind));
            pop += count;
        }
        if (pop != t.slots()) {
            throw Error(who + ": population " + std::to_string(pop) + " does not fill " +
                        std::to_string(t.slots()) + " slots");
        }
    }
    if (thermal.r_layer.size() < tiers.size()) {
        throw Error("thermal.r_layer needs one resistance per tier interface (" +
                    std::to_string(tiers.size()) + ")");
    }
    for (double r : thermal.r_layer) {
        if (!(r > 0)) throw Error("thermal resistances must be > 0");
    }
    if (!(thermal.r_base > 0)) throw Error("thermal.r_base must be > 0");
    if (!(tsv.diameter_um > 0 && tsv.height_um > 0 && tsv.capacitance_f > 0 && tsv.resistance_ohm > 0)) {
        throw Error("TSV parameters must all be > 0");
    }
    if (!(link_capacity > 0)) throw Error("link_capacity must be > 0");
    if (!(dram_bandwidth > 0)) throw Error("dram_bandwidth must be > 0");
    if (!(tier_width_mm > 0 && tier_height_mm > 0)) throw Error("tier size must be > 0");
    if (!(perf.sm_utilization > 0 && perf.sm_utilization <= 1)) throw Error("sm_utilization must be in (0,1]");
    if (!(perf.scalar_rate_divisor > 0)) throw Error("scalar_rate_divisor must be > 0");
    if (perf.write_parallel_per_tile < 1) throw Error("write_parallel_per_tile must be >= 1");
    if (!(noise.g_max_s > noise.g_min_s && noise.g_min_s > 0)) throw Error("noise conductance range invalid");
    if (!(noise.read_voltage_v > 0)) throw Error("noise read voltage must be > 0");
    if (!(noise.flip_threshold > 0 && noise.flip_threshold < 1)) throw Error("flip threshold must be in (0,1)");
}

SlotRef slot_ref(const Platform& platform, int slot) {
    int off = 0;
    for (int t = 0; t < platform.tier_count(); ++t) {
        const auto& tier = platform.tiers[t];
        if (slot < off + tier.slots()) {
            int local = slot - off;
            return {t, local % tier.grid_x, local / tier.grid_x};
        }
        off += tier.slots();
    }
    throw Error("slot index " + std::to_string(slot) + " out of range");
}

int slot_index(const Platform& platform, const SlotRef& ref) {
    const auto& t = platform.tiers.at(ref.tier);
    if (ref.x < 0 || ref.y < 0 || ref.x >= t.grid_x || ref.y >= t.grid_y) {
        throw Error("slot (" + std::to_string(ref.tier) + "," + std::to_string(ref.x) + "," +
                    std::to_string(ref.y) + ") outside tier grid");
    }
    return platform.tier_offset(ref.tier) + ref.y * t.grid_x + ref.x;
}

Platform default_platform() {
    Platform p;
    p.name = "hetrax-default";

    CoreSpec sm;
    sm.kind = CoreKind::SM;
    sm.area_mm2 = 9.1;
    sm.active_power_w = 3.1;
    sm.idle_power_w = 0.6;
    sm.frequency_hz = 1530e6;
    // 8 tensor cores x 64 FMA/clk x 2 FLOP
    sm.details = SmParams{8.0 * 64.0 * 2.0 * 1530e6, 8};

    CoreSpec mc;
    mc.kind = CoreKind::MC;
    mc.area_mm2 = 3.2;
    mc.active_power_w = 1.5;
    mc.idle_power_w = 0.3;
    mc.frequency_hz = 1530e6;
    mc.details = McParams{512 * 1024};

    CoreSpec rr;
    rr.kind = CoreKind::RERAM;
    rr.area_mm2 = 16 * 0.37;
    rr.active_power_w = 16 * 0.34;
    rr.idle_power_w = 0.1 * 16 * 0.34;
    rr.frequency_hz = 10e6;
    ReramParams rp;
    rp.tiles = 16;
    rp.crossbars_per_tile = 96;
    rp.crossbar_rows = 128;
    rp.crossbar_cols = 128;
    rp.bits_per_cell = 2;
    rp.adc_bits = 8;
    rp.row_write_time_s = 100e-9;
    rp.endurance = 1e6;
    rr.details = rp;

    p.core_specs = {sm, mc, rr};

    for (int i = 0; i < 3; ++i) {
        TierSpec t;
        t.name = "smmc" + std::to_string(i);
        t.grid_x = 3;
        t.grid_y = 3;
        t.allowed_kinds = {CoreKind::SM, CoreKind::MC};
        t.population = {{CoreKind::SM, 7}, {CoreKind::MC, 2}};
        t.planar = PlanarLinks::Searchable;
        p.tiers.push_back(t);
    }
    TierSpec r;
    r.name = "reram";
    r.grid_x = 4;
    r.grid_y = 4;
    r.allowed_kinds = {CoreKind::RERAM};
    r.population = {{CoreKind::RERAM, 16}};
    r.planar = PlanarLinks::FixedChain;
    p.tiers.push_back(r);

    p.tier_width_mm = 10.0;
    p.tier_height_mm = 10.0;
    p.thermal.r_layer = {1.2, 1.2, 1.2, 1.2};
    p.thermal.r_base = 0.6;
    p.thermal.ambient_c = 45.0;
    p.tsv = TsvSpec{5.0, 25.0, 37e-15, 20e-3};
    p.link_capacity = 32e9;
    p.dram_bandwidth = 256e9;
    return p;
}

Platform tiny_platform() {
    Platform p = default_platform();
    p.name = "hetrax-tiny";
    p.tiers.clear();
    for (int i = 0; i < 2; ++i) {
        TierSpec t;
        t.name = "smmc" + std::to_string(i);
        t.grid_x = 2;
        t.grid_y = 1;
        t.allowed_kinds = {CoreKind::SM, CoreKind::MC};
        t.population = {{CoreKind::SM, 1}, {CoreKind::MC, 1}};
        p.tiers.push_back(t);
    }
    TierSpec r;
    r.name = "reram";
    r.grid_x = 2;
    r.grid_y = 1;
    r.allowed_kinds = {CoreKind::RERAM};
    r.population = {{CoreKind::RERAM, 2}};
    r.planar = PlanarLinks::FixedChain;
    p.tiers.push_back(r);
    p.thermal.r_layer = {1.2, 1.2, 1.2};
    return p;
}

// ===========================================================================
// Placement helpers
// ===========================================================================

Link make_link(int u, int v) {
    return u < v ? Link{u, v} : Link{v, u};
}

std::vector<int> slot_cores(const Platform& platform, const Placement& placement) {
    std::vector<int> out(platform.slot_count(), -1);
    for (int c = 0; c < static_cast<int>(placement.core_slot.size()); ++c) {
        int s = placement.core_slot[c];
        if (s >= 0 && s < static_cast<int>(out.size())) out[s] = c;
    }
    return out;
}

std::vector<int> tier_levels(const Placement& placement) {
    std::vector<int> out(placement.tier_order.size(), -1);
    for (int lvl = 0; lvl < static_cast<int>(placement.tier_order.size()); ++lvl) {
        int t = placement.tier_order[lvl];
        if (t >= 0 && t < static_cast<int>(out.size())) out[t] = lvl;
    }
    return out;
}

bool is_vertical(const Platform& platform, const Link& link) {
    return slot_ref(platform, link.a).tier != slot_ref(platform, link.b).tier;
}

std::string placement_digest(const Platform& platform, const Placement& placement) {
    std::ostringstream os;
    os << "o:";
    for (int t : placement.tier_order) os << t << ',';
    os << "|k:";
    const auto kinds = platform.core_kinds();
    for (int c : slot_cores(platform, placement)) {
        os << (c < 0 ? '.' : to_string(kinds[c])[0]);
    }
    os << "|l:";
    for (const auto& l : placement.links) os << l.a << '-' << l.b << ',';
    return hex64(fnv1a64(os.str()));
}

std::vector<Link> vertical_candidates(const Platform& platform, int tier_a, int tier_b) {
    const auto& ta = platform.tiers.at(tier_a);
    const auto& tb = platform.tiers.at(tier_b);
    const bool a_coarse = ta.slots() <= tb.slots();
    const int coarse = a_coarse ? tier_a : tier_b;
    const int fine = a_coarse ? tier_b : tier_a;
    const auto& tc = platform.tiers[coarse];
    const auto& tf = platform.tiers[fine];
    const int off_c = platform.tier_offset(coarse);
    const int off_f = platform.tier_offset(fine);

    std::vector<Link> out;
    for (int y = 0; y < tc.grid_y; ++y) {
        for (int x = 0; x < tc.grid_x; ++x) {
            const double cx = (x + 0.5) / tc.grid_x;
            const double cy = (y + 0.5) / tc.grid_y;
            int best = -1;
            double best_d = 0.0;
            for (int fy = 0; fy < tf.grid_y; ++fy) {
                for (int fx = 0; fx < tf.grid_x; ++fx) {
                    const double dx = (fx + 0.5) / tf.grid_x - cx;
                    const double dy = (fy + 0.5) / tf.grid_y - cy;
                    const double d = dx * dx + dy * dy;
                    // strict comparison with a small tolerance keeps the lowest index on ties
                    if (best < 0 || d < best_d - 1e-12) {
                        best = fy * tf.grid_x + fx;
                        best_d = d;
                    }
                }
            }
            out.push_back(make_link(off_c + y * tc.grid_x + x, off_f + best));
        }
    }
    return out;
}

std::vector<int> chain_slots(const Platform& platform, int tier) {
    const auto& t = platform.tiers.at(tier);
    const int off = platform.tier_offset(tier);
    std::vector<int> out;
    for (int y = 0; y < t.grid_y; ++y) {
        for (int i = 0; i < t.grid_x; ++i) {
            int x = (y % 2 == 0) ? i : t.grid_x - 1 - i;
            out.push_back(off + y * t.grid_x + x);
        }
    }
    return out;
}

std::vector<Link> fixed_links(const Platform& platform) {
    std::vector<Link> out;
    for (int t = 0; t < platform.tier_count(); ++t) {
        if (platform.tiers[t].planar != PlanarLinks::FixedChain) continue;
        auto chain = chain_slots(platform, t);
        for (std::size_t i = 0; i + 1 < chain.size(); ++i) out.push_back(make_link(chain[i], chain[i + 1]));
    }
    sort_unique(out);
    return out;
}

std::vector<Link> planar_candidates(const Platform& platform, int tier) {
    std::vector<Link> out;
    if (platform.tiers.at(tier).planar != PlanarLinks::Searchable) return out;
    const int off = platform.tier_offset(tier);
    const int n = platform.tiers[tier].slots();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) out.push_back(Link{off + i, off + j});
    }
    return out;
}

MeshReference mesh_reference(const Platform& platform) {
    std::vector<int> order(platform.tier_count());
    std::iota(order.begin(), order.end(), 0);
    return build_mesh_reference(platform, order, nullptr);
}

MeshReference mesh_reference(const Platform& platform, const Placement& placement) {
    auto sc = slot_cores(platform, placement);
    return build_mesh_reference(platform, placement.tier_order, &sc);
}

// ===========================================================================
// Validation
// ===========================================================================

std::vector<Violation> validate_placement(const Platform& platform, const Placement& placement) {
    std::vector<Violation> v;
    const int tiers = platform.tier_count();
    const int slots = platform.slot_count();

    // tier order
    {
        std::vector<int> sorted = placement.tier_order;
        std::sort(sorted.begin(), sorted.end());
        std::vector<int> expect(tiers);
        std::iota(expect.begin(), expect.end(), 0);
        if (sorted != expect) {
            v.push_back({"tier order", "tier_order is not a permutation of 0.." + std::to_string(tiers - 1)});
            return v;
        }
    }

    // slot map
    const auto kinds = platform.core_kinds();
    const auto core_tier = platform.core_tiers();
    if (static_cast<int>(placement.core_slot.size()) != platform.core_count()) {
        v.push_back({"slot map", "expected " + std::to_string(platform.core_count()) + " cores, got " +
                                     std::to_string(placement.core_slot.size())});
        return v;
    }
    std::vector<int> owner(slots, -1);
    bool slot_map_ok = true;
    for (int c = 0; c < static_cast<int>(placement.core_slot.size()); ++c) {
        int s = placement.core_slot[c];
        if (s < 0 || s >= slots) {
            v.push_back({"slot map", "core " + std::to_string(c) + " mapped outside the slot range"});
            slot_map_ok = false;
            continue;
        }
        if (owner[s] >= 0) {
            v.push_back({"slot map", "slot " + std::to_string(s) + " holds cores " + std::to_string(owner[s]) +
                                         " and " + std::to_string(c)});
            slot_map_ok = false;
            continue;
        }
        owner[s] = c;
        auto ref = slot_ref(platform, s);
        const auto& tier = platform.tiers[ref.tier];
        if (ref.tier != core_tier[c]) {
            v.push_back({"slot map", "core " + std::to_string(c) + " belongs to tier '" +
                                         platform.tiers[core_tier[c]].name + "' but sits on tier '" + tier.name + "'"});
        }
        if (std::find(tier.allowed_kinds.begin(), tier.allowed_kinds.end(), kinds[c]) == tier.allowed_kinds.end()) {
            v.push_back({"kind", to_string(kinds[c]) + " core " + std::to_string(c) + " not allowed on tier '" +
                                     tier.name + "'"});
        }
    }
    if (!slot_map_ok) return v;

    // links
    const auto levels = tier_levels(placement);
    const auto fixed = fixed_links(platform);
    std::vector<std::vector<Link>> level_cands;  // candidates between level i and i+1
    int mesh_links = 0;
    for (int t = 0; t < tiers; ++t) mesh_links += static_cast<int>(grid_links(platform, t).size());
    for (int lvl = 0; lvl + 1 < tiers; ++lvl) {
        level_cands.push_back(vertical_candidates(platform, placement.tier_order[lvl], placement.tier_order[lvl + 1]));
        mesh_links += static_cast<int>(level_cands.back().size());
    }
    std::set<Link> link_set;
    std::vector<int> degree(slots, 0);
    for (const auto& l : placement.links) {
        const std::string name = std::to_string(l.a) + "-" + std::to_string(l.b);
        if (l.a >= l.b || l.a < 0 || l.b >= slots) {
            v.push_back({"link endpoint", "malformed link " + name});
            continue;
        }
        if (!link_set.insert(l).second) {
            v.push_back({"duplicate link", name});
            continue;
        }
        if (owner[l.a] < 0 || owner[l.b] < 0) {
            v.push_back({"link endpoint", "link " + name + " touches an unoccupied slot"});
        }
        ++degree[l.a];
        ++degree[l.b];
        auto ra = slot_ref(platform, l.a);
        auto rb = slot_ref(platform, l.b);
        if (ra.tier == rb.tier) {
            if (platform.tiers[ra.tier].planar == PlanarLinks::FixedChain) {
                if (!std::binary_search(fixed.begin(), fixed.end(), l)) {
                    v.push_back({"fixed link", "link " + name + " is not part of the fixed chain on tier '" +
                                                   platform.tiers[ra.tier].name + "'"});
                }
            }
        } else {
            int la = levels[ra.tier];
            int lb = levels[rb.tier];
            if (std::abs(la - lb) != 1) {
                v.push_back({"vertical adjacency", "link " + name + " joins non-adjacent levels " +
                                                       std::to_string(la) + " and " + std::to_string(lb)});
            } else {
                const auto& cands = level_cands[std::min(la, lb)];
                if (std::find(cands.begin(), cands.end(), l) == cands.end()) {
                    v.push_back({"vertical alignment", "link " + name + " is not an aligned TSV bundle"});
                }
            }
        }
    }
    if (!std::is_sorted(placement.links.begin(), placement.links.end())) {
        v.push_back({"link order", "links must be sorted"});
    }
    for (const auto& fl : fixed) {
        if (!link_set.count(fl)) {
            v.push_back({"fixed link", "fixed chain link " + std::to_string(fl.a) + "-" + std::to_string(fl.b) +
                                           " missing"});
        }
    }

    // mesh bound
    if (static_cast<int>(link_set.size()) > mesh_links) {
        v.push_back({"link budget", std::to_string(link_set.size()) + " links exceed the 3D-mesh budget of " +
                                        std::to_string(mesh_links)});
    }
    for (int s = 0; s < slots; ++s) {
        if (degree[s] > kMaxLinkDegree) {
            v.push_back({"port budget", "router at slot " + std::to_string(s) + " has " +
                                            std::to_string(degree[s] + 1) + " ports (max " +
                                            std::to_string(kMaxLinkDegree + 1) + ")"});
        }
    }

    // connectivity
    std::vector<Link> valid_links(link_set.begin(), link_set.end());
    std::erase_if(valid_links, [&](const Link& l) { return owner[l.a] < 0 || owner[l.b] < 0; });
    if (!connected(slots, valid_links, owner)) {
        v.push_back({"connectivity", "link graph does not connect all occupied routers"});
    }
    return v;
}

bool is_valid(const Platform& platform, const Placement& placement) {
    return validate_placement(platform, placement).empty();
}

// ===========================================================================
// Construction
// ===========================================================================

namespace {

std::vector<Link> base_links(const Platform& platform, const std::vector<int>& order) {
    std::vector<Link> links = fixed_links(platform);
    for (int t = 0; t < platform.tier_count(); ++t) {
        if (platform.tiers[t].planar == PlanarLinks::Searchable) {
            auto g = grid_links(platform, t);
            links.insert(links.end(), g.begin(), g.end());
        }
    }
    auto v = vertical_links_for_order(platform, order);
    links.insert(links.end(), v.begin(), v.end());
    sort_unique(links);
    return links;
}

std::vector<int> identity_slots(const Platform& platform) {
    std::vector<int> core_slot;
    for (int t = 0; t < platform.tier_count(); ++t) {
        const int off = platform.tier_offset(t);
        for (int i = 0; i < platform.tiers[t].slots(); ++i) core_slot.push_back(off + i);
    }
    return core_slot;
}

}  // namespace

Placement canonical_placement(const Platform& platform, const Placement& placement) {
    Placement out = placement;
    const auto kinds = platform.core_kinds();
    const auto tiers = platform.core_tiers();
    std::map<std::pair<int, CoreKind>, std::vector<int>> groups;
    for (int c = 0; c < static_cast<int>(kinds.size()); ++c) groups[{tiers[c], kinds[c]}].push_back(c);
    for (const auto& [key, cores] : groups) {
        std::vector<int> slots;
        for (int c : cores) slots.push_back(placement.core_slot.at(c));
        std::sort(slots.begin(), slots.end());
        for (std::size_t i = 0; i < cores.size(); ++i) out.core_slot[cores[i]] = slots[i];
    }
    return out;
}

Placement mesh_placement(const Platform& platform) {
    Placement p;
    p.tier_order.resize(platform.tier_count());
    std::iota(p.tier_order.begin(), p.tier_order.end(), 0);
    p.core_slot = identity_slots(platform);
    p.links = base_links(platform, p.tier_order);
    return p;
}

Placement random_placement(const Platform& platform, std::uint64_t seed) {
    platform.validate();
    Rng rng(seed);
    Placement p;
    p.tier_order.resize(platform.tier_count());
    std::iota(p.tier_order.begin(), p.tier_order.end(), 0);
    rng.shuffle(p.tier_order);

    // cores are numbered tier by tier, so each tier's cores form a contiguous id range
    p.core_slot.assign(platform.core_count(), -1);
    int core = 0;
    for (int t = 0; t < platform.tier_count(); ++t) {
        std::vector<int> slots(platform.tiers[t].slots());
        std::iota(slots.begin(), slots.end(), platform.tier_offset(t));
        rng.shuffle(slots);
        for (int s : slots) p.core_slot[core++] = s;
    }

    p.links = base_links(platform, p.tier_order);
    const auto fixed = fixed_links(platform);
    std::vector<Link> removable;
    for (const auto& l : p.links) {
        if (!std::binary_search(fixed.begin(), fixed.end(), l)) removable.push_back(l);
    }
    rng.shuffle(removable);
    const double drop = 0.6 * rng.unit();
    const auto owner = slot_cores(platform, p);
    for (const auto& l : removable) {
        if (rng.unit() >= drop) continue;
        std::vector<Link> trial;
        trial.reserve(p.links.size());
        for (const auto& x : p.links) {
            if (!(x == l)) trial.push_back(x);
        }
        if (connected(platform.slot_count(), trial, owner)) p.links = std::move(trial);
    }
    return p;
}

// ===========================================================================
// Moves
// ===========================================================================

std::string to_string(const Move& move) {
    const char* name = "";
    switch (move.kind) {
        case Move::Kind::SwapCores: name = "swap-cores"; break;
        case Move::Kind::SwapTiers: name = "swap-tiers"; break;
        case Move::Kind::AddLink: name = "add-link"; break;
        case Move::Kind::RemoveLink: name = "remove-link"; break;
        case Move::Kind::ToggleVertical: name = "toggle-vertical"; break;
    }
    return std::string(name) + "(" + std::to_string(move.a) + "," + std::to_string(move.b) + ")";
}

Placement apply_move(const Platform& platform, const Placement& placement, const Move& move) {
    Placement out = placement;
    auto toggle = [&](const Link& l, bool add) {
        auto it = std::lower_bound(out.links.begin(), out.links.end(), l);
        bool present = it != out.links.end() && *it == l;
        if (add && !present) out.links.insert(it, l);
        if (!add && present) out.links.erase(it);
    };
    switch (move.kind) {
        case Move::Kind::SwapCores: {
            auto owner = slot_cores(platform, placement);
            int ca = owner.at(move.a);
            int cb = owner.at(move.b);
            if (ca < 0 || cb < 0) throw Error("swap-cores on an empty slot");
            std::swap(out.core_slot[ca], out.core_slot[cb]);
            break;
        }
        case Move::Kind::SwapTiers: {
            const auto& old_order = placement.tier_order;
            std::swap(out.tier_order.at(move.a), out.tier_order.at(move.b));
            // vertical bundles stay with their interface position and candidate index
            std::vector<Link> planar;
            for (const auto& l : placement.links) {
                if (!is_vertical(platform, l)) planar.push_back(l);
            }
            std::vector<Link> vertical;
            for (std::size_t lvl = 0; lvl + 1 < old_order.size(); ++lvl) {
                auto old_c = vertical_candidates(platform, old_order[lvl], old_order[lvl + 1]);
                auto new_c = vertical_candidates(platform, out.tier_order[lvl], out.tier_order[lvl + 1]);
                for (std::size_t i = 0; i < old_c.size() && i < new_c.size(); ++i) {
                    if (std::binary_search(placement.links.begin(), placement.links.end(), old_c[i])) {
                        vertical.push_back(new_c[i]);
                    }
                }
            }
            out.links = planar;
            out.links.insert(out.links.end(), vertical.begin(), vertical.end());
            sort_unique(out.links);
            break;
        }
        case Move::Kind::AddLink:
            toggle(make_link(move.a, move.b), true);
            break;
        case Move::Kind::RemoveLink:
            toggle(make_link(move.a, move.b), false);
            break;
        case Move::Kind::ToggleVertical: {
            Link l = make_link(move.a, move.b);
            bool present = std::binary_search(out.links.begin(), out.links.end(), l);
            toggle(l, !present);
            break;
        }
    }
    return out;
}

std::vector<Move> candidate_moves(const Platform& platform, const Placement& placement) {
    std::vector<Move> cand;
    const auto owner = slot_cores(platform, placement);
    const auto kinds = platform.core_kinds();

    for (int t = 0; t < platform.tier_count(); ++t) {
        const int off = platform.tier_offset(t);
        const int n = platform.tiers[t].slots();
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                int ci = owner[off + i];
                int cj = owner[off + j];
                // same-kind swaps are relabelings with identical physics
                if (ci >= 0 && cj >= 0 && kinds[ci] != kinds[cj]) {
                    cand.push_back({Move::Kind::SwapCores, off + i, off + j});
                }
            }
        }
    }
    for (int a = 0; a < platform.tier_count(); ++a) {
        for (int b = a + 1; b < platform.tier_count(); ++b) cand.push_back({Move::Kind::SwapTiers, a, b});
    }
    for (int t = 0; t < platform.tier_count(); ++t) {
        for (const auto& l : planar_candidates(platform, t)) {
            bool present = std::binary_search(placement.links.begin(), placement.links.end(), l);
            cand.push_back({present ? Move::Kind::RemoveLink : Move::Kind::AddLink, l.a, l.b});
        }
    }
    for (std::size_t lvl = 0; lvl + 1 < placement.tier_order.size(); ++lvl) {
        for (const auto& l :
             vertical_candidates(platform, placement.tier_order[lvl], placement.tier_order[lvl + 1])) {
            cand.push_back({Move::Kind::ToggleVertical, l.a, l.b});
        }
    }

    return cand;
}

std::vector<Move> neighbor_moves(const Platform& platform, const Placement& placement) {
    std::vector<Move> out;
    for (const auto& m : candidate_moves(platform, placement)) {
        if (is_valid(platform, apply_move(platform, placement, m))) out.push_back(m);
    }
    return out;
}

}  // namespace hetrax
