#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace hetrax {

enum class CoreKind { SM, MC, RERAM };

std::string to_string(CoreKind kind);
CoreKind core_kind_from_string(const std::string& s);

// ===========================================================================
// Core specifications
// ===========================================================================

struct SmParams {
    double peak_flops = 0.0;  ///< FLOP/s at the core clock (tensor path)
    int tensor_cores = 0;
};

struct McParams {
    std::int64_t cache_bytes = 0;
};

struct ReramParams {
    int tiles = 0;
    int crossbars_per_tile = 0;
    int crossbar_rows = 0;
    int crossbar_cols = 0;
    int bits_per_cell = 0;
    int adc_bits = 0;
    double row_write_time_s = 0.0;
    double endurance = 0.0;  ///< write cycles per cell

    std::int64_t cells_per_crossbar() const {
        return static_cast<std::int64_t>(crossbar_rows) * crossbar_cols;
    }
    std::int64_t crossbars() const {
        return static_cast<std::int64_t>(tiles) * crossbars_per_tile;
    }
    std::int64_t cell_capacity() const { return crossbars() * cells_per_crossbar(); }
};

struct CoreSpec {
    CoreKind kind = CoreKind::SM;
    double area_mm2 = 0.0;
    double active_power_w = 0.0;
    double idle_power_w = 0.0;
    double frequency_hz = 0.0;
    std::variant<SmParams, McParams, ReramParams> details;

    const SmParams& sm() const;
    const McParams& mc() const;
    const ReramParams& reram() const;

    /// Throws Error describing the first broken invariant.
    void validate() const;
};

struct TsvSpec {
    double diameter_um = 0.0;
    double height_um = 0.0;
    double capacitance_f = 0.0;
    double resistance_ohm = 0.0;
};

// ===========================================================================
// Platform
// ===========================================================================

enum class PlanarLinks {
    Searchable,  ///< planar links are search variables
    FixedChain,  ///< links fixed offline as a snake-order pipeline chain
};

struct TierSpec {
    std::string name;
    int grid_x = 0;
    int grid_y = 0;
    std::vector<CoreKind> allowed_kinds;
    std::map<CoreKind, int> population;
    PlanarLinks planar = PlanarLinks::Searchable;

    int slots() const { return grid_x * grid_y; }
};

struct ThermalParams {
    std::vector<double> r_layer;  ///< K/W per vertical interface, index 0 = sink side
    double r_base = 0.0;          ///< K/W
    double ambient_c = 45.0;
};

struct EnergyParams {
    double planar_j_per_byte = 1e-12;
    double tsv_voltage_v = 0.8;
};

struct PerfParams {
    double sm_utilization = 0.6;
    double scalar_rate_divisor = 8.0;   ///< scalar rate = peak_flops / divisor
    int write_parallel_per_tile = 1;    ///< crossbars programmed concurrently per tile
    double dram_latency_s = 100e-9;     ///< fixed per-transfer DFI latency
};

struct NoiseParams {
    double g_min_s = 1e-6;
    double g_max_s = 100e-6;
    double read_voltage_v = 0.2;
    double flip_threshold = 1e-6;
};

struct Platform {
    std::string name;
    std::vector<CoreSpec> core_specs;  ///< exactly one per kind in use
    std::vector<TierSpec> tiers;
    double tier_width_mm = 10.0;
    double tier_height_mm = 10.0;
    ThermalParams thermal;
    TsvSpec tsv;
    double link_capacity = 0.0;   ///< bytes/s per link
    double dram_bandwidth = 0.0;  ///< bytes/s, aggregate over all MC ports
    EnergyParams energy;
    PerfParams perf;
    NoiseParams noise;

    const CoreSpec& spec(CoreKind kind) const;
    bool has_spec(CoreKind kind) const;

    int tier_count() const { return static_cast<int>(tiers.size()); }
    int slot_count() const;
    int tier_offset(int tier) const;
    int core_count() const;

    /// Core ids are assigned tier by tier, kinds in enum order within a tier.
    std::vector<CoreKind> core_kinds() const;
    std::vector<int> core_tiers() const;
    std::map<CoreKind, int> inventory() const;

    void validate() const;
};

/// Grid position of a global slot index.
struct SlotRef {
    int tier = 0;
    int x = 0;
    int y = 0;
    auto operator<=>(const SlotRef&) const = default;
};

SlotRef slot_ref(const Platform& platform, int slot);
int slot_index(const Platform& platform, const SlotRef& ref);

/// Default 4-tier platform: three 3x3 SM/MC tiers and one 4x4 ReRAM tier.
Platform default_platform();
/// Three 2x1 tiers ({SM, MC} twice and two ReRAM cores); small enough to enumerate.
Platform tiny_platform();

// ===========================================================================
// Placement genome
// ===========================================================================

/// Undirected router pair, stored with a < b (global slot indices).
struct Link {
    int a = 0;
    int b = 0;
    auto operator<=>(const Link&) const = default;
};

Link make_link(int u, int v);

struct Placement {
    std::vector<int> tier_order;  ///< level -> tier index; level 0 touches the heat sink
    std::vector<int> core_slot;   ///< core id -> global slot index
    std::vector<Link> links;      ///< sorted, unique

    bool operator==(const Placement&) const = default;
};

std::vector<int> slot_cores(const Platform& platform, const Placement& placement);  // slot -> core id or -1
std::vector<int> tier_levels(const Placement& placement);                           // tier -> level
bool is_vertical(const Platform& platform, const Link& link);

/// Canonical digest: tier order, core kind per slot and the link set. Two
/// placements that differ only by a relabeling of same-kind cores share it.
std::string placement_digest(const Platform& platform, const Placement& placement);

/// Candidate vertical bundles between two tiers, ordered by candidate index.
/// The tier with fewer slots enumerates its slots; each pairs with the
/// nearest-centroid slot of the other tier (normalized coordinates).
std::vector<Link> vertical_candidates(const Platform& platform, int tier_a, int tier_b);
/// Offline pipeline chain (snake order) for a FixedChain tier, in chain order.
std::vector<int> chain_slots(const Platform& platform, int tier);
std::vector<Link> fixed_links(const Platform& platform);
/// All same-tier pairs of a searchable tier.
std::vector<Link> planar_candidates(const Platform& platform, int tier);

struct MeshReference {
    int link_count = 0;
    int max_ports = 0;
    std::map<int, int> radix_histogram;  ///< ports -> router count
    std::vector<Link> links;
};

/// Full 3D mesh over every slot with the platform's tier order. No DRAM ports.
MeshReference mesh_reference(const Platform& platform);
/// Full 3D mesh using the placement's tier order and MC positions (DRAM ports counted).
MeshReference mesh_reference(const Platform& platform, const Placement& placement);

inline constexpr int kMaxLinkDegree = 6;  ///< 6 mesh neighbours; +1 local port = 7

struct Violation {
    std::string category;
    std::string detail;
};

std::vector<Violation> validate_placement(const Platform& platform, const Placement& placement);
bool is_valid(const Platform& platform, const Placement& placement);

Placement random_placement(const Platform& platform, std::uint64_t seed);

/// Same design with same-kind cores of each tier relabeled in slot order.
/// Placements sharing a digest share a canonical form.
Placement canonical_placement(const Platform& platform, const Placement& placement);

/// Full-mesh placement with the platform tier order and cores in id order.
Placement mesh_placement(const Platform& platform);

// ===========================================================================
// Neighbourhood moves
// ===========================================================================

struct Move {
    enum class Kind { SwapCores, SwapTiers, AddLink, RemoveLink, ToggleVertical };
    Kind kind = Kind::SwapCores;
    int a = 0;  ///< slot (SwapCores / links) or level (SwapTiers)
    int b = 0;
    auto operator<=>(const Move&) const = default;
};

std::string to_string(const Move& move);

/// Every structurally possible move, before validation.
std::vector<Move> candidate_moves(const Platform& platform, const Placement& placement);
/// Every move whose result passes validate_placement.
std::vector<Move> neighbor_moves(const Platform& platform, const Placement& placement);
Placement apply_move(const Platform& platform, const Placement& placement, const Move& move);

}  // namespace hetrax
