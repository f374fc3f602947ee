#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "hetrax/platform.hpp"
#include "hetrax/workload.hpp"

namespace hetrax {

inline constexpr int kDram = -1;  ///< endpoint id for the off-chip DRAM

enum class FlowPhase { MhaCompute, FfCompute, WeightLoad, Concat, Embed };
std::string to_string(FlowPhase phase);
FlowPhase flow_phase_from_string(const std::string& s);

struct Flow {
    int src = kDram;  ///< core id or kDram
    int dst = kDram;
    std::int64_t bytes = 0;  ///< per inference
    FlowPhase phase = FlowPhase::MhaCompute;
};

/// Flows aggregated per (src, dst, phase), sorted by that key.
struct TrafficMatrix {
    std::vector<Flow> flows;

    std::int64_t total_bytes() const;
    std::int64_t phase_bytes(FlowPhase phase) const;
};

/// Connectivity view of a placement: router adjacency and hop counts.
/// Not safe to share between threads (hop rows are filled lazily).
class Network {
public:
    Network(const Platform& platform, const Placement& placement);

    int slot_count() const { return static_cast<int>(adj_.size()); }
    int core_slot(int core) const { return core_slot_[core]; }
    int slot_core(int slot) const { return slot_core_[slot]; }
    int hops(int core_a, int core_b) const;
    /// (level, x, y) of a slot; the routing tie-break and mapping order key.
    const std::tuple<int, int, int>& position(int slot) const { return pos_[slot]; }
    /// Index into placement.links for every (a<b) adjacency, or -1.
    int link_index(int slot_a, int slot_b) const;

    /// Deterministic shortest path between two cores as indices into placement.links.
    std::vector<int> route(int src_core, int dst_core) const;

private:
    std::vector<std::vector<int>> adj_;  ///< sorted by position
    std::vector<int> slot_core_;
    std::vector<int> core_slot_;
    std::vector<std::tuple<int, int, int>> pos_;
    const int* row(int slot) const;  ///< hop counts from `slot`, filled on first use

    mutable std::vector<int> dist_;  ///< slot x slot, -1 when unreachable
    mutable std::vector<char> have_row_;
    std::vector<int> link_id_;  ///< slot x slot (a < b) -> link index
};

/// Kernel-to-core assignment derived from positions.
///
/// SMs and MCs are ordered by (level, x, y). The first SM is the hub: it owns
/// MHA4, both LayerNorms and (for MQA) the shared K/V projections. Heads go
/// round-robin over the remaining SMs when there are at least h of them,
/// otherwise over all SMs. ReRAM cores follow the pipeline chain; FF1 shards
/// occupy the first half of the chain and FF2 the second half.
struct Mapping {
    std::vector<int> sms;
    std::vector<int> mcs;
    std::vector<int> rerams;  ///< pipeline order
    int hub = -1;
    int home_mc = -1;          ///< MC nearest the hub; holds layer activations
    std::vector<int> head_sm;  ///< head -> SM core
    std::vector<int> mc_of;    ///< core -> serving MC (nearest by hops), -1 for MCs
    std::vector<int> ff1_cores;
    std::vector<int> ff2_cores;
};

Mapping build_mapping(const Platform& platform, const Placement& placement, const ModelConfig& model,
                      const Network& net);

TrafficMatrix synthesize_traffic(const KernelGraph& graph, const Platform& platform, const Mapping& mapping);

/// Per-link byte tally over placement.links. DRAM endpoints do not use NoC links.
std::vector<double> link_bytes(const TrafficMatrix& traffic, const Network& net, std::size_t link_count);

/// u_k = bytes_k / (link_capacity * window).
std::vector<double> link_utilizations(const std::vector<double>& bytes, double link_capacity, double window_s);

struct UtilizationStats {
    double mu = 0.0;
    double sigma = 0.0;
};

/// Population mean and standard deviation over all L links.
UtilizationStats utilization_stats(const std::vector<double>& u);

/// Router ports (incident links + local port, + DRAM port on MCs) -> router count.
std::map<int, int> router_radix_histogram(const Platform& platform, const Placement& placement);
double mean_router_radix(const std::map<int, int>& histogram);

/// Drops links that carry no traffic while the network stays connected and
/// fixed links stay in place. Links are tried from the highest index down.
Placement prune_unused_links(const Platform& platform, const Placement& placement,
                             const std::vector<double>& bytes);

}  // namespace hetrax
