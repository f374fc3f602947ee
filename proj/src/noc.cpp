#include "hetrax/noc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "hetrax/common.hpp"

namespace hetrax {

std::string to_string(FlowPhase phase) {
    switch (phase) {
        case FlowPhase::MhaCompute: return "mha-compute";
        case FlowPhase::FfCompute: return "ff-compute";
        case FlowPhase::WeightLoad: return "weight-load";
        case FlowPhase::Concat: return "concat";
        case FlowPhase::Embed: return "embed";
    }
    return "?";
}

FlowPhase flow_phase_from_string(const std::string& s) {
    for (auto p : {FlowPhase::MhaCompute, FlowPhase::FfCompute, FlowPhase::WeightLoad, FlowPhase::Concat,
                   FlowPhase::Embed}) {
        if (to_string(p) == s) return p;
    }
    throw Error("unknown flow phase '" + s + "'");
}

std::int64_t TrafficMatrix::total_bytes() const {
    std::int64_t t = 0;
    for (const auto& f : flows) t += f.bytes;
    return t;
}

std::int64_t TrafficMatrix::phase_bytes(FlowPhase phase) const {
    std::int64_t t = 0;
    for (const auto& f : flows) {
        if (f.phase == phase) t += f.bytes;
    }
    return t;
}

// ===========================================================================
// Network
// ===========================================================================

Network::Network(const Platform& platform, const Placement& placement) {
    const int S = platform.slot_count();
    adj_.assign(S, {});
    link_id_.assign(static_cast<std::size_t>(S) * S, -1);
    slot_core_ = slot_cores(platform, placement);
    core_slot_ = placement.core_slot;
    const auto levels = tier_levels(placement);
    pos_.resize(S);
    for (int s = 0; s < S; ++s) {
        auto r = slot_ref(platform, s);
        pos_[s] = {levels.at(r.tier), r.x, r.y};
    }
    for (int i = 0; i < static_cast<int>(placement.links.size()); ++i) {
        const auto& l = placement.links[i];
        adj_[l.a].push_back(l.b);
        adj_[l.b].push_back(l.a);
        link_id_[static_cast<std::size_t>(l.a) * S + l.b] = i;
    }
    for (auto& nbrs : adj_) {
        std::sort(nbrs.begin(), nbrs.end(), [&](int u, int v) { return pos_[u] < pos_[v]; });
    }

    dist_.assign(static_cast<std::size_t>(S) * S, -1);
    have_row_.assign(S, 0);
}

const int* Network::row(int src) const {
    const std::size_t S = adj_.size();
    int* r = &dist_[static_cast<std::size_t>(src) * S];
    if (have_row_[src]) return r;
    have_row_[src] = 1;
    if (slot_core_[src] < 0) return r;
    r[src] = 0;
    std::vector<int> queue{src};
    for (std::size_t head = 0; head < queue.size(); ++head) {
        int u = queue[head];
        for (int v : adj_[u]) {
            if (r[v] < 0 && slot_core_[v] >= 0) {
                r[v] = r[u] + 1;
                queue.push_back(v);
            }
        }
    }
    return r;
}

int Network::hops(int core_a, int core_b) const {
    return row(core_slot_[core_b])[core_slot_[core_a]];
}

int Network::link_index(int slot_a, int slot_b) const {
    return link_id_[static_cast<std::size_t>(std::min(slot_a, slot_b)) * adj_.size() + std::max(slot_a, slot_b)];
}

std::vector<int> Network::route(int src_core, int dst_core) const {
    int s = core_slot_.at(src_core);
    const int t = core_slot_.at(dst_core);
    const int* to_t = row(t);  // hop counts are symmetric
    if (to_t[s] < 0) {
        throw Error("no route between cores " + std::to_string(src_core) + " and " + std::to_string(dst_core));
    }
    std::vector<int> path;
    while (s != t) {
        const int want = to_t[s] - 1;
        int next = -1;
        for (int v : adj_[s]) {
            if (slot_core_[v] >= 0 && to_t[v] == want) {
                next = v;
                break;
            }
        }
        path.push_back(link_index(s, next));
        s = next;
    }
    return path;
}

// ===========================================================================
// Mapping
// ===========================================================================

Mapping build_mapping(const Platform& platform, const Placement& placement, const ModelConfig& model,
                      const Network& net) {
    Mapping m;
    const auto kinds = platform.core_kinds();
    const int cores = platform.core_count();
    auto by_position = [&](int a, int b) {
        return net.position(net.core_slot(a)) < net.position(net.core_slot(b));
    };
    for (int c = 0; c < cores; ++c) {
        if (kinds[c] == CoreKind::SM) m.sms.push_back(c);
        if (kinds[c] == CoreKind::MC) m.mcs.push_back(c);
    }
    if (m.sms.empty()) throw Error("mapping: platform has no SM cores");
    if (m.mcs.empty()) throw Error("mapping: platform has no MC cores");
    std::sort(m.sms.begin(), m.sms.end(), by_position);
    std::sort(m.mcs.begin(), m.mcs.end(), by_position);

    // ReRAM pipeline: tiers bottom-up, chain order within each tier
    const auto owner = slot_cores(platform, placement);
    for (int t : placement.tier_order) {
        for (int s : chain_slots(platform, t)) {
            int c = owner[s];
            if (c >= 0 && kinds[c] == CoreKind::RERAM) m.rerams.push_back(c);
        }
    }
    if (m.rerams.empty()) throw Error("mapping: platform has no ReRAM cores for the FF network");

    m.hub = m.sms.front();
    const int h = static_cast<int>(model.num_heads);
    std::vector<int> pool = m.sms;
    if (static_cast<int>(m.sms.size()) >= h + 1) pool.erase(pool.begin());
    for (int i = 0; i < h; ++i) m.head_sm.push_back(pool[i % pool.size()]);

    m.mc_of.assign(cores, -1);
    for (int c = 0; c < cores; ++c) {
        if (kinds[c] == CoreKind::MC) continue;
        int best = -1;
        int best_hops = 0;
        for (int mc : m.mcs) {
            int d = net.hops(c, mc);
            if (d < 0) continue;
            if (best < 0 || d < best_hops) {
                best = mc;
                best_hops = d;
            }
        }
        if (best < 0) throw Error("mapping: core " + std::to_string(c) + " cannot reach any MC");
        m.mc_of[c] = best;
    }
    m.home_mc = m.mc_of[m.hub];

    const std::size_t r = m.rerams.size();
    if (r == 1) {
        m.ff1_cores = m.rerams;
        m.ff2_cores = m.rerams;
    } else {
        const std::size_t half = (r + 1) / 2;
        m.ff1_cores.assign(m.rerams.begin(), m.rerams.begin() + half);
        m.ff2_cores.assign(m.rerams.begin() + half, m.rerams.end());
    }
    return m;
}

// ===========================================================================
// Traffic synthesis
// ===========================================================================

namespace {

class TrafficBuilder {
public:
    void add(int src, int dst, std::int64_t bytes, FlowPhase phase) {
        if (src == dst || bytes <= 0) return;
        acc_[{src, dst, static_cast<int>(phase)}] += bytes * repeat_;
    }
    void set_repeat(std::int64_t r) { repeat_ = r; }

    TrafficMatrix finish() const {
        TrafficMatrix t;
        for (const auto& [key, bytes] : acc_) {
            const auto& [src, dst, phase] = key;
            t.flows.push_back(Flow{src, dst, bytes, static_cast<FlowPhase>(phase)});
        }
        return t;
    }

private:
    std::map<std::tuple<int, int, int>, std::int64_t> acc_;
    std::int64_t repeat_ = 1;
};

// Row-wise split of a weight matrix over cores; remainder bytes go to the first cores.
std::vector<std::int64_t> shard_bytes(std::int64_t total, std::size_t parts) {
    std::vector<std::int64_t> out(parts, total / static_cast<std::int64_t>(parts));
    for (std::int64_t i = 0; i < total % static_cast<std::int64_t>(parts); ++i) ++out[i];
    return out;
}

}  // namespace

TrafficMatrix synthesize_traffic(const KernelGraph& graph, const Platform& platform, const Mapping& mapping) {
    (void)platform;
    TrafficBuilder tb;
    if (graph.ops.empty()) return tb.finish();

    const auto& model = graph.model;
    const int hub = mapping.hub;
    const int home = mapping.home_mc;
    const bool parallel = model.topology == LayerTopology::ParallelAttention;
    const bool mqa = model.attention == AttentionKind::MQA;
    if (static_cast<std::int64_t>(mapping.head_sm.size()) != model.num_heads) {
        throw Error("traffic: mapping covers " + std::to_string(mapping.head_sm.size()) + " heads, model has " +
                    std::to_string(model.num_heads));
    }

    auto weight_load = [&](int core, std::int64_t bytes) {
        tb.add(kDram, mapping.mc_of.at(core), bytes, FlowPhase::WeightLoad);
        tb.add(mapping.mc_of.at(core), core, bytes, FlowPhase::WeightLoad);
    };
    auto owner_of = [&](const KernelOp& op) -> int {
        if (op.head) return mapping.head_sm.at(*op.head);
        return hub;
    };

    tb.add(kDram, home, graph.ops.at(graph.embed).output_bytes, FlowPhase::Embed);

    std::vector<int> head_sms;
    for (int s : mapping.head_sm) {
        if (std::find(head_sms.begin(), head_sms.end(), s) == head_sms.end()) head_sms.push_back(s);
    }
    const bool hub_has_head = std::find(head_sms.begin(), head_sms.end(), hub) != head_sms.end();

    // layers with the same block structure move identical volumes between the same cores
    std::map<std::size_t, std::pair<const LayerOps*, std::int64_t>> shapes;
    for (const auto& layer : graph.layers) {
        auto [it, fresh] = shapes.emplace(layer.attention.size(), std::make_pair(&layer, std::int64_t{0}));
        ++it->second.second;
    }
    for (const auto& [shape, entry] : shapes) {
        const auto& layer = *entry.first;
        tb.set_repeat(entry.second);
        for (const auto& blk : layer.attention) {
            const auto& first = graph.ops.at(blk.mha1.front());
            const std::int64_t x_bytes = first.input_bytes;
            const int q_src = blk.cross ? hub : home;
            for (int s : head_sms) {
                tb.add(q_src, s, x_bytes, FlowPhase::MhaCompute);
                if (blk.cross) tb.add(home, s, x_bytes, FlowPhase::MhaCompute);
            }
            if (mqa && !hub_has_head) tb.add(home, hub, x_bytes, FlowPhase::MhaCompute);

            for (int id : blk.mha1) {
                const auto& op = graph.ops.at(id);
                const int owner = owner_of(op);
                weight_load(owner, op.weight_bytes);
                if (!op.head) {
                    // shared MQA K or V: computed on the hub, broadcast to every head SM
                    for (int s : head_sms) tb.add(hub, s, op.output_bytes, FlowPhase::MhaCompute);
                }
            }

            const auto h = static_cast<int>(blk.mha2.size());
            for (int i = 0; i < h; ++i) {
                // fused softmax: only the per-row rescale statistics move between SMs
                const std::int64_t rows = model.seq_len * model.bytes_per_value();
                tb.add(mapping.head_sm[i], mapping.head_sm[(i + 1) % h], rows, FlowPhase::MhaCompute);
            }
            for (int i = 0; i < h; ++i) {
                tb.add(mapping.head_sm[i], hub, graph.ops.at(blk.mha3[i]).output_bytes, FlowPhase::Concat);
            }
            weight_load(hub, graph.ops.at(blk.mha4).weight_bytes);
        }

        const auto& ff1 = graph.ops.at(layer.ff1);
        const auto& ff2 = graph.ops.at(layer.ff2);
        const auto& ln2 = graph.ops.at(layer.lnorm2);
        const auto& c1 = mapping.ff1_cores;
        const auto& c2 = mapping.ff2_cores;

        tb.add(parallel ? home : hub, c1.front(), ff1.input_bytes, FlowPhase::FfCompute);

        auto s1 = shard_bytes(ff1.weight_bytes, c1.size());
        for (std::size_t j = 0; j < c1.size(); ++j) weight_load(c1[j], s1[j]);
        auto s2 = shard_bytes(ff2.weight_bytes, c2.size());
        for (std::size_t j = 0; j < c2.size(); ++j) weight_load(c2[j], s2[j]);

        for (std::size_t j = 0; j + 1 < c1.size(); ++j) tb.add(c1[j], c1[j + 1], ff1.output_bytes, FlowPhase::FfCompute);
        tb.add(c1.back(), c2.front(), ff1.output_bytes, FlowPhase::FfCompute);
        for (std::size_t j = 0; j + 1 < c2.size(); ++j) tb.add(c2[j], c2[j + 1], ff2.output_bytes, FlowPhase::FfCompute);

        tb.add(c2.back(), home, ff2.output_bytes, FlowPhase::FfCompute);
        tb.add(home, hub, ff2.output_bytes, FlowPhase::FfCompute);
        tb.add(hub, home, ln2.output_bytes, FlowPhase::FfCompute);
    }
    return tb.finish();
}

std::vector<double> link_bytes(const TrafficMatrix& traffic, const Network& net, std::size_t link_count) {
    std::vector<double> out(link_count, 0.0);
    for (const auto& f : traffic.flows) {
        if (f.src == kDram || f.dst == kDram) continue;
        for (int k : net.route(f.src, f.dst)) out[k] += static_cast<double>(f.bytes);
    }
    return out;
}

std::vector<double> link_utilizations(const std::vector<double>& bytes, double link_capacity, double window_s) {
    if (!(window_s > 0.0)) throw Error("link_utilizations: window must be > 0");
    if (!(link_capacity > 0.0)) throw Error("link_utilizations: link capacity must be > 0");
    std::vector<double> u(bytes.size());
    const double denom = link_capacity * window_s;
    for (std::size_t k = 0; k < bytes.size(); ++k) u[k] = bytes[k] / denom;
    return u;
}

UtilizationStats utilization_stats(const std::vector<double>& u) {
    if (u.empty()) throw Error("utilization_stats: no links");
    const double L = static_cast<double>(u.size());
    double sum = 0.0;
    for (double x : u) sum += x;
    UtilizationStats st;
    st.mu = sum / L;
    double sq = 0.0;
    for (double x : u) sq += (x - st.mu) * (x - st.mu);
    st.sigma = std::sqrt(sq / L);
    return st;
}

std::map<int, int> router_radix_histogram(const Platform& platform, const Placement& placement) {
    const auto owner = slot_cores(platform, placement);
    const auto kinds = platform.core_kinds();
    std::vector<int> degree(platform.slot_count(), 0);
    for (const auto& l : placement.links) {
        ++degree[l.a];
        ++degree[l.b];
    }
    std::map<int, int> hist;
    for (int s = 0; s < platform.slot_count(); ++s) {
        if (owner[s] < 0) continue;
        int ports = degree[s] + 1 + (kinds[owner[s]] == CoreKind::MC ? 1 : 0);
        hist[ports] += 1;
    }
    return hist;
}

double mean_router_radix(const std::map<int, int>& histogram) {
    double routers = 0.0;
    double ports = 0.0;
    for (const auto& [p, n] : histogram) {
        routers += n;
        ports += static_cast<double>(p) * n;
    }
    return routers > 0 ? ports / routers : 0.0;
}

Placement prune_unused_links(const Platform& platform, const Placement& placement,
                             const std::vector<double>& bytes) {
    if (bytes.size() != placement.links.size()) throw Error("prune_unused_links: byte vector size mismatch");
    const auto fixed = fixed_links(platform);
    Placement out = placement;
    for (int k = static_cast<int>(placement.links.size()) - 1; k >= 0; --k) {
        const auto& l = placement.links[k];
        if (bytes[k] != 0.0 || std::binary_search(fixed.begin(), fixed.end(), l)) continue;
        Placement trial = out;
        trial.links.erase(std::find(trial.links.begin(), trial.links.end(), l));
        if (is_valid(platform, trial)) out = std::move(trial);
    }
    return out;
}

}  // namespace hetrax
