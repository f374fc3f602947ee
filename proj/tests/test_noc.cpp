#include <catch_amalgamated.hpp>

#include <algorithm>
#include <deque>
#include <random>
#include <set>

#include "helpers.hpp"
#include "hetrax/noc.hpp"

using namespace hetrax;

namespace {

ModelConfig toy(std::int64_t layers = 1) {
    ModelConfig m;
    m.num_layers = layers;
    m.d_model = 4;
    m.num_heads = 1;
    m.head_dim = 4;
    m.ff_dim = 16;
    m.seq_len = 2;
    return m;
}

// hop distance by plain BFS over the placement's link list
int bfs_hops(const Platform& p, const Placement& pl, int core_a, int core_b) {
    const int S = p.slot_count();
    std::vector<std::vector<int>> adj(S);
    for (const auto& l : pl.links) {
        adj[l.a].push_back(l.b);
        adj[l.b].push_back(l.a);
    }
    std::vector<int> dist(S, -1);
    std::deque<int> q{pl.core_slot[core_a]};
    dist[q.front()] = 0;
    while (!q.empty()) {
        int u = q.front();
        q.pop_front();
        for (int v : adj[u]) {
            if (dist[v] < 0) {
                dist[v] = dist[u] + 1;
                q.push_back(v);
            }
        }
    }
    return dist[pl.core_slot[core_b]];
}

struct Setup {
    Platform platform;
    Placement placement;
    KernelGraph graph;
    Mapping mapping;
    TrafficMatrix traffic;
};

Setup setup(const Platform& p, const ModelConfig& m, std::uint64_t seed) {
    Setup s{p, random_placement(p, seed), build_kernel_graph(m), {}, {}};
    Network net(s.platform, s.placement);
    s.mapping = build_mapping(s.platform, s.placement, m, net);
    s.traffic = synthesize_traffic(s.graph, s.platform, s.mapping);
    return s;
}

}  // namespace

TEST_CASE("toy stack flow set") {
    const auto s = setup(testing::unit_tiers(), toy(), 1);
    const auto kinds = s.platform.core_kinds();
    std::set<std::pair<std::string, std::string>> pairs;
    auto name = [&](int c) { return c == kDram ? std::string("DRAM") : to_string(kinds[c]); };
    for (const auto& f : s.traffic.flows) {
        CHECK(f.bytes > 0);
        CHECK(f.src != f.dst);
        pairs.insert({name(f.src), name(f.dst)});
    }
    CHECK(pairs.count({"DRAM", "MC"}));
    CHECK(pairs.count({"MC", "SM"}));
    CHECK(pairs.count({"SM", "RERAM"}));
    CHECK(pairs.count({"RERAM", "MC"}));

    std::int64_t weights = 0, embed = 0;
    for (const auto& op : s.graph.ops) {
        weights += op.weight_bytes;
        if (op.kind == KernelClass::EMBED) embed = op.output_bytes;
    }
    std::int64_t from_dram = 0, to_owner = 0;
    for (const auto& f : s.traffic.flows) {
        if (f.phase != FlowPhase::WeightLoad) continue;
        if (f.src == kDram) {
            from_dram += f.bytes;
        } else {
            to_owner += f.bytes;
        }
    }
    CHECK(from_dram == weights);
    CHECK(to_owner == weights);
    CHECK(s.traffic.phase_bytes(FlowPhase::Embed) == embed);
}

TEST_CASE("concat is many-to-one over the heads") {
    const auto s = setup(default_platform(), zoo_model("bert-large", 128), 3);
    int concat = 0;
    std::set<int> dst;
    for (const auto& f : s.traffic.flows) {
        if (f.phase == FlowPhase::Concat) {
            ++concat;
            dst.insert(f.dst);
        }
    }
    CHECK(concat == 16);
    CHECK(dst.size() == 1);
    CHECK(*dst.begin() == s.mapping.hub);
}

TEST_CASE("zero-layer model has no traffic") {
    const auto s = setup(default_platform(), toy(0), 1);
    CHECK(s.traffic.flows.empty());
    CHECK(s.traffic.total_bytes() == 0);
}

TEST_CASE("routes are shortest and deterministic") {
    const Platform p = testing::single_tier(3, 3);
    const Placement pl = mesh_placement(p);
    Network net(p, pl);
    // cores sit in id order on slots 0..8
    REQUIRE(pl.core_slot[0] == 0);
    CHECK(net.route(0, 8).size() == 4);
    CHECK(net.route(0, 1).size() == 1);
    CHECK(net.route(0, 0).empty());
    CHECK(net.route(2, 6) == net.route(2, 6));

    const Platform d = default_platform();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Placement r = random_placement(d, seed);
        Network n2(d, r);
        for (int a = 0; a < d.core_count(); a += 3) {
            for (int b = 0; b < d.core_count(); b += 5) {
                const auto path = n2.route(a, b);
                REQUIRE(static_cast<int>(path.size()) == bfs_hops(d, r, a, b));
                CHECK(n2.hops(a, b) == static_cast<int>(path.size()));
                // consecutive links chain from a to b
                int at = r.core_slot[a];
                for (int k : path) {
                    const auto& l = r.links[k];
                    REQUIRE((l.a == at || l.b == at));
                    at = l.a == at ? l.b : l.a;
                }
                CHECK(at == r.core_slot[b]);
                CHECK(n2.route(a, b) == path);
            }
        }
    }
}

TEST_CASE("link utilization additivity") {
    const Platform p = testing::single_tier(3, 1);
    const Placement pl = mesh_placement(p);
    Network net(p, pl);
    TrafficMatrix one{{Flow{0, 2, 1000, FlowPhase::MhaCompute}}};
    auto b1 = link_bytes(one, net, pl.links.size());
    auto u1 = link_utilizations(b1, 1e3, 1.0);
    REQUIRE(u1.size() == 2);
    CHECK(u1[0] == u1[1]);
    CHECK(u1[0] == 1.0);

    TrafficMatrix two{{Flow{0, 1, 500, FlowPhase::MhaCompute}, Flow{0, 2, 500, FlowPhase::FfCompute}}};
    auto b2 = link_bytes(two, net, pl.links.size());
    const int shared = net.link_index(0, 1);
    const int other = net.link_index(1, 2);
    CHECK(b2[shared] == 2 * b2[other]);

    TrafficMatrix dram{{Flow{kDram, 0, 99, FlowPhase::WeightLoad}}};
    for (double b : link_bytes(dram, net, pl.links.size())) CHECK(b == 0.0);
}

TEST_CASE("link bytes equal an independent tally") {
    const auto s = setup(default_platform(), zoo_model("bert-base", 128), 7);
    Network net(s.platform, s.placement);
    const auto bytes = link_bytes(s.traffic, net, s.placement.links.size());
    double total_path_bytes = 0.0;
    std::vector<double> tally(s.placement.links.size(), 0.0);
    for (const auto& f : s.traffic.flows) {
        if (f.src == kDram || f.dst == kDram) continue;
        const auto path = net.route(f.src, f.dst);
        REQUIRE(static_cast<int>(path.size()) == bfs_hops(s.platform, s.placement, f.src, f.dst));
        total_path_bytes += static_cast<double>(f.bytes) * path.size();
        for (int k : path) tally[k] += f.bytes;
    }
    CHECK(bytes == tally);
    double sum = 0.0;
    for (double b : bytes) sum += b;
    CHECK(sum == Catch::Approx(total_path_bytes).epsilon(1e-15));
}

TEST_CASE("utilization stats") {
    auto a = utilization_stats({0.5, 0.5, 0.5});
    CHECK(a.mu == 0.5);
    CHECK(a.sigma == 0.0);
    auto b = utilization_stats({0.0, 1.0});
    CHECK(b.mu == 0.5);
    CHECK(b.sigma == 0.5);
    CHECK_THROWS_AS(utilization_stats({}), Error);

    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> v(1 + gen() % 50);
        for (auto& x : v) x = u(gen);
        const auto s1 = utilization_stats(v);
        std::shuffle(v.begin(), v.end(), gen);
        const auto s2 = utilization_stats(v);
        CHECK(s1.mu == Catch::Approx(s2.mu).epsilon(1e-14));
        CHECK(s1.sigma == Catch::Approx(s2.sigma).epsilon(1e-12).margin(1e-15));
        const bool equal = std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
        CHECK((s1.sigma == 0.0) == equal);
    }
    CHECK(utilization_stats({0.3}).sigma == 0.0);
}

TEST_CASE("router radix histogram") {
    const Platform pair = testing::single_tier(2, 1);
    Placement pl = mesh_placement(pair);
    REQUIRE(pl.links.size() == 1);
    const auto h = router_radix_histogram(pair, pl);
    CHECK(h.size() == 1);
    CHECK(h.at(2) == 2);

    // the fixed ReRAM chain is sparser than a grid, so compare with every tier searchable
    Platform open = default_platform();
    for (auto& t : open.tiers) t.planar = PlanarLinks::Searchable;
    const Placement full = mesh_placement(open);
    CHECK(router_radix_histogram(open, full) == mesh_reference(open, full).radix_histogram);
    CHECK(static_cast<int>(full.links.size()) == mesh_reference(open, full).link_count);

    const Platform d = default_platform();
    const Placement r = random_placement(d, 5);
    int routers = 0;
    for (const auto& [ports, n] : router_radix_histogram(d, r)) {
        CHECK(ports >= 2);
        CHECK(ports <= kMaxLinkDegree + 2);
        routers += n;
    }
    CHECK(routers == d.core_count());
}

TEST_CASE("pruning unused links rescales the mean exactly") {
    const auto s = setup(default_platform(), zoo_model("bert-base", 128), 11);
    Network net(s.platform, s.placement);
    const auto bytes = link_bytes(s.traffic, net, s.placement.links.size());
    const auto u = link_utilizations(bytes, s.platform.link_capacity, 1.0);
    const auto pruned = prune_unused_links(s.platform, s.placement, bytes);
    REQUIRE(is_valid(s.platform, pruned));
    CHECK(pruned.links.size() <= s.placement.links.size());
    for (const auto& l : fixed_links(s.platform)) {
        CHECK(std::binary_search(pruned.links.begin(), pruned.links.end(), l));
    }
    // removing a zero-utilization link from the same routing: mu' = mu * L / (L - 1)
    std::vector<double> kept;
    int removed = 0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        if (u[k] == 0.0 && removed == 0) {
            ++removed;
            continue;
        }
        kept.push_back(u[k]);
    }
    if (removed) {
        const double L = static_cast<double>(u.size());
        CHECK(utilization_stats(kept).mu == Catch::Approx(utilization_stats(u).mu * L / (L - 1)).epsilon(1e-13));
    }
}

TEST_CASE("MQA never moves more bytes than MHA for short sequences") {
    const Platform p = default_platform();
    for (const char* name : {"bert-base", "bert-large", "bart-base"}) {
        for (std::int64_t n : {16, 128, 256}) {
            auto m = zoo_model(name, n);
            REQUIRE(n <= m.d_model / 2);
            auto q = m;
            q.attention = AttentionKind::MQA;
            for (std::uint64_t seed : {1, 2}) {
                CHECK(setup(p, q, seed).traffic.total_bytes() <= setup(p, m, seed).traffic.total_bytes());
            }
        }
    }
}

TEST_CASE("mapping") {
    const auto s = setup(default_platform(), zoo_model("bert-large", 128), 4);
    const auto kinds = s.platform.core_kinds();
    CHECK(s.mapping.sms.size() == 21);
    CHECK(s.mapping.mcs.size() == 6);
    CHECK(s.mapping.rerams.size() == 16);
    CHECK(s.mapping.head_sm.size() == 16);
    std::set<int> heads(s.mapping.head_sm.begin(), s.mapping.head_sm.end());
    CHECK(heads.size() == 16);
    CHECK_FALSE(heads.count(s.mapping.hub));
    CHECK(kinds[s.mapping.home_mc] == CoreKind::MC);
    Network net(s.platform, s.placement);
    for (int c = 0; c < s.platform.core_count(); ++c) {
        if (kinds[c] == CoreKind::MC) {
            CHECK(s.mapping.mc_of[c] == -1);
            continue;
        }
        const int mine = net.hops(c, s.mapping.mc_of[c]);
        for (int mc : s.mapping.mcs) CHECK(mine <= net.hops(c, mc));
    }
    CHECK(s.mapping.ff1_cores.size() + s.mapping.ff2_cores.size() == 16);
}
