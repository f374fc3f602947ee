#include "hetrax/perf.hpp"

#include <algorithm>
#include <cmath>

#include "hetrax/common.hpp"

namespace hetrax {

std::int64_t weight_cells(std::int64_t weight_bytes, const ReramParams& reram) {
    const std::int64_t bits = weight_bytes * 8;
    return (bits + reram.bits_per_cell - 1) / reram.bits_per_cell;
}

namespace {

double sm_rate(const Platform& p, std::size_t cores) {
    return static_cast<double>(cores) * p.spec(CoreKind::SM).sm().peak_flops * p.perf.sm_utilization;
}

double scalar_rate(const Platform& p, std::size_t cores) {
    return static_cast<double>(cores) * p.spec(CoreKind::SM).sm().peak_flops / p.perf.scalar_rate_divisor;
}

// Replicas of a weight block that fit in the compute half of the tier.
std::int64_t replicas(std::int64_t cells, std::int64_t available, const std::string& what) {
    if (cells > available) {
        throw Error("ReRAM capacity insufficient for " + what + ": " + std::to_string(cells) +
                    " cells required, " + std::to_string(available) + " available under double buffering");
    }
    return cells > 0 ? available / cells : 1;
}

// Input-bit-serial crossbar GEMM: each batch of `rep` rows takes precision_bits cycles.
double reram_gemm_time(std::int64_t rows, std::int64_t rep, int precision_bits, double freq) {
    const std::int64_t batches = (rows + rep - 1) / rep;
    return static_cast<double>(batches) * precision_bits / freq;
}

// Programming time: tiles write in parallel, each tile writes its crossbars row by row.
double program_time(std::int64_t cells, std::size_t cores, const Platform& p) {
    const auto& rr = p.spec(CoreKind::RERAM).reram();
    const auto per_core = (cells + static_cast<std::int64_t>(cores) - 1) / static_cast<std::int64_t>(cores);
    const auto xbars = (per_core + rr.cells_per_crossbar() - 1) / rr.cells_per_crossbar();
    const auto per_tile = (xbars + rr.tiles - 1) / rr.tiles;
    const auto par = std::max(1, p.perf.write_parallel_per_tile);
    const auto rounds = (per_tile + par - 1) / par;
    return static_cast<double>(rounds) * rr.crossbar_rows * rr.row_write_time_s;
}

void check_kind(const std::vector<int>& cores, const std::vector<CoreKind>& kinds, CoreKind& kind) {
    if (cores.empty()) throw Error("kernel_latency: no cores assigned");
    kind = kinds.at(cores.front());
    for (int c : cores) {
        if (kinds.at(c) != kind) throw Error("kernel_latency: cores of mixed kinds assigned");
    }
}

}  // namespace

namespace {

double latency_on(const KernelOp& op, const std::vector<int>& cores, const std::vector<CoreKind>& kinds,
                  const Platform& platform, const ModelConfig& model) {
    if (op.kind == KernelClass::EMBED) return static_cast<double>(op.output_bytes) / platform.dram_bandwidth;
    CoreKind kind;
    check_kind(cores, kinds, kind);
    const bool ff = op.kind == KernelClass::FF1 || op.kind == KernelClass::FF2;
    switch (kind) {
        case CoreKind::MC:
            throw Error("kernel " + op.label() + " assigned to an MC");
        case CoreKind::SM:
            if (ff) throw Error("policy violation: FF kernel " + op.label() + " assigned to SM cores");
            return static_cast<double>(op.gemm_flops()) / sm_rate(platform, cores.size()) +
                   static_cast<double>(op.elementwise_count) / scalar_rate(platform, cores.size());
        case CoreKind::RERAM: {
            if (op.kind == KernelClass::MHA2 || op.kind == KernelClass::MHA3) {
                throw Error("policy violation: dynamic-operand kernel " + op.label() + " assigned to ReRAM");
            }
            if (!op.gemm || op.elementwise_count > 0) {
                throw Error("kernel " + op.label() + " has no crossbar mapping");
            }
            const auto& spec = platform.spec(CoreKind::RERAM);
            const auto& rr = spec.reram();
            const std::int64_t half = rr.cell_capacity() * static_cast<std::int64_t>(cores.size()) / 2;
            const auto rep = replicas(weight_cells(op.weight_bytes, rr), half, op.label());
            return reram_gemm_time(op.gemm->m, rep, model.precision_bits, spec.frequency_hz);
        }
    }
    return 0.0;
}

}  // namespace

double kernel_latency(const KernelOp& op, const std::vector<int>& cores, const Platform& platform,
                      const ModelConfig& model) {
    return latency_on(op, cores, platform.core_kinds(), platform, model);
}

// ===========================================================================
// Schedule
// ===========================================================================

namespace {

struct BlockTiming {
    double duration = 0.0;
    std::vector<double> busy;  ///< per core
    std::map<std::string, double> classes;
};

class ScheduleBuilder {
public:
    ScheduleBuilder(const KernelGraph& g, const Platform& p, const Mapping& m)
        : g_(g), p_(p), m_(m), cores_(p.core_count()), kinds_(p.core_kinds()) {}

    Schedule build();

private:
    BlockTiming attention(const AttentionBlockOps& blk) const;
    BlockTiming feed_forward(const LayerOps& layer) const;
    /// FF weight programming for one layer; busy time lands on ReRAM and MC cores.
    BlockTiming ff_write(const LayerOps& layer) const;
    /// DRAM transfer of one layer's attention weights to the SMs.
    BlockTiming mha_prefetch(const LayerOps& layer) const;
    double latency(const KernelOp& op, const std::vector<int>& cores) const {
        return latency_on(op, cores, kinds_, p_, g_.model);
    }
    double transfer(std::int64_t bytes) const {
        return static_cast<double>(bytes) / p_.dram_bandwidth + p_.perf.dram_latency_s;
    }
    void mc_busy(BlockTiming& t, int core, std::int64_t bytes) const {
        const double per_mc = p_.dram_bandwidth / static_cast<double>(m_.mcs.size());
        t.busy[m_.mc_of.at(core)] += static_cast<double>(bytes) / per_mc;
    }
    void push(Schedule& s, std::string label, double duration, const std::vector<const BlockTiming*>& parts,
              bool warmup) const;

    const KernelGraph& g_;
    const Platform& p_;
    const Mapping& m_;
    const int cores_;
    const std::vector<CoreKind> kinds_;
};

BlockTiming ScheduleBuilder::attention(const AttentionBlockOps& blk) const {
    BlockTiming t;
    t.busy.assign(cores_, 0.0);
    std::map<int, std::map<std::string, double>> per_sm;
    auto run = [&](int core, const KernelOp& op) {
        double dt = latency(op, {core});
        t.busy[core] += dt;
        per_sm[core][to_string(op.kind)] += dt;
    };
    for (int id : blk.mha1) {
        const auto& op = g_.ops[id];
        run(op.head ? m_.head_sm.at(*op.head) : m_.hub, op);
    }
    for (int id : blk.mha2) run(m_.head_sm.at(*g_.ops[id].head), g_.ops[id]);
    for (int id : blk.mha3) run(m_.head_sm.at(*g_.ops[id].head), g_.ops[id]);

    // heads finish when the busiest SM does; the hub then concatenates and projects
    int critical = m_.hub;
    for (const auto& [core, classes] : per_sm) {
        if (t.busy[core] > t.busy[critical]) critical = core;
    }
    const double heads = t.busy[critical];
    t.classes = per_sm[critical];
    const double mha4 = latency(g_.ops[blk.mha4], {m_.hub});
    const double ln1 = latency(g_.ops[blk.lnorm1], {m_.hub});
    t.busy[m_.hub] += mha4 + ln1;
    t.classes["MHA4"] += mha4;
    t.classes["LNORM1"] += ln1;
    t.duration = heads + mha4 + ln1;
    return t;
}

BlockTiming ScheduleBuilder::feed_forward(const LayerOps& layer) const {
    BlockTiming t;
    t.busy.assign(cores_, 0.0);
    const auto& spec = p_.spec(CoreKind::RERAM);
    const auto& rr = spec.reram();
    const auto& ff1 = g_.ops[layer.ff1];
    const auto& ff2 = g_.ops[layer.ff2];
    const int bits = g_.model.precision_bits;
    double t1 = 0.0;
    double t2 = 0.0;
    double pipeline = 0.0;
    if (m_.ff1_cores == m_.ff2_cores) {
        // one core holds both matrices; no stage overlap
        const std::int64_t half = rr.cell_capacity() * static_cast<std::int64_t>(m_.ff1_cores.size()) / 2;
        const auto cells = weight_cells(ff1.weight_bytes, rr) + weight_cells(ff2.weight_bytes, rr);
        const auto rep = replicas(cells, half, "FF1+FF2");
        t1 = reram_gemm_time(ff1.gemm->m, rep, bits, spec.frequency_hz);
        t2 = reram_gemm_time(ff2.gemm->m, rep, bits, spec.frequency_hz);
        pipeline = t1 + t2;
        for (int c : m_.ff1_cores) t.busy[c] += pipeline;
    } else {
        t1 = latency(ff1, m_.ff1_cores);
        t2 = latency(ff2, m_.ff2_cores);
        // rows stream through both stages; the second stage starts one row batch late
        pipeline = std::max(t1, t2) + bits / spec.frequency_hz;
        for (int c : m_.ff1_cores) t.busy[c] += t1;
        for (int c : m_.ff2_cores) t.busy[c] += t2;
    }
    const double ln2 = latency(g_.ops[layer.lnorm2], {m_.hub});
    t.busy[m_.hub] += ln2;
    t.classes["FF1"] = t1;
    t.classes["FF2"] = t2;
    t.classes["LNORM2"] = ln2;
    t.duration = pipeline + ln2;
    return t;
}

BlockTiming ScheduleBuilder::ff_write(const LayerOps& layer) const {
    BlockTiming t;
    t.busy.assign(cores_, 0.0);
    const auto& rr = p_.spec(CoreKind::RERAM).reram();
    const auto& ff1 = g_.ops[layer.ff1];
    const auto& ff2 = g_.ops[layer.ff2];
    const std::int64_t bytes = ff1.weight_bytes + ff2.weight_bytes;

    // replicas are programmed too, so the write covers the whole compute half in use
    double prog = 0.0;
    if (m_.ff1_cores == m_.ff2_cores) {
        const std::int64_t half = rr.cell_capacity() * static_cast<std::int64_t>(m_.ff1_cores.size()) / 2;
        const auto cells = weight_cells(ff1.weight_bytes, rr) + weight_cells(ff2.weight_bytes, rr);
        prog = program_time(cells * replicas(cells, half, "FF1+FF2"), m_.ff1_cores.size(), p_);
        for (int c : m_.ff1_cores) t.busy[c] += prog;
    } else {
        auto stage = [&](const KernelOp& op, const std::vector<int>& cores) {
            const std::int64_t half = rr.cell_capacity() * static_cast<std::int64_t>(cores.size()) / 2;
            const auto cells = weight_cells(op.weight_bytes, rr);
            const double dt = program_time(cells * replicas(cells, half, op.label()), cores.size(), p_);
            for (int c : cores) t.busy[c] += dt;
            return dt;
        };
        prog = std::max(stage(ff1, m_.ff1_cores), stage(ff2, m_.ff2_cores));
    }
    for (int c : m_.ff1_cores) mc_busy(t, c, ff1.weight_bytes / static_cast<std::int64_t>(m_.ff1_cores.size()));
    for (int c : m_.ff2_cores) mc_busy(t, c, ff2.weight_bytes / static_cast<std::int64_t>(m_.ff2_cores.size()));
    const double xfer = transfer(bytes);
    t.duration = std::max(xfer - p_.perf.dram_latency_s, prog) + p_.perf.dram_latency_s;
    t.classes["weight-write"] = t.duration;
    return t;
}

BlockTiming ScheduleBuilder::mha_prefetch(const LayerOps& layer) const {
    BlockTiming t;
    t.busy.assign(cores_, 0.0);
    std::int64_t bytes = 0;
    for (const auto& blk : layer.attention) {
        for (int id : blk.mha1) {
            const auto& op = g_.ops[id];
            bytes += op.weight_bytes;
            mc_busy(t, op.head ? m_.head_sm.at(*op.head) : m_.hub, op.weight_bytes);
        }
        bytes += g_.ops[blk.mha4].weight_bytes;
        mc_busy(t, m_.hub, g_.ops[blk.mha4].weight_bytes);
    }
    t.duration = transfer(bytes);
    t.classes["weight-prefetch"] = t.duration;
    return t;
}

void ScheduleBuilder::push(Schedule& s, std::string label, double duration,
                           const std::vector<const BlockTiming*>& parts, bool warmup) const {
    SchedulePhase ph;
    ph.label = std::move(label);
    ph.start = s.makespan;
    ph.duration = duration;
    ph.warmup = warmup;
    ph.duty.assign(cores_, 0.0);
    if (duration > 0.0) {
        for (const auto* part : parts) {
            for (int c = 0; c < cores_; ++c) ph.duty[c] += part->busy[c] / duration;
        }
        for (auto& d : ph.duty) d = std::min(d, 1.0);
    }
    s.makespan += duration;
    s.phases.push_back(std::move(ph));
}

Schedule ScheduleBuilder::build() {
    Schedule s;
    if (g_.layers.empty()) {
        s.mean_duty.assign(cores_, 0.0);
        return s;
    }
    const bool parallel = g_.model.topology == LayerTopology::ParallelAttention;
    const auto& layers = g_.layers;
    const std::size_t L = layers.size();

    // layers with the same block structure have identical timings
    std::vector<BlockTiming> mha, ffn, write, prefetch;
    std::vector<std::size_t> shape(L);
    std::map<std::size_t, std::size_t> shape_index;
    for (std::size_t l = 0; l < L; ++l) {
        auto [it, fresh] = shape_index.emplace(layers[l].attention.size(), mha.size());
        shape[l] = it->second;
        if (fresh) {
            BlockTiming acc;
            acc.busy.assign(cores_, 0.0);
            for (const auto& blk : layers[l].attention) {
                auto b = attention(blk);
                acc.duration += b.duration;
                for (int c = 0; c < cores_; ++c) acc.busy[c] += b.busy[c];
                for (const auto& [k, v] : b.classes) acc.classes[k] += v;
            }
            mha.push_back(std::move(acc));
            ffn.push_back(feed_forward(layers[l]));
            write.push_back(ff_write(layers[l]));
            prefetch.push_back(mha_prefetch(layers[l]));
        }
        s.weight_load_time += prefetch[shape[l]].duration + transfer(g_.ops[layers[l].ff1].weight_bytes +
                                                                     g_.ops[layers[l].ff2].weight_bytes);
    }

    // warmup: input embedding, first attention weights and (parallel) first FF weights
    BlockTiming embed;
    embed.busy.assign(cores_, 0.0);
    const auto& emb = g_.ops[g_.embed];
    embed.duration = latency(emb, {}) + p_.perf.dram_latency_s;
    embed.busy[m_.home_mc] += static_cast<double>(emb.output_bytes) /
                              (p_.dram_bandwidth / static_cast<double>(m_.mcs.size()));
    double warm = embed.duration + prefetch[shape[0]].duration;
    std::vector<const BlockTiming*> warm_parts{&embed, &prefetch[shape[0]]};
    if (parallel) {
        warm += write[shape[0]].duration;
        warm_parts.push_back(&write[shape[0]]);
    }
    push(s, "warmup", warm, warm_parts, true);
    s.serial_makespan = warm;
    s.class_latency["EMBED"] = embed.duration;

    BlockTiming none;
    none.busy.assign(cores_, 0.0);
    for (std::size_t l = 0; l < L; ++l) {
        const BlockTiming& attn = mha[shape[l]];
        const BlockTiming& ff = ffn[shape[l]];
        const BlockTiming& next_pf = l + 1 < L ? prefetch[shape[l + 1]] : none;
        const std::string tag = "L" + std::to_string(l);
        if (!parallel) {
            const BlockTiming& w = write[shape[l]];
            s.stall += std::max(0.0, w.duration - attn.duration);
            s.stall += std::max(0.0, next_pf.duration - ff.duration);
            push(s, tag + ".mha", std::max(attn.duration, w.duration), {&attn, &w}, false);
            push(s, tag + ".ff", std::max(ff.duration, next_pf.duration), {&ff, &next_pf}, false);
            s.serial_makespan += attn.duration + w.duration + ff.duration + next_pf.duration;
        } else {
            const BlockTiming& next_w = l + 1 < L ? write[shape[l + 1]] : none;
            const double compute = std::max(attn.duration, ff.duration);
            const double hidden = std::max(next_w.duration, next_pf.duration);
            s.stall += std::max(0.0, hidden - compute);
            push(s, tag + ".fused", std::max(compute, hidden), {&attn, &ff, &next_w, &next_pf}, false);
            s.serial_makespan += attn.duration + ff.duration + next_w.duration + next_pf.duration;
        }
        for (const auto& [k, v] : attn.classes) s.class_latency[k] += v;
        for (const auto& [k, v] : ff.classes) s.class_latency[k] += v;
    }

    std::vector<double> idle(cores_), swing(cores_);
    for (int c = 0; c < cores_; ++c) {
        const auto& spec = p_.spec(kinds_[c]);
        idle[c] = spec.idle_power_w;
        swing[c] = spec.active_power_w - spec.idle_power_w;
    }
    s.mean_duty.assign(cores_, 0.0);
    for (const auto& ph : s.phases) {
        double power = 0.0;
        for (int c = 0; c < cores_; ++c) {
            s.mean_duty[c] += ph.duty[c] * ph.duration;
            power += idle[c] + ph.duty[c] * swing[c];
        }
        s.peak_power_w = std::max(s.peak_power_w, power);
    }
    if (s.makespan > 0.0) {
        for (auto& d : s.mean_duty) d /= s.makespan;
    }
    return s;
}

}  // namespace

Schedule build_schedule(const KernelGraph& graph, const Platform& platform, const Mapping& mapping) {
    return ScheduleBuilder(graph, platform, mapping).build();
}

// ===========================================================================
// Energy
// ===========================================================================

double link_energy_per_byte(const Platform& platform, bool vertical) {
    if (!vertical) return platform.energy.planar_j_per_byte;
    const double v = platform.energy.tsv_voltage_v;
    return 8.0 * 0.5 * platform.tsv.capacitance_f * v * v;
}

PerfResult energy_and_edp(const Schedule& schedule, const Platform& platform, const Placement& placement,
                          const std::vector<double>& link_bytes) {
    PerfResult r;
    const auto kinds = platform.core_kinds();
    for (const auto& ph : schedule.phases) {
        for (std::size_t c = 0; c < kinds.size(); ++c) {
            const auto& spec = platform.spec(kinds[c]);
            r.core_energy += (spec.idle_power_w + ph.duty[c] * (spec.active_power_w - spec.idle_power_w)) *
                             ph.duration;
        }
    }
    if (link_bytes.size() != placement.links.size()) throw Error("energy_and_edp: link byte vector size mismatch");
    const double planar = link_energy_per_byte(platform, false);
    const double tsv = link_energy_per_byte(platform, true);
    for (std::size_t k = 0; k < link_bytes.size(); ++k) {
        r.link_energy += link_bytes[k] * (is_vertical(platform, placement.links[k]) ? tsv : planar);
    }
    r.latency = schedule.makespan;
    r.energy = r.core_energy + r.link_energy;
    r.edp = r.energy * r.latency;
    r.stall = schedule.stall;
    r.class_latency = schedule.class_latency;
    return r;
}

double power_density(double units, double unit_power_w, double area_mm2) {
    if (!(area_mm2 > 0.0)) throw Error("power_density: area must be > 0");
    if (units < 0.0 || unit_power_w < 0.0) throw Error("power_density: units and power must be >= 0");
    return units * unit_power_w / area_mm2;
}

std::string to_string(Feasibility f) {
    return f == Feasibility::Feasible ? "feasible" : "infeasible";
}

Feasibility dram_thermal_check(double temp_celsius) {
    return temp_celsius > kDramMaxCelsius ? Feasibility::Infeasible : Feasibility::Feasible;
}

}  // namespace hetrax
