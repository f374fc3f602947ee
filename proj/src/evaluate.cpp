#include "hetrax/evaluate.hpp"

#include <algorithm>

#include "hetrax/common.hpp"

namespace hetrax {

std::string to_string(ObjectiveSet s) {
    return s == ObjectiveSet::PT ? "pt" : "ptn";
}

ObjectiveSet objective_set_from_string(const std::string& s) {
    if (s == "pt" || s == "PT") return ObjectiveSet::PT;
    if (s == "ptn" || s == "PTN") return ObjectiveSet::PTN;
    throw Error("unknown objective set '" + s + "' (expected pt or ptn)");
}

std::size_t objective_count(ObjectiveSet s) {
    return s == ObjectiveSet::PT ? 3 : 4;
}

std::vector<double> Evaluation::objectives(ObjectiveSet set) const {
    if (set == ObjectiveSet::PT) return {util.mu, util.sigma, thermal_obj};
    return {util.mu, util.sigma, thermal_obj, noise_obj};
}

Evaluator::Evaluator(Platform platform, ModelConfig model, ThermalForm form)
    : platform_(std::move(platform)), form_(form) {
    platform_.validate();
    graph_ = build_kernel_graph(model);
    geometry_ = thermal_geometry(platform_);
}

EvaluationDetail Evaluator::detail(const Placement& original) const {
    // relabeling same-kind cores keeps the physics but can reorder float sums
    const Placement placement = canonical_placement(platform_, original);
    const auto violations = validate_placement(platform_, placement);
    if (!violations.empty()) {
        std::string msg = "invalid placement:";
        for (const auto& v : violations) msg += "\n  " + v.category + ": " + v.detail;
        throw Error(msg);
    }
    EvaluationDetail d;
    Network net(platform_, placement);
    d.mapping = build_mapping(platform_, placement, graph_.model, net);
    d.traffic = synthesize_traffic(graph_, platform_, d.mapping);
    d.link_bytes = link_bytes(d.traffic, net, placement.links.size());
    d.schedule = build_schedule(graph_, platform_, d.mapping);
    const double window = d.schedule.makespan > 0.0 ? d.schedule.makespan : 1.0;
    d.utilization = link_utilizations(d.link_bytes, platform_.link_capacity, window);

    d.power = power_map(platform_, placement, core_power(platform_, d.schedule.mean_duty), geometry_);
    d.thermal = evaluate_thermal(platform_, placement, d.power, geometry_, form_);
    d.noise = noise_objective(platform_, d.thermal.core_celsius);

    auto& e = d.eval;
    e.digest = placement_digest(platform_, placement);
    e.util = utilization_stats(d.utilization);
    e.thermal_obj = d.thermal.objective;
    e.noise_obj = d.noise.objective;
    e.peak_temp_c = d.thermal.peak_celsius;
    e.reram_temp_c = d.thermal.reram_tier_celsius;
    e.reram_log10_flip = d.noise.proxy.log10_flip_probability;
    e.perf = energy_and_edp(d.schedule, platform_, placement, d.link_bytes);
    e.feasible = dram_thermal_check(e.peak_temp_c) == Feasibility::Feasible;
    e.link_count = static_cast<int>(placement.links.size());
    e.mean_radix = mean_router_radix(router_radix_histogram(platform_, placement));

    const auto kinds = platform_.core_kinds();
    const auto levels = tier_levels(placement);
    e.level_power.assign(platform_.tier_count(), 0.0);
    const auto power = core_power(platform_, d.schedule.mean_duty);
    for (std::size_t c = 0; c < kinds.size(); ++c) {
        const int lvl = levels[slot_ref(platform_, placement.core_slot[c]).tier];
        e.level_power[lvl] += power[c];
        if (kinds[c] == CoreKind::RERAM && (e.reram_level < 0 || lvl < e.reram_level)) e.reram_level = lvl;
    }
    return d;
}

Evaluation Evaluator::evaluate(const Placement& placement) const {
    return detail(placement).eval;
}

}  // namespace hetrax
