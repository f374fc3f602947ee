#pragma once

#include <string>
#include <vector>

#include "hetrax/noc.hpp"
#include "hetrax/noise.hpp"
#include "hetrax/perf.hpp"
#include "hetrax/platform.hpp"
#include "hetrax/thermal.hpp"
#include "hetrax/workload.hpp"

namespace hetrax {

enum class ObjectiveSet { PT, PTN };
std::string to_string(ObjectiveSet s);
ObjectiveSet objective_set_from_string(const std::string& s);
std::size_t objective_count(ObjectiveSet s);

/// Everything the search and the reports need about one placement.
struct Evaluation {
    std::string digest;
    UtilizationStats util;
    double thermal_obj = 0.0;
    double noise_obj = 0.0;
    double peak_temp_c = 0.0;
    double reram_temp_c = 0.0;
    double reram_log10_flip = 0.0;
    int reram_level = -1;  ///< lowest level holding a ReRAM core
    int link_count = 0;
    double mean_radix = 0.0;
    std::vector<double> level_power;  ///< W per level, sink first
    PerfResult perf;
    bool feasible = true;  ///< DRAM-safe peak temperature

    /// (mu, sigma, thermal) or (mu, sigma, thermal, noise)
    std::vector<double> objectives(ObjectiveSet set) const;
};

/// Full intermediate state for reports.
struct EvaluationDetail {
    Evaluation eval;
    Mapping mapping;
    TrafficMatrix traffic;
    std::vector<double> link_bytes;
    std::vector<double> utilization;
    Schedule schedule;
    PowerMap power;
    ThermalResult thermal;
    NoiseReport noise;
};

class Evaluator {
public:
    Evaluator(Platform platform, ModelConfig model, ThermalForm form = ThermalForm::Product);

    const Platform& platform() const { return platform_; }
    const KernelGraph& graph() const { return graph_; }
    ThermalForm form() const { return form_; }

    /// Throws Error listing violations for an invalid placement.
    Evaluation evaluate(const Placement& placement) const;
    EvaluationDetail detail(const Placement& placement) const;

private:
    Platform platform_;
    KernelGraph graph_;
    ThermalGeometry geometry_;
    ThermalForm form_;
};

}  // namespace hetrax
