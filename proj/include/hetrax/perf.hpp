#pragma once

#include <map>
#include <string>
#include <vector>

#include "hetrax/noc.hpp"
#include "hetrax/platform.hpp"
#include "hetrax/workload.hpp"

namespace hetrax {

/// Latency of one kernel on the given cores (all of one kind).
double kernel_latency(const KernelOp& op, const std::vector<int>& cores, const Platform& platform,
                      const ModelConfig& model);

/// Crossbar cells needed for a weight matrix of `weight_bytes`.
std::int64_t weight_cells(std::int64_t weight_bytes, const ReramParams& reram);

struct SchedulePhase {
    std::string label;
    double start = 0.0;
    double duration = 0.0;
    std::vector<double> duty;  ///< per core, busy fraction of this phase
    bool warmup = false;
};

struct Schedule {
    std::vector<SchedulePhase> phases;
    double makespan = 0.0;
    double serial_makespan = 0.0;    ///< same work with no overlap
    double stall = 0.0;              ///< hidden work that outlasted its cover
    double weight_load_time = 0.0;   ///< modeled DRAM time of every weight transfer
    double peak_power_w = 0.0;       ///< max over phases of concurrent core power
    std::vector<double> mean_duty;   ///< per core, time averaged over the makespan
    std::map<std::string, double> class_latency;  ///< critical-path seconds per kernel class
};

Schedule build_schedule(const KernelGraph& graph, const Platform& platform, const Mapping& mapping);

struct PerfResult {
    double latency = 0.0;
    double energy = 0.0;
    double core_energy = 0.0;
    double link_energy = 0.0;
    double edp = 0.0;
    double stall = 0.0;
    std::map<std::string, double> class_latency;
};

/// Energy per byte over a link: planar constant, or 8 * C V^2 / 2 for a TSV.
double link_energy_per_byte(const Platform& platform, bool vertical);

PerfResult energy_and_edp(const Schedule& schedule, const Platform& platform, const Placement& placement,
                          const std::vector<double>& link_bytes);

double power_density(double units, double unit_power_w, double area_mm2);

enum class Feasibility { Feasible, Infeasible };
std::string to_string(Feasibility f);
inline constexpr double kDramMaxCelsius = 95.0;
Feasibility dram_thermal_check(double temp_celsius);

}  // namespace hetrax
