#pragma once

#include <utility>
#include <vector>

#include "hetrax/platform.hpp"

namespace hetrax {

using Matrix = std::vector<std::vector<double>>;  ///< [column][level], level 0 at the sink

enum class ThermalForm { Product, Peak };
std::string to_string(ThermalForm form);
ThermalForm thermal_form_from_string(const std::string& s);

/// Column grid shared by all tiers: the finest tier grid. Every slot spreads
/// its power over the columns it overlaps, weighted by overlapped area.
struct ThermalGeometry {
    int columns_x = 0;
    int columns_y = 0;
    /// slot -> (column, fraction of the slot's area)
    std::vector<std::vector<std::pair<int, double>>> slot_columns;

    int columns() const { return columns_x * columns_y; }
};

ThermalGeometry thermal_geometry(const Platform& platform);

/// idle + duty * (active - idle) per core. Duty is clamped to [0, 1].
std::vector<double> core_power(const Platform& platform, const std::vector<double>& duty);

struct PowerMap {
    int columns_x = 0;
    int columns_y = 0;
    Matrix P;  ///< W per column and level
};

PowerMap power_map(const Platform& platform, const Placement& placement, const std::vector<double>& core_power_w,
                   const ThermalGeometry& geometry);

/// T(n,k) = sum_{i<=k} P(n,i) * sum_{j<=i} R_j + R_b * sum_{i<=k} P(n,i)
Matrix vertical_temps(const Matrix& P, const std::vector<double>& r_layer, double r_base);

/// Series-resistor ladder: R_b * P_total + sum_{j<=k} R_j * sum_{i>=j} P(n,i)
Matrix rc_ladder_oracle(const Matrix& P, const std::vector<double>& r_layer, double r_base);

/// Per level: max over columns minus min over columns.
std::vector<double> lateral_spread(const Matrix& T);

double thermal_objective(const Matrix& T, const std::vector<double>& delta, ThermalForm form);

struct ThermalResult {
    Matrix T;                  ///< K above ambient
    std::vector<double> delta;
    double objective = 0.0;
    double max_rise = 0.0;
    double max_delta = 0.0;
    double peak_celsius = 0.0;
    double reram_tier_celsius = 0.0;  ///< hottest ReRAM core, ambient when there is none
    std::vector<double> core_celsius;
    bool degenerate = false;  ///< max lateral spread below 0.01 K
};

ThermalResult evaluate_thermal(const Platform& platform, const Placement& placement, const PowerMap& pmap,
                               const ThermalGeometry& geometry, ThermalForm form = ThermalForm::Product);

}  // namespace hetrax
