#include "hetrax/thermal.hpp"

#include <algorithm>

#include "hetrax/common.hpp"

namespace hetrax {

std::string to_string(ThermalForm form) {
    return form == ThermalForm::Product ? "product" : "peak";
}

ThermalForm thermal_form_from_string(const std::string& s) {
    if (s == "product") return ThermalForm::Product;
    if (s == "peak") return ThermalForm::Peak;
    throw Error("unknown thermal form '" + s + "'");
}

ThermalGeometry thermal_geometry(const Platform& platform) {
    ThermalGeometry g;
    for (const auto& t : platform.tiers) {
        g.columns_x = std::max(g.columns_x, t.grid_x);
        g.columns_y = std::max(g.columns_y, t.grid_y);
    }
    auto overlap = [](double a0, double a1, double b0, double b1) {
        return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
    };
    g.slot_columns.resize(platform.slot_count());
    for (int s = 0; s < platform.slot_count(); ++s) {
        const auto r = slot_ref(platform, s);
        const auto& t = platform.tiers[r.tier];
        const double x0 = static_cast<double>(r.x) / t.grid_x;
        const double x1 = static_cast<double>(r.x + 1) / t.grid_x;
        const double y0 = static_cast<double>(r.y) / t.grid_y;
        const double y1 = static_cast<double>(r.y + 1) / t.grid_y;
        const double area = (x1 - x0) * (y1 - y0);
        for (int cy = 0; cy < g.columns_y; ++cy) {
            for (int cx = 0; cx < g.columns_x; ++cx) {
                const double ox = overlap(x0, x1, static_cast<double>(cx) / g.columns_x,
                                          static_cast<double>(cx + 1) / g.columns_x);
                const double oy = overlap(y0, y1, static_cast<double>(cy) / g.columns_y,
                                          static_cast<double>(cy + 1) / g.columns_y);
                const double f = ox * oy / area;
                if (f > 1e-12) g.slot_columns[s].push_back({cy * g.columns_x + cx, f});
            }
        }
    }
    return g;
}

std::vector<double> core_power(const Platform& platform, const std::vector<double>& duty) {
    const auto kinds = platform.core_kinds();
    if (duty.size() != kinds.size()) throw Error("core_power: duty vector size mismatch");
    std::vector<double> out(kinds.size());
    for (std::size_t c = 0; c < kinds.size(); ++c) {
        const auto& spec = platform.spec(kinds[c]);
        const double u = std::clamp(duty[c], 0.0, 1.0);
        out[c] = spec.idle_power_w + u * (spec.active_power_w - spec.idle_power_w);
    }
    return out;
}

PowerMap power_map(const Platform& platform, const Placement& placement, const std::vector<double>& core_power_w,
                   const ThermalGeometry& geometry) {
    PowerMap pm;
    pm.columns_x = geometry.columns_x;
    pm.columns_y = geometry.columns_y;
    pm.P.assign(geometry.columns(), std::vector<double>(platform.tier_count(), 0.0));
    const auto levels = tier_levels(placement);
    for (std::size_t c = 0; c < placement.core_slot.size(); ++c) {
        const int s = placement.core_slot[c];
        const int lvl = levels[slot_ref(platform, s).tier];
        for (const auto& [col, f] : geometry.slot_columns[s]) pm.P[col][lvl] += f * core_power_w[c];
    }
    return pm;
}

namespace {

void check_resistances(const Matrix& P, const std::vector<double>& r_layer, double r_base) {
    for (const auto& col : P) {
        if (col.size() > r_layer.size()) {
            throw Error("thermal: " + std::to_string(col.size()) + " layers but only " +
                        std::to_string(r_layer.size()) + " R_layer values");
        }
    }
    if (r_base < 0.0) throw Error("thermal: R_base must be >= 0");
}

}  // namespace

Matrix vertical_temps(const Matrix& P, const std::vector<double>& r_layer, double r_base) {
    check_resistances(P, r_layer, r_base);
    Matrix T(P.size());
    for (std::size_t n = 0; n < P.size(); ++n) {
        const auto& col = P[n];
        T[n].assign(col.size(), 0.0);
        double r_cum = 0.0;
        double weighted = 0.0;
        double power = 0.0;
        for (std::size_t k = 0; k < col.size(); ++k) {
            r_cum += r_layer[k];
            weighted += col[k] * r_cum;
            power += col[k];
            T[n][k] = weighted + r_base * power;
        }
    }
    return T;
}

Matrix rc_ladder_oracle(const Matrix& P, const std::vector<double>& r_layer, double r_base) {
    check_resistances(P, r_layer, r_base);
    Matrix T(P.size());
    for (std::size_t n = 0; n < P.size(); ++n) {
        const auto& col = P[n];
        const std::size_t K = col.size();
        T[n].assign(K, 0.0);
        // heat crossing interface j is everything generated at or above it
        std::vector<double> above(K + 1, 0.0);
        for (std::size_t i = K; i-- > 0;) above[i] = above[i + 1] + col[i];
        double t = r_base * above[0];
        for (std::size_t k = 0; k < K; ++k) {
            t += r_layer[k] * above[k];
            T[n][k] = t;
        }
    }
    return T;
}

std::vector<double> lateral_spread(const Matrix& T) {
    std::vector<double> out;
    if (T.empty()) return out;
    const std::size_t K = T.front().size();
    out.assign(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        double lo = T[0][k];
        double hi = T[0][k];
        for (const auto& col : T) {
            lo = std::min(lo, col[k]);
            hi = std::max(hi, col[k]);
        }
        out[k] = hi - lo;
    }
    return out;
}

double thermal_objective(const Matrix& T, const std::vector<double>& delta, ThermalForm form) {
    double peak = 0.0;
    for (const auto& col : T) {
        for (double t : col) peak = std::max(peak, t);
    }
    if (form == ThermalForm::Peak) return peak;
    double spread = 0.0;
    for (double d : delta) spread = std::max(spread, d);
    return peak * spread;
}

ThermalResult evaluate_thermal(const Platform& platform, const Placement& placement, const PowerMap& pmap,
                               const ThermalGeometry& geometry, ThermalForm form) {
    ThermalResult r;
    r.T = vertical_temps(pmap.P, platform.thermal.r_layer, platform.thermal.r_base);
    r.delta = lateral_spread(r.T);
    r.objective = thermal_objective(r.T, r.delta, form);
    for (const auto& col : r.T) {
        for (double t : col) r.max_rise = std::max(r.max_rise, t);
    }
    for (double d : r.delta) r.max_delta = std::max(r.max_delta, d);
    r.degenerate = r.max_delta < 0.01;
    const double ambient = platform.thermal.ambient_c;
    r.peak_celsius = ambient + r.max_rise;

    const auto kinds = platform.core_kinds();
    const auto levels = tier_levels(placement);
    r.core_celsius.assign(kinds.size(), ambient);
    r.reram_tier_celsius = ambient;
    for (std::size_t c = 0; c < kinds.size(); ++c) {
        const int s = placement.core_slot[c];
        const int lvl = levels[slot_ref(platform, s).tier];
        double t = 0.0;
        for (const auto& [col, f] : geometry.slot_columns[s]) t = std::max(t, r.T[col][lvl]);
        r.core_celsius[c] = ambient + t;
        if (kinds[c] == CoreKind::RERAM) r.reram_tier_celsius = std::max(r.reram_tier_celsius, ambient + t);
    }
    return r;
}

}  // namespace hetrax
