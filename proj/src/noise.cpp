#include "hetrax/noise.hpp"

#include <cmath>

#include "hetrax/common.hpp"

namespace hetrax {

double noise_sigma(const NoiseModel& m) {
    if (!(m.conductance_s > 0.0) || !(m.temperature_k > 0.0) || !(m.frequency_hz > 0.0) || !(m.voltage_v > 0.0)) {
        throw Error("noise_sigma: conductance, temperature, frequency and voltage must be > 0");
    }
    return std::sqrt(4.0 * m.conductance_s * kBoltzmann * m.temperature_k * m.frequency_hz) / m.voltage_v;
}

double level_spacing(double g_min_s, double g_max_s, int bits_per_cell) {
    if (!(g_max_s > g_min_s) || g_min_s < 0.0) throw Error("level_spacing: need 0 <= g_min < g_max");
    if (bits_per_cell < 1) throw Error("level_spacing: bits_per_cell must be >= 1");
    return (g_max_s - g_min_s) / (std::ldexp(1.0, bits_per_cell) - 1.0);
}

double level_flip_probability(double sigma, double spacing) {
    if (!(spacing > 0.0)) throw Error("level_flip_probability: level spacing must be > 0");
    if (sigma <= 0.0) return 0.0;
    return std::erfc(spacing / (2.0 * sigma * std::sqrt(2.0)));
}

double log10_flip_probability(double sigma, double spacing) {
    if (!(spacing > 0.0)) throw Error("log10_flip_probability: level spacing must be > 0");
    if (sigma <= 0.0) return -INFINITY;
    const double x = spacing / (2.0 * sigma * std::sqrt(2.0));
    if (x < 20.0) return std::log10(std::erfc(x));
    // asymptotic series: erfc(x) = exp(-x^2) / (x sqrt(pi)) * (1 - 1/(2x^2) + 3/(4x^4) - 15/(8x^6))
    const double x2 = x * x;
    const double series = 1.0 - 1.0 / (2.0 * x2) + 3.0 / (4.0 * x2 * x2) - 15.0 / (8.0 * x2 * x2 * x2);
    const double ln = -x2 - std::log(x * std::sqrt(M_PI)) + std::log(series);
    return ln / std::log(10.0);
}

std::string to_string(Verdict v) {
    return v == Verdict::NoLoss ? "no-loss" : "at-risk";
}

AccuracyProxy accuracy_proxy(double flip_probability, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw Error("accuracy_proxy: threshold must lie in (0, 1)");
    AccuracyProxy a;
    a.flip_probability = flip_probability;
    a.verdict = flip_probability < threshold ? Verdict::NoLoss : Verdict::AtRisk;
    a.mapping = a.verdict == Verdict::NoLoss
                    ? "no-loss: noise stays inside the quantization boundary (PTN-like, reported 0% accuracy loss)"
                    : "at-risk: level flips expected (PT-like, reported up to 3.3% accuracy loss)";
    return a;
}

NoiseReport noise_objective(const Platform& platform, const std::vector<double>& core_celsius) {
    NoiseReport rep;
    const auto kinds = platform.core_kinds();
    if (!platform.has_spec(CoreKind::RERAM)) {
        rep.warning = "no ReRAM cores: noise objective is 0";
        return rep;
    }
    const auto& spec = platform.spec(CoreKind::RERAM);
    const auto& np = platform.noise;
    const double spacing = level_spacing(np.g_min_s, np.g_max_s, spec.reram().bits_per_cell);
    double hottest = -INFINITY;
    for (std::size_t c = 0; c < kinds.size(); ++c) {
        if (kinds[c] != CoreKind::RERAM) continue;
        CoreNoise cn;
        cn.core = static_cast<int>(c);
        cn.temp_c = core_celsius.at(c);
        cn.temp_k = cn.temp_c + kZeroCelsius;
        cn.sigma = noise_sigma({np.g_max_s, cn.temp_k, spec.frequency_hz, np.read_voltage_v});
        cn.flip_probability = level_flip_probability(cn.sigma, spacing);
        cn.log10_flip_probability = log10_flip_probability(cn.sigma, spacing);
        if (cn.temp_c > hottest) {
            hottest = cn.temp_c;
            rep.hottest_core = cn.core;
            rep.objective = cn.sigma;
            rep.proxy = accuracy_proxy(cn.flip_probability, np.flip_threshold);
            rep.proxy.sigma = cn.sigma;
            rep.proxy.level_spacing = spacing;
            rep.proxy.log10_flip_probability = cn.log10_flip_probability;
        }
        rep.cores.push_back(cn);
    }
    if (rep.cores.empty()) rep.warning = "no ReRAM cores: noise objective is 0";
    return rep;
}

}  // namespace hetrax
