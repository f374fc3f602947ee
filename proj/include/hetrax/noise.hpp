#pragma once

#include <string>
#include <vector>

#include "hetrax/platform.hpp"

namespace hetrax {

inline constexpr double kBoltzmann = 1.380649e-23;  // J/K
inline constexpr double kZeroCelsius = 273.15;

struct NoiseModel {
    double conductance_s = 0.0;
    double temperature_k = 0.0;
    double frequency_hz = 0.0;
    double voltage_v = 0.0;
};

/// Standard deviation of the thermal conductance perturbation, in siemens:
/// sqrt(4 G kB T F) / V.
double noise_sigma(const NoiseModel& model);

/// Distance between adjacent programmed levels: range / (2^bits - 1).
double level_spacing(double g_min_s, double g_max_s, int bits_per_cell);

/// P(|N(0, sigma)| > spacing / 2) = erfc(spacing / (2 sigma sqrt 2)).
double level_flip_probability(double sigma, double spacing);
/// log10 of the same probability; stays finite where the probability underflows.
double log10_flip_probability(double sigma, double spacing);

enum class Verdict { NoLoss, AtRisk };
std::string to_string(Verdict v);

struct AccuracyProxy {
    double sigma = 0.0;
    double level_spacing = 0.0;
    double flip_probability = 0.0;
    double log10_flip_probability = 0.0;
    Verdict verdict = Verdict::NoLoss;
    std::string mapping;  ///< qualitative reading against the PT / PTN results
};

AccuracyProxy accuracy_proxy(double flip_probability, double threshold = 1e-6);

struct CoreNoise {
    int core = 0;
    double temp_c = 0.0;
    double temp_k = 0.0;
    double sigma = 0.0;
    double flip_probability = 0.0;
    double log10_flip_probability = 0.0;
};

struct NoiseReport {
    std::vector<CoreNoise> cores;
    double objective = 0.0;  ///< sigma at the hottest ReRAM core
    int hottest_core = -1;
    AccuracyProxy proxy;     ///< for the hottest core
    std::string warning;
};

/// core_celsius: absolute core temperatures (ambient + rise) indexed by core id.
NoiseReport noise_objective(const Platform& platform, const std::vector<double>& core_celsius);

}  // namespace hetrax
