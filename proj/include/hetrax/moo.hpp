#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hetrax/evaluate.hpp"
#include "hetrax/platform.hpp"

namespace hetrax {

/// a <= b componentwise with at least one strict inequality (minimization).
bool dominates(const std::vector<double>& a, const std::vector<double>& b);

struct ArchiveEntry {
    std::string digest;
    std::vector<double> objectives;
    Placement placement;
    Evaluation eval;
    std::string origin;  ///< "e<epoch>.t<trajectory>.s<step>", "start", or "enum"
};

class ParetoArchive {
public:
    /// Inserts unless an entry dominates it or shares its digest; evicts entries it dominates.
    bool insert(ArchiveEntry entry);
    bool accepts(const std::vector<double>& objectives, const std::string& digest) const;

    const std::vector<ArchiveEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    /// Entries ordered by objective vector, then digest.
    std::vector<ArchiveEntry> sorted() const;
    std::vector<std::vector<double>> points() const;

    std::uint64_t seed = 0;
    std::string config;  ///< snapshot of the producing configuration

private:
    std::vector<ArchiveEntry> entries_;
};

/// Exact dominated hypervolume of minimization points w.r.t. `ref`.
/// Points not strictly better than ref in every coordinate contribute nothing.
double hypervolume(std::vector<std::vector<double>> points, const std::vector<double>& ref);

struct Bounds {
    std::vector<double> lo;
    std::vector<double> hi;
};

Bounds bounds_of(const std::vector<std::vector<double>>& points);
/// (x - lo) / (hi - lo) per coordinate; a zero-width coordinate maps to 0.
std::vector<std::vector<double>> normalize(const std::vector<std::vector<double>>& points, const Bounds& b);
/// Hypervolume after min-max normalization over the archive itself, ref = 1.1 per objective.
double archive_hypervolume(const ParetoArchive& archive);

enum class Guidance { Off, Learned };
std::string to_string(Guidance g);
Guidance guidance_from_string(const std::string& s);

struct SearchConfig {
    int epochs = 50;
    int perturbations = 10;
    ObjectiveSet objectives = ObjectiveSet::PTN;
    std::uint64_t seed = 1;
    Guidance guidance = Guidance::Off;
    int max_steps = 100;       ///< accepted moves per trajectory
    int jobs = 1;              ///< worker threads; never changes results
    bool shared_start = true;  ///< one start per epoch (false: one per trajectory)
    double rho = 1e-3;         ///< augmented Tchebycheff term

    void validate() const;
    std::string describe() const;
};

struct SearchResult {
    ParetoArchive archive;
    std::vector<double> hv_trace;  ///< per epoch, in the final archive's normalized frame
    std::size_t evaluations = 0;   ///< distinct placements evaluated
    int guided_starts = 0;
    int fallback_starts = 0;
    std::vector<std::string> log;
};

SearchResult moo_search(const Evaluator& evaluator, const SearchConfig& config);

/// Start-placement features used by the guidance model.
std::vector<double> start_features(const Evaluation& eval);

struct GuidanceSample {
    std::vector<double> features;
    double outcome = 0.0;
};

/// Least-squares fit of outcome on features (with intercept). Dependent feature
/// columns get zero weight. Returns false for fewer than 5 samples, constant
/// outcomes, or when no feature varies.
bool fit_guidance(const std::vector<GuidanceSample>& history, std::vector<double>& coefficients);
double predict_guidance(const std::vector<double>& coefficients, const std::vector<double>& features);

struct GuidanceChoice {
    Placement start;
    bool fallback = true;
    std::string reason;
};

/// Next start: hill-climb the fitted model from a few random placements, or a
/// random placement when fewer than 5 samples exist or the fit is degenerate.
GuidanceChoice stage_guidance(const Evaluator& evaluator, const std::vector<GuidanceSample>& history,
                              std::uint64_t seed);

/// Valid placements in the design space, counted without evaluation, as a double
/// upper estimate before validity filtering.
double design_space_estimate(const Platform& platform);

/// Exact Pareto set by enumeration. Refuses spaces above `limit` candidates.
ParetoArchive brute_force_pareto(const Evaluator& evaluator, ObjectiveSet objectives, double limit = 1e5);

}  // namespace hetrax
