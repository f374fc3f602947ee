#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hetrax/evaluate.hpp"
#include "hetrax/io.hpp"
#include "hetrax/moo.hpp"

namespace hetrax {

struct RunManifest {
    std::string command;
    std::string config_digest;  ///< fnv1a64 over the resolved config text
    std::uint64_t seed = 0;
    std::string tool_version;
    std::string started;
    std::string finished;
    std::string status = "running";  ///< running, ok, failed
    std::string error;
    std::vector<std::string> outputs;  ///< relative to the run directory
};

json manifest_to_json(const RunManifest& m);

/// Model selection shared by workload, optimize and evaluate.
struct ModelOptions {
    std::string name = "bert-large";
    std::string config_path;  ///< JSON model file; overrides name
    std::int64_t seq_len = 0;  ///< 0 keeps the config's (or 512 for named models)
    std::string attention;     ///< empty keeps the config's
    std::string topology;
    int precision_bits = 0;
};

ModelConfig resolve_model(const ModelOptions& opts);
/// Platform JSON file, or the default platform when `path` is empty.
Platform resolve_platform(const std::string& path);

struct WorkloadOptions {
    ModelOptions model;
    std::string platform_path;
    std::string out_dir;  ///< empty: print only
};

struct OptimizeOptions {
    ModelOptions model;
    std::string platform_path;
    SearchConfig search;
    ThermalForm form = ThermalForm::Product;
    std::string out_dir = "hetrax-run";
};

struct EvaluateOptions {
    ModelOptions model;
    std::string platform_path;
    std::string placement_path;
    ThermalForm form = ThermalForm::Product;
    std::string out_dir = "hetrax-eval";
};

struct BaselineOptions {
    double units = 8;
    double unit_power_w = 3.138;
    double die_area_mm2 = 53.15;
    double banks = 16;
    std::optional<double> temp_c;
    double gpu_density = 0.5;  ///< reference GPU power density, W/mm^2
    std::string out_dir;
};

// Each command returns the process exit code and reports on `out` / `err`.
int cmd_workload(const WorkloadOptions& opts, std::ostream& out, std::ostream& err);
int cmd_optimize(const OptimizeOptions& opts, std::ostream& out, std::ostream& err);
int cmd_evaluate(const EvaluateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_baseline(const BaselineOptions& opts, std::ostream& out, std::ostream& err);

/// Seed from the flag, else HETRAX_SEED, else 1.
std::uint64_t resolve_seed(std::optional<std::uint64_t> flag);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hetrax
