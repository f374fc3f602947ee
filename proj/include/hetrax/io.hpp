#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hetrax/evaluate.hpp"
#include "hetrax/moo.hpp"
#include "hetrax/platform.hpp"
#include "hetrax/workload.hpp"

namespace hetrax {

using json = nlohmann::ordered_json;

/// First line of every CSV file written by the tool.
std::string csv_version_line();

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Parses JSON text; syntax errors name the source and the line/column.
json parse_json(const std::string& text, const std::string& source);
json load_json(const std::filesystem::path& path);

// Loaders reject unknown fields and wrong types.
json platform_to_json(const Platform& platform);
Platform platform_from_json(const json& j);

json model_to_json(const ModelConfig& model);
ModelConfig model_from_json(const json& j);

/// Also stores the platform name and digest; the loader checks the digest when present.
json placement_to_json(const Platform& platform, const Placement& placement);
Placement placement_from_json(const Platform& platform, const json& j);

json graph_to_json(const KernelGraph& graph);
json rewrite_to_json(const RewriteReport& r);
json evaluation_to_json(const Evaluation& e);

/// Pareto table: one row per entry, objective columns always present.
std::string pareto_csv_header();
std::string pareto_csv_row(std::size_t index, const ArchiveEntry& entry);
std::string pareto_csv(const ParetoArchive& archive);

struct ParetoRow {
    std::size_t index = 0;
    std::string digest;
    std::string origin;
    std::vector<std::string> cells;  ///< every column after origin, verbatim
};

/// Reads a file produced by pareto_csv; checks the version line and header.
std::vector<ParetoRow> parse_pareto_csv(const std::string& text);

}  // namespace hetrax
