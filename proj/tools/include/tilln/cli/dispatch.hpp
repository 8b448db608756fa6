#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "json.hpp"
#include "tilln/cli/config.hpp"
#include "tilln/export.hpp"

namespace tilln::cli {

enum ExitCode : int {
    kPass = 0,
    kError = 1,
    kStatisticalFailure = 2,
    kCertificateFailure = 3,
    kConfigError = 4,
};

struct ReportBundle {
    nlohmann::json summary = nlohmann::json::object();
    /// File name -> table.
    std::map<std::string, CsvTable> tables;
    /// Normalized config; written as config.json when non-empty.
    std::string config;
    int exit_code = kPass;
};

inline constexpr const char* kVersion = "0.1.0";

/// Runs the task. Failures of the task's own checks and module errors end up
/// in the summary and exit_code rather than as exceptions. `workers` caps
/// parallel work units and never changes the results.
ReportBundle dispatch(const ExperimentConfig& cfg, unsigned workers = 1);

/// Writes summary.json, config.json, the tables and manifest.json (SHA-256 of
/// every other file) into `dir`, via a sibling temp directory and a rename.
/// An empty bundle produces the manifest only.
void emit(const ReportBundle& bundle, const std::filesystem::path& dir);

}  // namespace tilln::cli
