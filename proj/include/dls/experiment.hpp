#pragma once

// Scenario routines behind the command-line interface and the files they
// write: one CSV per result table, summary.json and config.txt (the echoed
// configuration).

#include "dls/config.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace dls {

const char* version();

struct ResultTable {
    std::string name;                  // file stem
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    ResultTable() = default;
    ResultTable(std::string n, std::vector<std::string> cols) : name(std::move(n)), columns(std::move(cols)) {}

    void add_row(std::vector<double> row);
    std::vector<double> column(const std::string& col) const;
    /// Header row plus one line per row, shortest round-trip numbers.
    std::string to_csv() const;
};

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ScenarioResult {
    std::vector<ResultTable> tables;
    std::vector<std::pair<std::string, std::string>> files;   // extra (file name, content)
    std::vector<Check> checks;
    std::map<std::string, double> metrics;

    bool checks_pass() const;
    const ResultTable& table(const std::string& name) const;
};

ScenarioResult hydro_experiment(const RunConfig& c);
ScenarioResult fourier_scan(const RunConfig& c);
ScenarioResult equilibrium_experiment(const RunConfig& c);
ScenarioResult identities_experiment(const RunConfig& c);
ScenarioResult simulate_experiment(const RunConfig& c);
ScenarioResult stationary_experiment(const RunConfig& c);

ScenarioResult run_scenario(const RunConfig& c);

/// Writes all artifacts into `dir` (created if missing); throws
/// std::runtime_error naming the path on I/O failure.
void write_artifacts(const ScenarioResult& r, const RunConfig& c, const std::filesystem::path& dir,
                     double wall_seconds);

/// 0 when every check passes, 2 otherwise.
int exit_code(const ScenarioResult& r);

}  // namespace dls
