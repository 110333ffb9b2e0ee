#pragma once

// Flat "key = value" run configuration: '#' starts a comment, lists are
// comma-separated, unknown keys are rejected. Every key is materialized by
// parse_config, so echo_config(parse_config(text)) lists the complete run.

#include "dls/chain.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dls {

enum class ScenarioKind { hydro, fourier, equilibrium, identities, simulate, stationary };
enum class ScanMethod { oracle, mc, both };
enum class InitKind { equilibrium, profile };

const char* to_string(ScenarioKind k);
const char* to_string(ScanMethod m);
const char* to_string(InitKind k);

struct RunConfig {
    ScenarioKind scenario = ScenarioKind::fourier;
    Geometry geometry = Geometry::open;          // simulate / stationary
    std::vector<int> n_list{16};
    double gamma = 1.0;
    double delta = 1.0;
    double mu_l = 1.0;
    double mu_r = 2.0;
    double mu = 1.0;                              // equilibrium
    std::vector<double> mu_grid{0.5, 1.0, 1.5, 2.0, 2.5};   // equilibrium converse check

    std::string rho0 = "sine";                    // sine | constant
    double rho0_mean = 1.0;
    double rho0_amplitude = 0.5;
    int rho0_mode = 1;
    std::vector<double> times{0.02, 0.05, 0.1};   // macroscopic times (hydro)
    double dt_ode = 0.05;

    ScanMethod method = ScanMethod::oracle;
    int trajectories = 16;
    double dt = 0.0;                              // 0 before materialization
    double burn_in_n2 = 20.0;                     // burn-in in units of N^2
    double measure_n2 = 100.0;                    // measurement window in units of N^2
    std::uint64_t mass_sample_every = 1000;
    InitKind init = InitKind::equilibrium;
    double lambda = 1.0;

    int trials = 100;
    std::uint64_t seed = 20240611;
    int threads = 1;

    /// rho0 as a function on the torus.
    double rho0_at(double u) const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Thrown with the 1-based line number (0 for whole-config errors) and key.
struct ConfigError : std::runtime_error {
    ConfigError(int line, std::string key, const std::string& what);
    int line;
    std::string key;
};

/// `fallback` supplies the scenario when the text has no scenario key.
RunConfig parse_config(const std::string& text, std::optional<ScenarioKind> fallback = std::nullopt);
void validate(const RunConfig& c);
std::string echo_config(const RunConfig& c);

/// Chain of the scenario for a given N (geometry fixed by the scenario).
ChainConfig chain_for(const RunConfig& c, int n);

/// Known keys, in echo order.
const std::vector<std::string>& config_keys();

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

std::uint64_t fnv1a64(const std::string& text);

}  // namespace dls
