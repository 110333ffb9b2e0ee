#include "dls/experiment.hpp"

#include "dls/heat.hpp"
#include "dls/identities.hpp"
#include "dls/moments.hpp"
#include "dls/sde.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#ifndef DLS_VERSION
#define DLS_VERSION "0.0.0"
#endif

namespace dls {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

double dbl(int v) { return static_cast<double>(v); }

Profile rho0_profile(const RunConfig& c, int n) {
    return Profile::sample([&c](double u) { return c.rho0_at(u); }, static_cast<std::size_t>(n));
}

// Site x sits at u = x/N, i.e. on grid point x mod N.
Profile density_profile(const MomentMatrix& m) {
    const int n = m.size();
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int x = 1; x <= n; ++x) v[static_cast<std::size_t>(x % n)] = m(x, x).real();
    return Profile(std::move(v));
}

RunPlan plan_for(const RunConfig& c, int n) {
    const double n2 = dbl(n) * dbl(n);
    return RunPlan{c.burn_in_n2 * n2, c.measure_n2 * n2, c.mass_sample_every};
}

double harmonic_residual(const StationaryProfiles& p) {
    const int n = static_cast<int>(p.rho.size());
    double r = 0.0;
    for (int x = 3; x <= n - 2; ++x) {
        const auto i = static_cast<std::size_t>(x - 1);
        r = std::max(r, std::abs(p.phi[i + 1] + p.phi[i - 1] - 2.0 * p.phi[i]));
    }
    return r;
}

double zscore(double mc, double err, double exact) {
    return err > 0.0 ? (mc - exact) / err : kNaN;
}

// |z|, with an undefined z (no error bar) counted as a failure
double abs_z(double z) { return std::isnan(z) ? std::numeric_limits<double>::infinity() : std::abs(z); }

}  // namespace

const char* version() { return DLS_VERSION; }

void ResultTable::add_row(std::vector<double> row) {
    if (row.size() != columns.size())
        throw std::logic_error("table " + name + ": row has " + std::to_string(row.size()) +
                               " values for " + std::to_string(columns.size()) + " columns");
    rows.push_back(std::move(row));
}

std::vector<double> ResultTable::column(const std::string& col) const {
    const auto it = std::find(columns.begin(), columns.end(), col);
    if (it == columns.end()) throw std::out_of_range("table " + name + " has no column " + col);
    const auto k = static_cast<std::size_t>(it - columns.begin());
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(r[k]);
    return out;
}

std::string ResultTable::to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
    out += "\r\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + format_double(r[i]);
        out += "\r\n";
    }
    return out;
}

bool ScenarioResult::checks_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& k) { return k.pass; });
}

const ResultTable& ScenarioResult::table(const std::string& name) const {
    for (const auto& t : tables)
        if (t.name == name) return t;
    throw std::out_of_range("no result table " + name);
}

ScenarioResult hydro_experiment(const RunConfig& c) {
    ScenarioResult res;
    ResultTable t("hydro", {"N", "t", "l2_error", "sup_error", "l2_error_diffusivity_2_over_gamma"});
    for (const int n : c.n_list) {
        const ChainConfig chain = periodic_chain(n, c.gamma);
        const Profile rho0 = rho0_profile(c, n);
        MomentMatrix m = MomentMatrix::from_profile(rho0, n);
        std::vector<double> times = c.times;
        std::sort(times.begin(), times.end());
        double now = 0.0;
        for (const double t_macro : times) {
            const double micro = dbl(n) * dbl(n) * t_macro;
            m = evolve_moments(m, micro - now, chain, c.dt_ode);
            now = micro;
            const Profile got = density_profile(m);
            const Profile heat = heat_solve(rho0, t_macro, HeatParams{c.gamma});
            const Profile heat2 = heat_solve(rho0, t_macro, HeatParams{0.5 * c.gamma});
            t.add_row({dbl(n), t_macro, profile_distance(got, heat, Norm::L2),
                       profile_distance(got, heat, Norm::sup), profile_distance(got, heat2, Norm::L2)});
        }
    }
    res.tables.push_back(std::move(t));
    return res;
}

ScenarioResult fourier_scan(const RunConfig& c) {
    ScenarioResult res;
    // the oracle columns are always filled: they are the reference for the MC z-scores
    const bool mc = c.method != ScanMethod::oracle;
    ResultTable t("fourier",
                  {"N", "j", "N_j", "rho_1", "rho_2", "rho_Nm1", "rho_N", "mass_per_site", "corr_13",
                   "current_spread", "sum_rule_residual", "printed_identity_residual",
                   "derived_identity_residual", "harmonic_residual", "solve_residual", "mc_j_mid",
                   "mc_j_mid_err", "mc_rho_1", "mc_rho_1_err", "mc_max_abs_z"});
    ResultTable sites("fourier_mc", {"N", "kind", "index", "mc", "mc_err", "oracle", "z"});
    const double ml = c.mu_l, mr = c.mu_r;
    double worst_z = 0.0;
    for (const int n : c.n_list) {
        const ChainConfig chain = chain_for(c, n);
        const auto sol = stationary_solve(chain);
        const MomentMatrix& m = sol.moments;
        const double solve_res = sol.residual;
        const StationaryProfiles p = stationary_observables(m, chain);
        const auto un = static_cast<std::size_t>(n);
        const double j = p.mean_current();
        const double g = c.gamma, d = c.delta;
        std::vector<double> row = {
            dbl(n), j, dbl(n) * j, p.rho[0], p.rho[1], p.rho[un - 2], p.rho[un - 1], p.mass / dbl(n),
            std::abs(m(1, 3)), p.current_spread(), std::abs(p.rho[0] + p.rho[un - 1] - 2.0 * (ml + mr)),
            std::abs(j - 2.0 * ((ml + mr) - p.rho[0]) / (g * (n - 3) + 4.0 * g + d)),
            std::abs(j - 4.0 * (p.rho[0] - (ml + mr)) / (g * (n - 1) + d)), harmonic_residual(p), solve_res,
            kNaN, kNaN, kNaN, kNaN, kNaN};
        if (mc) {
            const auto scheme = StepScheme{c.dt};
            const auto st = ensemble_average(chain, scheme, init::Equilibrium{1.0 / (ml + mr)}, plan_for(c, n),
                                             consecutive_seeds(c.seed, static_cast<std::size_t>(c.trajectories)),
                                             c.threads);
            double zmax = 0.0;
            for (int x = 1; x <= n; ++x) {
                const double z = zscore(st.mean_rho(x), st.error_rho(x), p.rho[static_cast<std::size_t>(x - 1)]);
                sites.add_row({dbl(n), 0.0, dbl(x), st.mean_rho(x), st.error_rho(x),
                               p.rho[static_cast<std::size_t>(x - 1)], z});
                zmax = std::max(zmax, abs_z(z));
            }
            for (int x = 1; x < n; ++x) {
                const double z = zscore(st.mean_current(x), st.error_current(x),
                                        p.current[static_cast<std::size_t>(x - 1)]);
                sites.add_row({dbl(n), 1.0, dbl(x), st.mean_current(x), st.error_current(x),
                               p.current[static_cast<std::size_t>(x - 1)], z});
                zmax = std::max(zmax, abs_z(z));
            }
            const int mid = n / 2;
            row[15] = st.mean_current(mid);
            row[16] = st.error_current(mid);
            row[17] = st.mean_rho(1);
            row[18] = st.error_rho(1);
            row[19] = zmax;
            worst_z = std::max(worst_z, zmax);
        }
        t.add_row(std::move(row));
    }
    res.tables.push_back(std::move(t));
    if (mc) {
        res.tables.push_back(std::move(sites));
        res.checks.push_back({"mc_oracle_within_4_sigma", worst_z <= 4.0,
                              "max |z| = " + format_double(worst_z)});
        res.metrics["mc_max_abs_z"] = worst_z;
    }
    return res;
}

ScenarioResult equilibrium_experiment(const RunConfig& c) {
    ScenarioResult res;
    const int n = c.n_list.front();
    const ChainConfig chain = chain_for(c, n);
    const auto sol = stationary_solve(chain);
    const double dev =
        (sol.moments.c - 2.0 * c.mu * Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
    res.metrics["oracle_max_deviation"] = dev;
    res.checks.push_back({"oracle_is_2mu_identity", dev <= 1e-10, "max |C - 2 mu I| = " + format_double(dev)});

    ResultTable sites("equilibrium", {"x", "oracle_rho", "mc_rho", "mc_err", "z"});
    const bool mc = c.method != ScanMethod::oracle;
    TrajectoryStats st;
    if (mc) {
        st = ensemble_average(chain, StepScheme{c.dt}, init::Equilibrium{1.0 / (2.0 * c.mu)}, plan_for(c, n),
                              consecutive_seeds(c.seed, static_cast<std::size_t>(c.trajectories)), c.threads);
    }
    double zmax = 0.0;
    for (int x = 1; x <= n; ++x) {
        const double o = sol.moments(x, x).real();
        const double z = mc ? zscore(st.mean_rho(x), st.error_rho(x), 2.0 * c.mu) : kNaN;
        if (mc) zmax = std::max(zmax, abs_z(z));
        sites.add_row({dbl(x), o, mc ? st.mean_rho(x) : kNaN, mc ? st.error_rho(x) : kNaN, z});
    }
    if (mc) {
        res.metrics["mc_max_abs_z"] = zmax;
        res.checks.push_back({"mc_flat_within_3_sigma", zmax <= 3.0, "max |z| = " + format_double(zmax)});
    }

    ResultTable grid("equilibrium_grid", {"mu_l", "mu_r", "j"});
    double on_diag = 0.0, off_diag = kInf;
    for (const double a : c.mu_grid) {
        for (const double b : c.mu_grid) {
            const ChainConfig g = open_chain(n, c.gamma, c.delta, a, b);
            const double j = stationary_observables(stationary_moments(g), g).mean_current();
            grid.add_row({a, b, j});
            if (a == b)
                on_diag = std::max(on_diag, std::abs(j));
            else
                off_diag = std::min(off_diag, std::abs(j));
        }
    }
    res.checks.push_back({"zero_current_only_on_diagonal", on_diag <= 1e-12 && off_diag > 1e-6,
                          "max |j| on diagonal " + format_double(on_diag) + ", min |j| off diagonal " +
                              format_double(off_diag)});
    res.tables.push_back(std::move(sites));
    res.tables.push_back(std::move(grid));
    return res;
}

ScenarioResult identities_experiment(const RunConfig& c) {
    ScenarioResult res;
    IdentitySettings s;
    s.n_sites = c.n_list.front();
    s.gamma = c.gamma;
    s.delta = c.delta;
    s.mu_left = c.mu_l;
    s.mu_right = c.mu_r;
    s.trials = c.trials;
    s.seed = c.seed;
    const auto results = check_identities(s);
    res.files.emplace_back("identities.jsonl", identity_report_jsonl(results));
    int exact = 0, repaired = 0, failed = 0;
    double worst = 0.0;
    for (const auto& r : results) {
        exact += r.status == IdentityStatus::exact;
        repaired += r.status == IdentityStatus::repaired;
        failed += r.status == IdentityStatus::failed;
        worst = std::max(worst, r.max_residual());
    }
    res.metrics["exact"] = exact;
    res.metrics["repaired"] = repaired;
    res.metrics["failed"] = failed;
    res.metrics["max_residual"] = worst;
    res.checks.push_back({"all_identities_exact_or_repaired", failed == 0,
                          std::to_string(failed) + " failed"});
    return res;
}

ScenarioResult simulate_experiment(const RunConfig& c) {
    ScenarioResult res;
    const int n = c.n_list.front();
    const ChainConfig chain = chain_for(c, n);
    InitSpec init;
    if (c.init == InitKind::equilibrium)
        init = init::Equilibrium{c.lambda};
    else
        init = init::FromProfile{rho0_profile(c, n)};
    const auto st = ensemble_average(chain, StepScheme{c.dt}, init, plan_for(c, n),
                                     consecutive_seeds(c.seed, static_cast<std::size_t>(c.trajectories)),
                                     c.threads);
    ResultTable sites("sites", {"x", "rho", "rho_err", "current", "current_err", "exchange2", "exchange2_err"});
    if (!st.empty()) {
        for (int x = 1; x <= n; ++x) {
            const bool bond = x <= chain.n_bonds();
            const bool e2 = !chain.is_open() || (x > 1 && x < n);
            sites.add_row({dbl(x), st.mean_rho(x), st.error_rho(x), bond ? st.mean_current(x) : kNaN,
                           bond ? st.error_current(x) : kNaN, e2 ? st.mean_exchange2(x) : kNaN,
                           e2 ? st.error_exchange2(x) : kNaN});
        }
    }
    ResultTable mass("mass", {"t", "mean_mass"});
    for (std::size_t i = 0; i < st.mass_times.size(); ++i) mass.add_row({st.mass_times[i], st.mass_series[i]});
    res.tables.push_back(std::move(sites));
    res.tables.push_back(std::move(mass));
    if (!chain.is_open()) {
        res.metrics["max_relative_mass_drift"] = st.max_relative_mass_drift;
        res.checks.push_back({"mass_drift_below_1e-9", st.max_relative_mass_drift <= 1e-9,
                              format_double(st.max_relative_mass_drift)});
    }
    return res;
}

ScenarioResult stationary_experiment(const RunConfig& c) {
    ScenarioResult res;
    const int n = c.n_list.front();
    const ChainConfig chain = chain_for(c, n);
    const auto sol = stationary_solve(chain);
    const auto p = stationary_observables(sol.moments, chain);
    ResultTable prof("profiles", {"x", "rho", "exchange2", "phi"});
    for (int x = 1; x <= n; ++x) {
        const auto i = static_cast<std::size_t>(x - 1);
        prof.add_row({dbl(x), p.rho[i], p.exchange2[i], p.phi[i]});
    }
    ResultTable cur("currents", {"bond", "j"});
    for (std::size_t b = 0; b < p.current.size(); ++b) cur.add_row({dbl(static_cast<int>(b) + 1), p.current[b]});
    res.tables.push_back(std::move(prof));
    res.tables.push_back(std::move(cur));
    res.metrics["residual"] = sol.residual;
    res.metrics["mass"] = p.mass;
    res.metrics["mean_current"] = p.mean_current();
    return res;
}

ScenarioResult run_scenario(const RunConfig& c) {
    validate(c);
    switch (c.scenario) {
        case ScenarioKind::hydro: return hydro_experiment(c);
        case ScenarioKind::fourier: return fourier_scan(c);
        case ScenarioKind::equilibrium: return equilibrium_experiment(c);
        case ScenarioKind::identities: return identities_experiment(c);
        case ScenarioKind::simulate: return simulate_experiment(c);
        case ScenarioKind::stationary: return stationary_experiment(c);
    }
    throw std::logic_error("unknown scenario");
}

namespace {

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + p.string() + " for writing");
    out << content;
    out.close();
    if (!out) throw std::runtime_error("write to " + p.string() + " failed");
}

nlohmann::json number(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

}  // namespace

void write_artifacts(const ScenarioResult& r, const RunConfig& c, const std::filesystem::path& dir,
                     double wall_seconds) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
    const std::string echoed = echo_config(c);
    write_file(dir / "config.txt", echoed);
    for (const auto& t : r.tables) write_file(dir / (t.name + ".csv"), t.to_csv());
    for (const auto& [name, content] : r.files) write_file(dir / name, content);

    nlohmann::ordered_json s;
    s["scenario"] = to_string(c.scenario);
    std::ostringstream hash;
    hash << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(echoed);
    s["config_hash"] = hash.str();
    s["seed"] = c.seed;
    s["version"] = version();
    s["threads"] = c.threads;
    s["wall_time_s"] = wall_seconds;
    s["tables"] = nlohmann::json::array();
    for (const auto& t : r.tables) s["tables"].push_back(t.name + ".csv");
    auto& checks = s["checks"] = nlohmann::ordered_json::array();
    for (const auto& k : r.checks) checks.push_back({{"name", k.name}, {"pass", k.pass}, {"detail", k.detail}});
    auto& metrics = s["metrics"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.metrics) metrics[k] = number(v);
    s["status"] = r.checks_pass() ? "ok" : "acceptance_failure";
    write_file(dir / "summary.json", s.dump(2) + "\n");
}

int exit_code(const ScenarioResult& r) { return r.checks_pass() ? 0 : 2; }

}  // namespace dls
