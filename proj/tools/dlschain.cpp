// dlschain: command-line driver for the scenario routines.

#include "dls/config.hpp"
#include "dls/experiment.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

struct Options {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    int threads = 0;
    bool dry_run = false;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read config " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int run(dls::ScenarioKind kind, const Options& o, const CLI::App& sub) {
    const std::string text = o.config_path.empty() ? std::string() : read_file(o.config_path);
    dls::RunConfig cfg = dls::parse_config(text, kind);
    if (cfg.scenario != kind)
        throw std::runtime_error(std::string("config scenario '") + to_string(cfg.scenario) +
                                 "' does not match subcommand '" + sub.get_name() + "'");
    if (sub.count("--seed")) cfg.seed = o.seed;
    if (sub.count("--threads")) cfg.threads = o.threads;
    dls::validate(cfg);

    if (o.dry_run) {
        std::cout << dls::echo_config(cfg);
        return 0;
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = dls::run_scenario(cfg);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string dir = o.out_dir.empty() ? std::string("out/") + to_string(kind) : o.out_dir;
    dls::write_artifacts(result, cfg, dir, wall);
    for (const auto& c : result.checks)
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : "  " + c.detail) << "\n";
    std::cout << "wrote " << dir << "\n";
    return dls::exit_code(result);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Phase-noise Schrodinger chain: simulation, moment oracle and checks"};
    app.set_version_flag("--version", dls::version());
    app.require_subcommand(1);

    Options opts;
    const std::pair<const char*, dls::ScenarioKind> commands[] = {
        {"simulate", dls::ScenarioKind::simulate},
        {"stationary", dls::ScenarioKind::stationary},
        {"hydro", dls::ScenarioKind::hydro},
        {"fourier-scan", dls::ScenarioKind::fourier},
        {"equilibrium", dls::ScenarioKind::equilibrium},
        {"check-identities", dls::ScenarioKind::identities},
    };
    std::vector<std::pair<CLI::App*, dls::ScenarioKind>> subs;
    for (const auto& [name, kind] : commands) {
        CLI::App* sub = app.add_subcommand(name, std::string("run the ") + to_string(kind) + " scenario");
        sub->add_option("--config", opts.config_path, "key = value config file")->check(CLI::ExistingFile);
        sub->add_option("--out", opts.out_dir, "output directory (default out/<scenario>)");
        sub->add_option("--seed", opts.seed, "override the config seed");
        sub->add_option("--threads", opts.threads, "worker threads for ensembles")->check(CLI::PositiveNumber);
        sub->add_flag("--dry-run", opts.dry_run, "validate and echo the config, write nothing");
        subs.emplace_back(sub, kind);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    try {
        for (const auto& [sub, kind] : subs)
            if (sub->parsed()) return run(kind, opts, *sub);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
