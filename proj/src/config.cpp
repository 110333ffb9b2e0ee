#include "dls/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace dls {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(trim(item));
    return out;
}

std::size_t levenshtein(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] != b[j - 1])});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

template <typename T>
T parse_number(const std::string& s, int line, const std::string& key) {
    T v{};
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || s.empty())
        throw ConfigError(line, key, "cannot parse '" + s + "'");
    return v;
}

template <typename T>
std::vector<T> parse_list(const std::string& s, int line, const std::string& key) {
    std::vector<T> out;
    for (const auto& item : split_list(s)) out.push_back(parse_number<T>(item, line, key));
    if (out.empty()) throw ConfigError(line, key, "empty list");
    return out;
}

template <typename E>
E parse_enum(const std::string& s, int line, const std::string& key,
             std::initializer_list<std::pair<const char*, E>> options) {
    std::string names;
    for (const auto& [name, value] : options) {
        if (s == name) return value;
        names += names.empty() ? name : std::string("|") + name;
    }
    throw ConfigError(line, key, "expected one of " + names + ", got '" + s + "'");
}

template <typename T>
std::string join(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        if constexpr (std::is_floating_point_v<T>)
            out += format_double(v[i]);
        else
            out += std::to_string(v[i]);
    }
    return out;
}

struct KeyDef {
    std::string name;
    std::function<void(RunConfig&, const std::string&, int)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define DLS_NUM(field, type)                                                                  \
    KeyDef {                                                                                  \
        #field, [](RunConfig& c, const std::string& v, int l) { c.field = parse_number<type>(v, l, #field); }, \
            [](const RunConfig& c) {                                                          \
                if constexpr (std::is_floating_point_v<type>) return format_double(c.field); \
                else return std::to_string(c.field);                                          \
            }                                                                                 \
    }

const std::vector<KeyDef>& key_defs() {
    static const std::vector<KeyDef> defs = {
        {"scenario",
         [](RunConfig& c, const std::string& v, int l) {
             c.scenario = parse_enum<ScenarioKind>(v, l, "scenario",
                                                   {{"hydro", ScenarioKind::hydro},
                                                    {"fourier", ScenarioKind::fourier},
                                                    {"equilibrium", ScenarioKind::equilibrium},
                                                    {"identities", ScenarioKind::identities},
                                                    {"simulate", ScenarioKind::simulate},
                                                    {"stationary", ScenarioKind::stationary}});
         },
         [](const RunConfig& c) { return std::string(to_string(c.scenario)); }},
        {"geometry",
         [](RunConfig& c, const std::string& v, int l) {
             c.geometry = parse_enum<Geometry>(v, l, "geometry",
                                               {{"periodic", Geometry::periodic}, {"open", Geometry::open}});
         },
         [](const RunConfig& c) { return std::string(to_string(c.geometry)); }},
        {"N", [](RunConfig& c, const std::string& v, int l) { c.n_list = parse_list<int>(v, l, "N"); },
         [](const RunConfig& c) { return join(c.n_list); }},
        DLS_NUM(gamma, double),
        DLS_NUM(delta, double),
        DLS_NUM(mu_l, double),
        DLS_NUM(mu_r, double),
        DLS_NUM(mu, double),
        {"mu_grid",
         [](RunConfig& c, const std::string& v, int l) { c.mu_grid = parse_list<double>(v, l, "mu_grid"); },
         [](const RunConfig& c) { return join(c.mu_grid); }},
        {"rho0",
         [](RunConfig& c, const std::string& v, int l) {
             if (v != "sine" && v != "constant")
                 throw ConfigError(l, "rho0", "expected one of sine|constant, got '" + v + "'");
             c.rho0 = v;
         },
         [](const RunConfig& c) { return c.rho0; }},
        DLS_NUM(rho0_mean, double),
        DLS_NUM(rho0_amplitude, double),
        DLS_NUM(rho0_mode, int),
        {"times", [](RunConfig& c, const std::string& v, int l) { c.times = parse_list<double>(v, l, "times"); },
         [](const RunConfig& c) { return join(c.times); }},
        DLS_NUM(dt_ode, double),
        {"method",
         [](RunConfig& c, const std::string& v, int l) {
             c.method = parse_enum<ScanMethod>(v, l, "method",
                                               {{"oracle", ScanMethod::oracle},
                                                {"mc", ScanMethod::mc},
                                                {"both", ScanMethod::both}});
         },
         [](const RunConfig& c) { return std::string(to_string(c.method)); }},
        DLS_NUM(trajectories, int),
        DLS_NUM(dt, double),
        DLS_NUM(burn_in_n2, double),
        DLS_NUM(measure_n2, double),
        DLS_NUM(mass_sample_every, std::uint64_t),
        {"init",
         [](RunConfig& c, const std::string& v, int l) {
             c.init = parse_enum<InitKind>(v, l, "init",
                                           {{"equilibrium", InitKind::equilibrium}, {"profile", InitKind::profile}});
         },
         [](const RunConfig& c) { return std::string(to_string(c.init)); }},
        DLS_NUM(lambda, double),
        DLS_NUM(trials, int),
        DLS_NUM(seed, std::uint64_t),
        DLS_NUM(threads, int),
    };
    return defs;
}

#undef DLS_NUM

[[noreturn]] void fail(const std::string& key, const std::string& what) { throw ConfigError(0, key, what); }

}  // namespace

ConfigError::ConfigError(int line_, std::string key_, const std::string& what)
    : std::runtime_error((line_ > 0 ? "line " + std::to_string(line_) + ": " : std::string()) +
                         (key_.empty() ? std::string() : "'" + key_ + "': ") + what),
      line(line_),
      key(std::move(key_)) {}

const char* to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::hydro: return "hydro";
        case ScenarioKind::fourier: return "fourier";
        case ScenarioKind::equilibrium: return "equilibrium";
        case ScenarioKind::identities: return "identities";
        case ScenarioKind::simulate: return "simulate";
        case ScenarioKind::stationary: return "stationary";
    }
    return "?";
}

const char* to_string(ScanMethod m) {
    switch (m) {
        case ScanMethod::oracle: return "oracle";
        case ScanMethod::mc: return "mc";
        case ScanMethod::both: return "both";
    }
    return "?";
}

const char* to_string(InitKind k) { return k == InitKind::equilibrium ? "equilibrium" : "profile"; }

double RunConfig::rho0_at(double u) const {
    if (rho0 == "constant") return rho0_mean;
    return rho0_mean + rho0_amplitude * std::sin(2.0 * std::numbers::pi * rho0_mode * u);
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& d : key_defs()) k.push_back(d.name);
        return k;
    }();
    return keys;
}

ChainConfig chain_for(const RunConfig& c, int n) {
    Geometry g = c.geometry;
    if (c.scenario == ScenarioKind::hydro) g = Geometry::periodic;
    if (c.scenario == ScenarioKind::fourier || c.scenario == ScenarioKind::equilibrium ||
        c.scenario == ScenarioKind::identities)
        g = Geometry::open;
    const bool eq = c.scenario == ScenarioKind::equilibrium;
    if (g == Geometry::periodic) return periodic_chain(n, c.gamma);
    return open_chain(n, c.gamma, c.delta, eq ? c.mu : c.mu_l, eq ? c.mu : c.mu_r);
}

void validate(const RunConfig& c) {
    if (c.n_list.empty()) fail("N", "needs at least one value");
    for (std::size_t i = 1; i < c.n_list.size(); ++i)
        if (c.n_list[i] <= c.n_list[i - 1]) fail("N", "values must be strictly increasing");
    if (!(c.gamma > 0.0) || !std::isfinite(c.gamma)) fail("gamma", "must be > 0");
    const ChainConfig probe = chain_for(c, c.n_list.front());
    if (probe.is_open()) {
        if (!(c.delta > 0.0) || !std::isfinite(c.delta)) fail("delta", "must be > 0");
        if (c.scenario == ScenarioKind::equilibrium) {
            if (!(c.mu > 0.0)) fail("mu", "must be > 0");
        } else {
            if (!(c.mu_l > 0.0)) fail("mu_l", "must be > 0");
            if (!(c.mu_r > 0.0)) fail("mu_r", "must be > 0");
        }
        const int min_n = c.scenario == ScenarioKind::identities ? 6 : 4;
        if (c.n_list.front() < min_n) fail("N", "must be >= " + std::to_string(min_n) + " for this scenario");
    } else if (c.n_list.front() < 3) {
        fail("N", "must be >= 3 for a periodic chain");
    }
    for (double m : c.mu_grid)
        if (!(m > 0.0)) fail("mu_grid", "values must be > 0");
    for (double t : c.times)
        if (!(t >= 0.0) || !std::isfinite(t)) fail("times", "must be >= 0");
    if (c.rho0 == "sine" && std::abs(c.rho0_amplitude) > c.rho0_mean)
        fail("rho0_amplitude", "would make the density negative");
    if (!(c.rho0_mean >= 0.0)) fail("rho0_mean", "must be >= 0");
    if (!(c.dt_ode > 0.0)) fail("dt_ode", "must be > 0");
    if (c.trajectories < 1) fail("trajectories", "must be >= 1");
    if (!(c.dt > 0.0) || !std::isfinite(c.dt)) fail("dt", "must be > 0");
    if (!(c.burn_in_n2 >= 0.0)) fail("burn_in_n2", "must be >= 0");
    if (!(c.measure_n2 >= 0.0)) fail("measure_n2", "must be >= 0");
    if (c.mass_sample_every < 1) fail("mass_sample_every", "must be >= 1");
    if (!(c.lambda > 0.0)) fail("lambda", "must be > 0");
    if (c.trials < 1) fail("trials", "must be >= 1");
    if (c.threads < 1) fail("threads", "must be >= 1");
}

RunConfig parse_config(const std::string& text, std::optional<ScenarioKind> fallback) {
    RunConfig c;
    std::map<std::string, int> seen;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    bool has_scenario = false;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ConfigError(line, "", "expected 'key = value'");
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        const auto& defs = key_defs();
        const auto it = std::find_if(defs.begin(), defs.end(), [&](const KeyDef& d) { return d.name == key; });
        if (it == defs.end()) {
            std::string best;
            std::size_t best_d = std::string::npos;
            for (const auto& d : defs) {
                const auto dist = levenshtein(key, d.name);
                if (dist < best_d) {
                    best_d = dist;
                    best = d.name;
                }
            }
            throw ConfigError(line, key, "unknown key; did you mean '" + best + "'?");
        }
        if (seen.count(key))
            throw ConfigError(line, key, "duplicate key (first set on line " + std::to_string(seen[key]) + ")");
        seen[key] = line;
        if (value.empty()) throw ConfigError(line, key, "missing value");
        it->set(c, value, line);
        if (key == "scenario") has_scenario = true;
    }
    if (!has_scenario) {
        if (!fallback) throw ConfigError(0, "scenario", "is required");
        c.scenario = *fallback;
    }
    if (!seen.count("dt")) {
        const ChainConfig probe = chain_for(c, c.n_list.empty() ? 4 : c.n_list.front());
        double rate = std::max(1.0, c.gamma);
        if (probe.is_open()) rate = std::max(rate, c.delta);
        c.dt = 0.02 / rate;
    }
    validate(c);
    return c;
}

std::string echo_config(const RunConfig& c) {
    std::string out;
    for (const auto& d : key_defs()) out += d.name + " = " + d.get(c) + "\n";
    return out;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace dls
