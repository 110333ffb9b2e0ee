#include "dls/chain.hpp"

#include "dls/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dls {

const char* to_string(Geometry g) {
    return g == Geometry::periodic ? "periodic" : "open";
}

void ChainConfig::validate() const {
    if (n_sites < 1) throw std::invalid_argument("n_sites must be positive");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be > 0");
    if (is_open()) {
        if (n_sites < 4) throw std::invalid_argument("n_sites must be >= 4 for an open chain");
        if (!(delta > 0.0) || !std::isfinite(delta))
            throw std::invalid_argument("delta must be > 0 for an open chain");
        if (!(mu_left > 0.0) || !std::isfinite(mu_left))
            throw std::invalid_argument("mu_left must be > 0");
        if (!(mu_right > 0.0) || !std::isfinite(mu_right))
            throw std::invalid_argument("mu_right must be > 0");
    } else if (n_sites < 3) {
        throw std::invalid_argument("n_sites must be >= 3 for a periodic chain");
    }
}

int ChainConfig::wrap(int x) const {
    if (is_open()) return x;
    const int r = (x - 1) % n_sites;
    return (r < 0 ? r + n_sites : r) + 1;
}

bool ChainConfig::has_site(int x) const {
    if (!is_open()) return true;
    return x >= 1 && x <= n_sites;
}

ChainConfig periodic_chain(int n, double gamma) {
    ChainConfig c;
    c.geometry = Geometry::periodic;
    c.n_sites = n;
    c.gamma = gamma;
    return c;
}

ChainConfig open_chain(int n, double gamma, double delta, double mu_left, double mu_right) {
    ChainConfig c;
    c.geometry = Geometry::open;
    c.n_sites = n;
    c.gamma = gamma;
    c.delta = delta;
    c.mu_left = mu_left;
    c.mu_right = mu_right;
    return c;
}

double Profile::at(double u) const {
    if (values.empty()) throw std::logic_error("Profile::at on an empty profile");
    const auto m = static_cast<long long>(values.size());
    long long k = std::llround(u * static_cast<double>(m)) % m;
    if (k < 0) k += m;
    return values[static_cast<std::size_t>(k)];
}

Profile Profile::sample(const std::function<double(double)>& f, std::size_t grid_size) {
    std::vector<double> v(grid_size);
    for (std::size_t k = 0; k < grid_size; ++k)
        v[k] = f(static_cast<double>(k) / static_cast<double>(grid_size));
    return Profile(std::move(v));
}

Profile Profile::constant(double c, std::size_t grid_size) {
    return Profile(std::vector<double>(grid_size, c));
}

namespace {

// Sampling uses stream 0xFFFFFFFF so it never overlaps dynamics noise.
constexpr std::uint32_t kInitStream = 0xFFFFFFFFu;

std::vector<Complex> gaussian_amplitudes(const std::vector<double>& mean_mass, std::uint64_t seed) {
    const CounterRng rng(seed, kInitStream);
    std::vector<Complex> psi(mean_mass.size());
    for (std::size_t x = 0; x < psi.size(); ++x) {
        const auto z = rng.normal_pair(0, 0, static_cast<std::uint32_t>(x));
        const double sigma = std::sqrt(mean_mass[x] / 2.0);
        psi[x] = {sigma * z[0], sigma * z[1]};
    }
    return psi;
}

struct StateBuilder {
    const ChainConfig& config;
    std::uint64_t seed;

    ChainState operator()(const init::Deterministic& d) const {
        if (static_cast<int>(d.amplitudes.size()) != config.n_sites)
            throw std::invalid_argument("deterministic init: expected " +
                                        std::to_string(config.n_sites) + " amplitudes, got " +
                                        std::to_string(d.amplitudes.size()));
        for (const auto& a : d.amplitudes)
            if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
                throw std::invalid_argument("deterministic init: non-finite amplitude");
        return ChainState{d.amplitudes, 0.0};
    }

    ChainState operator()(const init::Equilibrium& e) const {
        if (!(e.lambda > 0.0)) throw std::invalid_argument("equilibrium init: lambda must be > 0");
        const std::vector<double> m(static_cast<std::size_t>(config.n_sites), 1.0 / e.lambda);
        return ChainState{gaussian_amplitudes(m, seed), 0.0};
    }

    ChainState operator()(const init::FromProfile& p) const {
        if (p.rho0.grid_size() == 0) throw std::invalid_argument("profile init: empty profile");
        std::vector<double> m(static_cast<std::size_t>(config.n_sites));
        for (int x = 1; x <= config.n_sites; ++x) {
            const double r = p.rho0.at(static_cast<double>(x) / config.n_sites);
            if (!(r >= 0.0)) throw std::invalid_argument("profile init: negative density");
            m[static_cast<std::size_t>(x - 1)] = r;
        }
        return ChainState{gaussian_amplitudes(m, seed), 0.0};
    }
};

void check_site(const ChainState& s, int x) {
    if (x < 1 || x > s.size())
        throw std::out_of_range("site " + std::to_string(x) + " outside 1.." +
                                std::to_string(s.size()));
}

}  // namespace

ChainState new_state(const ChainConfig& config, const InitSpec& spec, std::uint64_t seed) {
    config.validate();
    return std::visit(StateBuilder{config, seed}, spec);
}

double density(const ChainState& s, int x) {
    check_site(s, x);
    return std::norm(s(x));
}

double bulk_current(const ChainState& s, int x, const ChainConfig& config) {
    const int last_bond = config.n_bonds();
    if (x < 1 || x > last_bond)
        throw std::out_of_range("bond " + std::to_string(x) + " outside 1.." +
                                std::to_string(last_bond));
    const int y = config.wrap(x + 1);
    return 2.0 * (s(x) * std::conj(s(y))).imag();
}

double exchange_term(const ChainState& s, int x, int y, const ChainConfig& config) {
    const int a = config.wrap(x), b = config.wrap(y);
    check_site(s, a);
    check_site(s, b);
    return 2.0 * (s(a) * std::conj(s(b))).real();
}

double total_mass(const ChainState& s) {
    double m = 0.0;
    for (const auto& a : s.psi) m += std::norm(a);
    return m;
}

double empirical_pairing(const ChainState& s, const std::function<double(double)>& g) {
    const int n = s.size();
    double acc = 0.0;
    for (int x = 1; x <= n; ++x) acc += g(static_cast<double>(x) / n) * std::norm(s(x));
    return acc / n;
}

double empirical_pairing(const ChainState& s, const Profile& g) {
    return empirical_pairing(s, [&g](double u) { return g.at(u); });
}

}  // namespace dls
