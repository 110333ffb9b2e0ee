#pragma once

// Configuration, microscopic state and pointwise observables of the discrete
// linear Schrodinger chain with conservative phase noise.
//
// Sites are labelled 1..N in every public function. In the periodic geometry
// site N+1 is site 1; in the open geometry psi(0) = psi(N+1) = 0.

#include <complex>
#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

namespace dls {

using Complex = std::complex<double>;

enum class Geometry { periodic, open };

const char* to_string(Geometry g);

struct ChainConfig {
    Geometry geometry = Geometry::periodic;
    int n_sites = 16;
    double gamma = 1.0;      // phase-noise intensity
    double delta = 0.0;      // reservoir coupling, open chain only
    double mu_left = 1.0;    // reservoir chemical potentials, open chain only
    double mu_right = 1.0;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;

    bool is_open() const { return geometry == Geometry::open; }
    /// Number of bonds (x, x+1): N in the ring, N-1 in the open chain.
    int n_bonds() const { return is_open() ? n_sites - 1 : n_sites; }
    /// Maps any integer site label onto 1..N for the ring; identity otherwise.
    int wrap(int x) const;
    /// True if label x names a real site (after wrapping for the ring).
    bool has_site(int x) const;

    friend bool operator==(const ChainConfig&, const ChainConfig&) = default;
};

ChainConfig periodic_chain(int n, double gamma);
ChainConfig open_chain(int n, double gamma, double delta, double mu_left, double mu_right);

/// Real function on a uniform grid u_k = k/M, k = 0..M-1, of the unit torus.
struct Profile {
    std::vector<double> values;

    Profile() = default;
    explicit Profile(std::vector<double> v) : values(std::move(v)) {}

    std::size_t grid_size() const { return values.size(); }
    /// Nearest grid value to u (taken modulo 1).
    double at(double u) const;

    static Profile sample(const std::function<double(double)>& f, std::size_t grid_size);
    static Profile constant(double c, std::size_t grid_size);
};

struct ChainState {
    std::vector<Complex> psi;
    double time = 0.0;

    int size() const { return static_cast<int>(psi.size()); }
    /// 1-based access.
    Complex& operator()(int x) { return psi[static_cast<std::size_t>(x - 1)]; }
    const Complex& operator()(int x) const { return psi[static_cast<std::size_t>(x - 1)]; }

    friend bool operator==(const ChainState&, const ChainState&) = default;
};

namespace init {
struct Deterministic {
    std::vector<Complex> amplitudes;
};
/// Product Gaussian measure exp(-lambda |psi|^2): E|psi(x)|^2 = 1/lambda.
struct Equilibrium {
    double lambda = 1.0;
};
/// Independent complex Gaussians with E|psi(x)|^2 = rho0(x/N).
struct FromProfile {
    Profile rho0;
};
}  // namespace init

using InitSpec = std::variant<init::Deterministic, init::Equilibrium, init::FromProfile>;

ChainState new_state(const ChainConfig& config, const InitSpec& spec, std::uint64_t seed);

double density(const ChainState& s, int x);
/// j_{x,x+1} = -i(psi_x psi*_{x+1} - psi*_x psi_{x+1}) = 2 Im(psi_x psi*_{x+1}).
double bulk_current(const ChainState& s, int x, const ChainConfig& config);
/// E_{x,y} = psi_x psi*_y + psi*_x psi_y = 2 Re(psi_x psi*_y).
double exchange_term(const ChainState& s, int x, int y, const ChainConfig& config);
double total_mass(const ChainState& s);

/// <pi, G> = (1/N) sum_x G(x/N) rho_x.
double empirical_pairing(const ChainState& s, const std::function<double(double)>& g);
double empirical_pairing(const ChainState& s, const Profile& g);

}  // namespace dls
