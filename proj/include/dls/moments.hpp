#pragma once

// Exact second-moment closure. C[x,y] = E[psi_x psi*_y] obeys
//
//   dC/dt = -i(Lap C - C Lap) - gamma (C - diag C) - (delta/2)(P C + C P)
//           + 2 delta (mu_l E_11 + mu_r E_NN),
//
// P = E_11 + E_NN (open chain only). Indices below are 1-based in the API and
// 0-based inside the matrix.

#include "dls/chain.hpp"

#include <Eigen/Dense>

#include <string>

namespace dls {

struct MomentMatrix {
    Eigen::MatrixXcd c;
    double time = 0.0;

    int size() const { return static_cast<int>(c.rows()); }
    Complex operator()(int x, int y) const { return c(x - 1, y - 1); }

    /// Diagonal moment matrix with C[x,x] = rho[x-1].
    static MomentMatrix diagonal(const std::vector<double>& rho);
    /// C[x,x] = rho0(x/N), the moments of init::FromProfile.
    static MomentMatrix from_profile(const Profile& rho0, int n_sites);

    double hermiticity_defect() const;   // max |C - C^dagger|
    void hermitize();
};

struct MomentOptions {
    bool hopping = true;   // false: drop the commutator (test mode)
};

/// Throws std::invalid_argument if C is not Hermitian to 1e-10 relative.
Eigen::MatrixXcd moment_rhs(const MomentMatrix& c, const ChainConfig& config,
                            const MomentOptions& options = {});

/// Classical RK4 with ceil(t / dt_ode) equal steps, re-symmetrized after each
/// step. Throws std::runtime_error if the spectral norm grows beyond 1e6
/// times its initial value.
MomentMatrix evolve_moments(MomentMatrix c0, double t, const ChainConfig& config, double dt_ode,
                            const MomentOptions& options = {});

enum class StationaryMethod { automatic, sparse_direct, lyapunov, pseudo_time };

const char* to_string(StationaryMethod m);

struct StationaryOptions {
    double tol = 1e-10;
    StationaryMethod method = StationaryMethod::automatic;
    int direct_limit = 512;          // automatic: sparse direct up to this N
    int max_refinements = 4;
    double pseudo_time_limit = 0.0;  // 0: 200 N^2 / min(gamma, delta)
};

struct StationarySolution {
    MomentMatrix moments;
    double residual = 0.0;   // max |moment_rhs|
    StationaryMethod method = StationaryMethod::automatic;
    int refinements = 0;
    std::string note;
};

/// Stationary point of the open chain; throws std::invalid_argument for the
/// ring and std::runtime_error (with the residual) when tol is not reached.
StationarySolution stationary_solve(const ChainConfig& config, const StationaryOptions& options = {});
MomentMatrix stationary_moments(const ChainConfig& config, double tol = 1e-10);

/// rho and phi per site, current per bond, exchange2[x-1] = <E_{x-1,x+1}>
/// (psi_0 = psi_{N+1} = 0 in the open chain), phi = (rho - exchange2/2)/gamma.
struct StationaryProfiles {
    std::vector<double> rho;
    std::vector<double> current;
    std::vector<double> exchange2;
    std::vector<double> phi;
    double mass = 0.0;

    double mean_current() const;
    double current_spread() const;   // max - min over bonds
};

StationaryProfiles stationary_observables(const MomentMatrix& c, const ChainConfig& config);

}  // namespace dls
