#pragma once

// Monte-Carlo integration of the phase-noise chain, optionally driven at the
// ends by two Ornstein-Uhlenbeck reservoirs.
//
// One step of length dt is the Strang composition
//   half thermostat | hopping flow (dt) | phase noise (dt) | half thermostat
// of three sub-flows that are each solved exactly: the hopping flow by its
// spectral decomposition, the phase noise as a pure rotation by a Gaussian
// angle of variance gamma*dt, the reservoirs by the exact OU transition.

#include "dls/chain.hpp"
#include "dls/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace dls {

struct StepScheme {
    double dt = 0.02;

    /// dt = 0.02 / max(1, gamma, delta).
    static StepScheme default_for(const ChainConfig& config);
    void validate() const;
};

/// Default burn-in for stationary runs, 20 N^2 microscopic time units.
double default_burn_in(const ChainConfig& config);

/// exp(-i t Lap) for the ring (circulant) or the Dirichlet chain.
class HoppingPropagator {
public:
    HoppingPropagator(const ChainConfig& config, double t);

    void apply(std::vector<Complex>& psi) const;
    const Eigen::MatrixXcd& matrix() const { return u_; }

private:
    Eigen::MatrixXcd u_;
};

/// Noise for one step: variates are addressed by (rng, step, channel, site).
struct StepNoise {
    const CounterRng& rng;
    std::uint64_t step = 0;
};

namespace noise_channel {
inline constexpr std::uint32_t phase = 0;
inline constexpr std::uint32_t thermostat_first = 1;
inline constexpr std::uint32_t thermostat_second = 2;
}  // namespace noise_channel

ChainState hamiltonian_flow(ChainState state, double t, const ChainConfig& config);

/// psi(x) <- psi(x) exp(i eta_x), eta_x ~ N(0, gamma dt).
ChainState phase_noise_step(ChainState state, double dt, double gamma, const StepNoise& noise,
                            std::uint32_t channel = noise_channel::phase);

/// Exact OU transition over time dt at sites 1 and N; each real component of
/// the reservoir law has variance mu.
ChainState thermostat_step(ChainState state, double dt, const StepNoise& noise,
                           const ChainConfig& config,
                           std::uint32_t channel = noise_channel::thermostat_first);

/// Reusable integrator with the hopping propagator and OU coefficients
/// precomputed for a fixed dt.
class SplitStepper {
public:
    SplitStepper(const ChainConfig& config, const StepScheme& scheme);

    void advance(ChainState& state, const StepNoise& noise) const;

    const ChainConfig& config() const { return config_; }
    const StepScheme& scheme() const { return scheme_; }

private:
    ChainConfig config_;
    StepScheme scheme_;
    HoppingPropagator hop_;
    double ou_decay_ = 1.0;        // exp(-delta dt/4) for a half step
    double ou_sigma_left_ = 0.0;   // per real component
    double ou_sigma_right_ = 0.0;
    double phase_sigma_ = 0.0;
    mutable std::vector<double> normals_;

    void half_thermostat(ChainState& s, const StepNoise& noise, std::uint32_t channel) const;
};

/// One Strang step; builds a SplitStepper, so prefer SplitStepper in loops.
ChainState step(ChainState state, const StepScheme& scheme, const StepNoise& noise,
                const ChainConfig& config);

/// Running mean/variance with the pairwise (Chan et al.) merge.
struct RunningStat {
    double count = 0.0;
    double mean = 0.0;
    double m2 = 0.0;

    void push(double v);
    void merge(const RunningStat& other);
    double variance() const { return count > 1.0 ? m2 / (count - 1.0) : 0.0; }
    /// Standard error of the mean assuming independent samples.
    double standard_error() const;
};

/// Time averages of one or more trajectories.
///
/// `rho`, `current` and `exchange2` pool every sampled step; the `*_traj`
/// members hold one sample per trajectory (its time average), which is what
/// the error bars are built from. exchange2[x-1] is E_{x-1,x+1}; in the open
/// chain the entries for x = 1 and x = N stay empty.
struct TrajectoryStats {
    int n_sites = 0;
    int n_bonds = 0;
    std::uint64_t n_trajectories = 0;
    std::uint64_t samples_per_trajectory = 0;
    double dt = 0.0;

    std::vector<RunningStat> rho, current, exchange2;
    std::vector<RunningStat> rho_traj, current_traj, exchange2_traj;
    RunningStat mass, mass_traj;

    std::vector<double> mass_times;     // ensemble-mean mass on a fixed grid
    std::vector<double> mass_series;
    double max_relative_mass_drift = 0.0;   // over all steps, closed system only

    void merge(const TrajectoryStats& other);
    bool empty() const { return n_trajectories == 0 || samples_per_trajectory == 0; }

    double mean_rho(int x) const { return rho_traj[static_cast<std::size_t>(x - 1)].mean; }
    double error_rho(int x) const;
    double mean_current(int x) const { return current_traj[static_cast<std::size_t>(x - 1)].mean; }
    double error_current(int x) const;
    double mean_exchange2(int x) const {
        return exchange2_traj[static_cast<std::size_t>(x - 1)].mean;
    }
    double error_exchange2(int x) const;
};

struct RunPlan {
    double t_burn = 0.0;
    double t_measure = 0.0;
    std::uint64_t mass_sample_every = 1000;   // steps between mass-series points
};

struct TrajectoryResult {
    TrajectoryStats stats;
    ChainState burn_in_state;
    ChainState final_state;
};

TrajectoryResult run_trajectory(const ChainConfig& config, const StepScheme& scheme,
                                const InitSpec& init, const RunPlan& plan, std::uint64_t seed,
                                std::uint32_t trajectory = 0);

/// Runs one trajectory per seed (trajectory index = position in `seeds`) on
/// up to `threads` worker threads and merges them in index order, so the
/// result does not depend on scheduling.
TrajectoryStats ensemble_average(const ChainConfig& config, const StepScheme& scheme,
                                 const InitSpec& init, const RunPlan& plan,
                                 const std::vector<std::uint64_t>& seeds, int threads = 1);

/// seeds base, base+1, ...: the default seed schedule.
std::vector<std::uint64_t> consecutive_seeds(std::uint64_t base, std::size_t n);

}  // namespace dls
