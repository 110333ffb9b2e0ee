#include "dls/sde.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>

namespace dls {

StepScheme StepScheme::default_for(const ChainConfig& config) {
    double rate = std::max(1.0, config.gamma);
    if (config.is_open()) rate = std::max(rate, config.delta);
    return StepScheme{0.02 / rate};
}

void StepScheme::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
}

double default_burn_in(const ChainConfig& config) {
    const double n = config.n_sites;
    return 20.0 * n * n;
}

HoppingPropagator::HoppingPropagator(const ChainConfig& config, double t) {
    const int n = config.n_sites;
    const double pi = std::numbers::pi;
    u_.resize(n, n);
    if (!config.is_open()) {
        // circulant: U_{xy} = c_{(x-y) mod N}
        std::vector<Complex> c(static_cast<std::size_t>(n), Complex{});
        for (int k = 0; k < n; ++k) {
            const double lam = 2.0 * std::cos(2.0 * pi * k / n) - 2.0;
            const Complex ek = std::polar(1.0, -t * lam) / static_cast<double>(n);
            for (int d = 0; d < n; ++d)
                c[static_cast<std::size_t>(d)] += ek * std::polar(1.0, 2.0 * pi * k * d / n);
        }
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y) u_(x, y) = c[static_cast<std::size_t>(((x - y) % n + n) % n)];
    } else {
        Eigen::MatrixXd v(n, n);
        Eigen::VectorXcd phase(n);
        const double norm = std::sqrt(2.0 / (n + 1));
        for (int k = 1; k <= n; ++k) {
            for (int x = 1; x <= n; ++x) v(x - 1, k - 1) = norm * std::sin(pi * k * x / (n + 1));
            const double lam = 2.0 * std::cos(pi * k / (n + 1)) - 2.0;
            phase(k - 1) = std::polar(1.0, -t * lam);
        }
        const Eigen::MatrixXcd vc = v.cast<Complex>();
        u_ = vc * phase.asDiagonal() * vc.transpose();
    }
}

void HoppingPropagator::apply(std::vector<Complex>& psi) const {
    Eigen::Map<Eigen::VectorXcd> p(psi.data(), static_cast<Eigen::Index>(psi.size()));
    const Eigen::VectorXcd out = u_ * p;
    p = out;
}

ChainState hamiltonian_flow(ChainState state, double t, const ChainConfig& config) {
    HoppingPropagator(config, t).apply(state.psi);
    state.time += t;
    return state;
}

namespace {

void rotate_phases(ChainState& s, double sigma, const StepNoise& noise, std::uint32_t channel,
                   std::vector<double>& buf) {
    buf.resize(s.psi.size());
    noise.rng.normals(noise.step, channel, buf);
    for (std::size_t i = 0; i < s.psi.size(); ++i) s.psi[i] *= std::polar(1.0, sigma * buf[i]);
}

void ou_update(Complex& z, double decay, double sigma, const std::array<double, 2>& xi) {
    z = decay * z + sigma * Complex(xi[0], xi[1]);
}

}  // namespace

ChainState phase_noise_step(ChainState state, double dt, double gamma, const StepNoise& noise,
                            std::uint32_t channel) {
    std::vector<double> buf;
    rotate_phases(state, std::sqrt(gamma * dt), noise, channel, buf);
    return state;
}

ChainState thermostat_step(ChainState state, double dt, const StepNoise& noise,
                           const ChainConfig& config, std::uint32_t channel) {
    if (!config.is_open()) throw std::invalid_argument("thermostat_step needs an open chain");
    const double decay = std::exp(-0.5 * config.delta * dt);
    const double tail = -std::expm1(-config.delta * dt);
    const int n = config.n_sites;
    ou_update(state(1), decay, std::sqrt(config.mu_left * tail), noise.rng.normal_pair(noise.step, channel, 0));
    ou_update(state(n), decay, std::sqrt(config.mu_right * tail), noise.rng.normal_pair(noise.step, channel, 1));
    return state;
}

SplitStepper::SplitStepper(const ChainConfig& config, const StepScheme& scheme)
    : config_(config), scheme_(scheme), hop_((config.validate(), scheme.validate(), config), scheme.dt) {
    phase_sigma_ = std::sqrt(config.gamma * scheme.dt);
    if (config.is_open()) {
        const double h = 0.5 * scheme.dt;
        ou_decay_ = std::exp(-0.5 * config.delta * h);
        const double tail = -std::expm1(-config.delta * h);
        ou_sigma_left_ = std::sqrt(config.mu_left * tail);
        ou_sigma_right_ = std::sqrt(config.mu_right * tail);
    }
}

void SplitStepper::half_thermostat(ChainState& s, const StepNoise& noise, std::uint32_t channel) const {
    if (!config_.is_open()) return;
    ou_update(s(1), ou_decay_, ou_sigma_left_, noise.rng.normal_pair(noise.step, channel, 0));
    ou_update(s(config_.n_sites), ou_decay_, ou_sigma_right_,
              noise.rng.normal_pair(noise.step, channel, 1));
}

void SplitStepper::advance(ChainState& state, const StepNoise& noise) const {
    half_thermostat(state, noise, noise_channel::thermostat_first);
    hop_.apply(state.psi);
    rotate_phases(state, phase_sigma_, noise, noise_channel::phase, normals_);
    half_thermostat(state, noise, noise_channel::thermostat_second);
    state.time += scheme_.dt;
}

ChainState step(ChainState state, const StepScheme& scheme, const StepNoise& noise,
                const ChainConfig& config) {
    SplitStepper(config, scheme).advance(state, noise);
    return state;
}

void RunningStat::push(double v) {
    count += 1.0;
    const double d = v - mean;
    mean += d / count;
    m2 += d * (v - mean);
}

void RunningStat::merge(const RunningStat& o) {
    if (o.count == 0.0) return;
    if (count == 0.0) {
        *this = o;
        return;
    }
    const double n = count + o.count;
    const double d = o.mean - mean;
    mean += d * (o.count / n);
    m2 += o.m2 + d * d * (count * o.count / n);
    count = n;
}

double RunningStat::standard_error() const {
    if (count < 2.0) return std::numeric_limits<double>::quiet_NaN();
    return std::sqrt(variance() / count);
}

namespace {

double between_error(const std::vector<RunningStat>& v, int x) {
    return v[static_cast<std::size_t>(x - 1)].standard_error();
}

// Shifted running sums; cheaper per sample than Welford and stable enough
// because the shift is the first sample.
struct SumAccumulator {
    double n = 0.0, shift = 0.0, s1 = 0.0, s2 = 0.0;

    void push(double v) {
        if (n == 0.0) shift = v;
        const double d = v - shift;
        n += 1.0;
        s1 += d;
        s2 += d * d;
    }
    RunningStat stat() const {
        RunningStat r;
        if (n == 0.0) return r;
        r.count = n;
        r.mean = shift + s1 / n;
        r.m2 = std::max(0.0, s2 - s1 * s1 / n);
        return r;
    }
};

}  // namespace

double TrajectoryStats::error_rho(int x) const { return between_error(rho_traj, x); }
double TrajectoryStats::error_current(int x) const { return between_error(current_traj, x); }
double TrajectoryStats::error_exchange2(int x) const { return between_error(exchange2_traj, x); }

void TrajectoryStats::merge(const TrajectoryStats& o) {
    if (o.n_trajectories == 0) return;
    if (n_trajectories == 0) {
        *this = o;
        return;
    }
    if (o.n_sites != n_sites || o.dt != dt)
        throw std::invalid_argument("TrajectoryStats::merge: incompatible runs");
    auto merge_all = [](std::vector<RunningStat>& a, const std::vector<RunningStat>& b) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i].merge(b[i]);
    };
    merge_all(rho, o.rho);
    merge_all(current, o.current);
    merge_all(exchange2, o.exchange2);
    merge_all(rho_traj, o.rho_traj);
    merge_all(current_traj, o.current_traj);
    merge_all(exchange2_traj, o.exchange2_traj);
    mass.merge(o.mass);
    mass_traj.merge(o.mass_traj);
    if (mass_times == o.mass_times) {
        const double wa = static_cast<double>(n_trajectories);
        const double wb = static_cast<double>(o.n_trajectories);
        for (std::size_t i = 0; i < mass_series.size(); ++i)
            mass_series[i] = (wa * mass_series[i] + wb * o.mass_series[i]) / (wa + wb);
    } else {
        mass_times.clear();
        mass_series.clear();
    }
    max_relative_mass_drift = std::max(max_relative_mass_drift, o.max_relative_mass_drift);
    samples_per_trajectory = std::min(samples_per_trajectory, o.samples_per_trajectory);
    n_trajectories += o.n_trajectories;
}

TrajectoryResult run_trajectory(const ChainConfig& config, const StepScheme& scheme,
                                const InitSpec& init, const RunPlan& plan, std::uint64_t seed,
                                std::uint32_t trajectory) {
    const SplitStepper stepper(config, scheme);
    if (plan.t_burn < 0.0 || plan.t_measure < 0.0)
        throw std::invalid_argument("run times must be non-negative");
    const auto n_burn = static_cast<std::uint64_t>(std::llround(plan.t_burn / scheme.dt));
    const auto n_meas = static_cast<std::uint64_t>(std::llround(plan.t_measure / scheme.dt));
    const std::uint64_t every = std::max<std::uint64_t>(1, plan.mass_sample_every);

    const int n = config.n_sites;
    const auto un = static_cast<std::size_t>(n);
    const CounterRng rng(seed, trajectory);

    TrajectoryResult out;
    ChainState s = new_state(config, init, seed);
    const double m0 = total_mass(s);

    std::vector<SumAccumulator> acc_rho(un), acc_j(un), acc_e(un);
    SumAccumulator acc_mass;
    TrajectoryStats& st = out.stats;
    st.n_sites = n;
    st.n_bonds = config.n_bonds();
    st.dt = scheme.dt;
    st.mass_times.push_back(0.0);
    st.mass_series.push_back(m0);

    const std::uint64_t total = n_burn + n_meas;
    for (std::uint64_t k = 0; k < total; ++k) {
        if (k == n_burn) out.burn_in_state = s;
        stepper.advance(s, StepNoise{rng, k});
        const double m = total_mass(s);
        if (!std::isfinite(m)) {
            int bad = 1;
            while (bad <= n && std::isfinite(std::abs(s(bad)))) ++bad;
            throw std::runtime_error("non-finite amplitude at step " + std::to_string(k) +
                                     ", site " + std::to_string(std::min(bad, n)));
        }
        if (!config.is_open() && m0 > 0.0) {
            const double drift = std::abs(m - m0) / m0;
            st.max_relative_mass_drift = std::max(st.max_relative_mass_drift, drift);
            assert(drift <= 1e-9);
        }
        if ((k + 1) % every == 0) {
            st.mass_times.push_back(s.time);
            st.mass_series.push_back(m);
        }
        if (k >= n_burn) {
            for (int x = 1; x <= n; ++x) {
                const auto i = static_cast<std::size_t>(x - 1);
                acc_rho[i].push(std::norm(s(x)));
                if (x <= st.n_bonds) acc_j[i].push(bulk_current(s, x, config));
                if (!config.is_open() || (x > 1 && x < n))
                    acc_e[i].push(exchange_term(s, config.wrap(x - 1), config.wrap(x + 1), config));
            }
            acc_mass.push(m);
        }
    }
    if (n_burn == total) out.burn_in_state = s;
    out.final_state = s;

    auto fill = [&](const std::vector<SumAccumulator>& a, std::vector<RunningStat>& pooled,
                    std::vector<RunningStat>& per_traj) {
        pooled.resize(un);
        per_traj.resize(un);
        for (std::size_t i = 0; i < un; ++i) {
            pooled[i] = a[i].stat();
            if (a[i].n > 0.0) per_traj[i].push(pooled[i].mean);
        }
    };
    fill(acc_rho, st.rho, st.rho_traj);
    fill(acc_j, st.current, st.current_traj);
    fill(acc_e, st.exchange2, st.exchange2_traj);
    st.mass = acc_mass.stat();
    if (acc_mass.n > 0.0) st.mass_traj.push(st.mass.mean);
    st.samples_per_trajectory = n_meas;
    st.n_trajectories = 1;
    return out;
}

TrajectoryStats ensemble_average(const ChainConfig& config, const StepScheme& scheme,
                                 const InitSpec& init, const RunPlan& plan,
                                 const std::vector<std::uint64_t>& seeds, int threads) {
    if (seeds.empty()) throw std::invalid_argument("ensemble needs at least one seed");
    const std::size_t n = seeds.size();
    {
        std::vector<std::uint64_t> sorted = seeds;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw std::invalid_argument("ensemble seeds must be distinct");
    }
    std::vector<TrajectoryStats> parts(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                parts[i] = run_trajectory(config, scheme, init, plan, seeds[i],
                                          static_cast<std::uint32_t>(i))
                               .stats;
            } catch (...) {
                const std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);
                return;
            }
        }
    };

    const auto n_threads = static_cast<std::size_t>(std::clamp<long>(threads, 1, static_cast<long>(n)));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);

    TrajectoryStats total;
    for (const auto& p : parts) total.merge(p);
    return total;
}

std::vector<std::uint64_t> consecutive_seeds(std::uint64_t base, std::size_t n) {
    std::vector<std::uint64_t> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = base + i;
    return s;
}

}  // namespace dls
