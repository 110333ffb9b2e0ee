#include "dls/sde.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>

using namespace dls;

namespace {

double max_diff(const std::vector<Complex>& a, const std::vector<Complex>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// RK4 on d psi/dt = -i Lap psi with psi_0 = psi_{N+1} = 0 or periodic.
std::vector<Complex> rk4_hopping(std::vector<Complex> psi, double t, const ChainConfig& c) {
    const int n = c.n_sites;
    auto rhs = [&](const std::vector<Complex>& p) {
        std::vector<Complex> d(p.size());
        for (int x = 0; x < n; ++x) {
            Complex l = -2.0 * p[static_cast<std::size_t>(x)];
            if (c.is_open()) {
                if (x > 0) l += p[static_cast<std::size_t>(x - 1)];
                if (x < n - 1) l += p[static_cast<std::size_t>(x + 1)];
            } else {
                l += p[static_cast<std::size_t>((x + 1) % n)] + p[static_cast<std::size_t>((x + n - 1) % n)];
            }
            d[static_cast<std::size_t>(x)] = Complex(0, -1) * l;
        }
        return d;
    };
    const int steps = 4000;
    const double h = t / steps;
    auto axpy = [](std::vector<Complex> a, const std::vector<Complex>& b, double s) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
        return a;
    };
    for (int k = 0; k < steps; ++k) {
        const auto k1 = rhs(psi);
        const auto k2 = rhs(axpy(psi, k1, h / 2));
        const auto k3 = rhs(axpy(psi, k2, h / 2));
        const auto k4 = rhs(axpy(psi, k3, h));
        for (std::size_t i = 0; i < psi.size(); ++i)
            psi[i] += h / 6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return psi;
}

bool bit_equal(const RunningStat& a, const RunningStat& b) {
    return std::memcmp(&a, &b, sizeof(RunningStat)) == 0;
}

bool bit_equal(const TrajectoryStats& a, const TrajectoryStats& b) {
    auto vec = [](const std::vector<RunningStat>& x, const std::vector<RunningStat>& y) {
        if (x.size() != y.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (!bit_equal(x[i], y[i])) return false;
        return true;
    };
    return vec(a.rho, b.rho) && vec(a.current, b.current) && vec(a.exchange2, b.exchange2) &&
           vec(a.rho_traj, b.rho_traj) && vec(a.current_traj, b.current_traj) &&
           vec(a.exchange2_traj, b.exchange2_traj) && bit_equal(a.mass, b.mass) &&
           a.mass_series == b.mass_series && a.n_trajectories == b.n_trajectories;
}

}  // namespace

TEST_CASE("hopping flow is the exact unitary propagator") {
    for (const auto& cfg : {periodic_chain(7, 1.0), open_chain(7, 1.0, 1.0, 1.0, 1.0)}) {
        const ChainState s = new_state(cfg, init::Equilibrium{1.0}, 3);
        CHECK(max_diff(hamiltonian_flow(s, 0.0, cfg).psi, s.psi) <= 1e-14);
        const auto moved = hamiltonian_flow(s, 1.7, cfg);
        CHECK(max_diff(moved.psi, rk4_hopping(s.psi, 1.7, cfg)) <= 1e-10);
        CHECK(std::abs(total_mass(moved) - total_mass(s)) <= 1e-12 * total_mass(s));
        CHECK(moved.time == doctest::Approx(1.7));
    }
    const auto ring = periodic_chain(4, 1.0);
    const ChainState flat{{1, 1, 1, 1}, 0.0};
    CHECK(max_diff(hamiltonian_flow(flat, 12.3, ring).psi, flat.psi) <= 1e-14);
}

TEST_CASE("phase noise only rotates phases") {
    const auto cfg = periodic_chain(9, 2.0);
    const ChainState s = new_state(cfg, init::Equilibrium{0.5}, 4);
    const CounterRng rng(1, 0);
    const auto t = phase_noise_step(s, 0.3, cfg.gamma, StepNoise{rng, 0});
    for (int x = 1; x <= 9; ++x) CHECK(density(t, x) == doctest::Approx(density(s, x)).epsilon(1e-15));
    CHECK(phase_noise_step(s, 0.0, cfg.gamma, StepNoise{rng, 0}) == s);

    // E exp(i eta) = exp(-gamma t / 2) after k steps
    const ChainState one{{Complex(1, 0), 0, 0, 0, 0, 0, 0, 0, 0}, 0.0};
    const int samples = 20000, steps = 10;
    const double dt = 0.05;
    Complex mean = 0;
    for (int r = 0; r < samples; ++r) {
        const CounterRng g(77, static_cast<std::uint32_t>(r));
        ChainState z = one;
        for (int k = 0; k < steps; ++k) z = phase_noise_step(z, dt, cfg.gamma, StepNoise{g, static_cast<std::uint64_t>(k)});
        mean += z(1);
    }
    mean /= samples;
    const double expect = std::exp(-cfg.gamma * dt * steps / 2);
    // sd of each component <= 1/sqrt(2 * samples) = 0.005
    CHECK(std::abs(mean.real() - expect) < 0.02);
    CHECK(std::abs(mean.imag()) < 0.02);
}

TEST_CASE("reservoir transition") {
    const auto cfg = open_chain(5, 1.0, 0.8, 1.5, 0.5);
    const CounterRng rng(11, 0);
    const ChainState s = new_state(cfg, init::Equilibrium{1.0}, 2);
    CHECK(thermostat_step(s, 0.0, StepNoise{rng, 0}, cfg) == s);
    CHECK_THROWS(thermostat_step(s, 0.1, StepNoise{rng, 0}, periodic_chain(5, 1.0)));
    const auto moved = thermostat_step(s, 0.1, StepNoise{rng, 0}, cfg);
    for (int x = 2; x <= 4; ++x) CHECK(moved(x) == s(x));

    // long run of the isolated reservoir sites: <|psi_1|^2> = 2 mu_l, <|psi_N|^2> = 2 mu_r
    ChainState z = s;
    double left = 0, right = 0;
    const int n = 20000;
    for (int k = 0; k < n; ++k) {
        z = thermostat_step(z, 5.0, StepNoise{rng, static_cast<std::uint64_t>(k)}, cfg);
        left += density(z, 1);
        right += density(z, 5);
    }
    // |psi|^2 is exponential with mean 2 mu; samples nearly independent at delta dt = 4
    CHECK(std::abs(left / n - 3.0) < 3 * 3.0 / std::sqrt(n) * 1.1);
    CHECK(std::abs(right / n - 1.0) < 3 * 1.0 / std::sqrt(n) * 1.1);
}

TEST_CASE("closed chain conserves mass over many steps") {
    const auto cfg = periodic_chain(16, 1.0);
    const auto scheme = StepScheme::default_for(cfg);
    const SplitStepper stepper(cfg, scheme);
    ChainState s = new_state(cfg, init::Equilibrium{1.0}, 5);
    const double m0 = total_mass(s);
    const CounterRng rng(5, 0);
    double drift = 0;
    for (std::uint64_t k = 0; k < 200000; ++k) {
        stepper.advance(s, StepNoise{rng, k});
        drift = std::max(drift, std::abs(total_mass(s) - m0) / m0);
    }
    CHECK(drift <= 1e-9);
}

TEST_CASE("global gauge phases i and -1 leave observables bit-unchanged") {
    const auto cfg = periodic_chain(10, 1.3);
    const StepScheme scheme{0.05};
    const ChainState s = new_state(cfg, init::Equilibrium{1.0}, 8);
    for (const Complex g : {Complex(0, 1), Complex(-1, 0)}) {
        init::Deterministic a{s.psi}, b{s.psi};
        for (auto& z : b.amplitudes) z *= g;
        const RunPlan plan{1.0, 5.0, 10};
        const auto ra = run_trajectory(cfg, scheme, a, plan, 9);
        const auto rb = run_trajectory(cfg, scheme, b, plan, 9);
        CHECK(bit_equal(ra.stats, rb.stats));
    }
}

TEST_CASE("trajectories are reproducible and thread-count independent") {
    const auto cfg = open_chain(6, 1.0, 1.0, 1.0, 2.0);
    const auto scheme = StepScheme::default_for(cfg);
    const RunPlan plan{2.0, 10.0, 50};
    const auto a = run_trajectory(cfg, scheme, init::Equilibrium{1.0}, plan, 21);
    const auto b = run_trajectory(cfg, scheme, init::Equilibrium{1.0}, plan, 21);
    CHECK(bit_equal(a.stats, b.stats));
    CHECK(a.final_state == b.final_state);
    const auto one = ensemble_average(cfg, scheme, init::Equilibrium{1.0}, plan, {21});
    CHECK(bit_equal(one, a.stats));

    const auto seeds = consecutive_seeds(100, 9);
    const auto t1 = ensemble_average(cfg, scheme, init::Equilibrium{1.0}, plan, seeds, 1);
    const auto t4 = ensemble_average(cfg, scheme, init::Equilibrium{1.0}, plan, seeds, 4);
    CHECK(bit_equal(t1, t4));
    CHECK(t1.n_trajectories == 9);
    CHECK_THROWS(ensemble_average(cfg, scheme, init::Equilibrium{1.0}, plan, {3, 4, 3}));
}

TEST_CASE("running statistics merge") {
    RunningStat a, b, all;
    for (int i = 0; i < 100; ++i) {
        const double v = std::sin(i * 0.37) * 3 + i * 0.01;
        (i < 37 ? a : b).push(v);
        all.push(v);
    }
    RunningStat ab = a, ba = b;
    ab.merge(b);
    ba.merge(a);
    CHECK(ab.count == all.count);
    CHECK(ab.mean == doctest::Approx(all.mean).epsilon(1e-12));
    CHECK(ab.variance() == doctest::Approx(all.variance()).epsilon(1e-12));
    CHECK(std::abs(ab.mean - ba.mean) <= 1e-12 * std::abs(ab.mean));
    CHECK(std::abs(ab.m2 - ba.m2) <= 1e-12 * ab.m2);

    const auto cfg = periodic_chain(5, 1.0);
    const RunPlan plan{0.0, 3.0, 10};
    auto sa = run_trajectory(cfg, StepScheme{0.02}, init::Equilibrium{1.0}, plan, 1).stats;
    auto sb = run_trajectory(cfg, StepScheme{0.02}, init::Equilibrium{1.0}, plan, 2).stats;
    auto x = sa, y = sb;
    x.merge(sb);
    y.merge(sa);
    for (int s = 1; s <= 5; ++s) {
        CHECK(std::abs(x.mean_rho(s) - y.mean_rho(s)) <= 1e-12 * std::abs(x.mean_rho(s)));
        CHECK(std::abs(x.mean_current(s) - y.mean_current(s)) <= 1e-12 * (1 + std::abs(x.mean_current(s))));
    }
}

TEST_CASE("error bars shrink like one over root n") {
    const auto cfg = periodic_chain(4, 1.0);
    const RunPlan plan{0.0, 2.0, 1000};
    const auto seeds = consecutive_seeds(1, 800);
    const std::vector<std::uint64_t> half(seeds.begin(), seeds.begin() + 400);
    const auto small = ensemble_average(cfg, StepScheme{0.02}, init::Equilibrium{1.0}, plan, half);
    const auto large = ensemble_average(cfg, StepScheme{0.02}, init::Equilibrium{1.0}, plan, seeds);
    for (int x = 1; x <= 4; ++x) {
        CHECK(large.error_rho(x) / small.error_rho(x) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(0.2));
        CHECK(large.error_current(x) / small.error_current(x) ==
              doctest::Approx(1 / std::sqrt(2.0)).epsilon(0.2));
    }
}

TEST_CASE("empty measurement window and non-finite detection") {
    const auto cfg = periodic_chain(6, 1.0);
    const auto r = run_trajectory(cfg, StepScheme{0.02}, init::Equilibrium{1.0}, RunPlan{1.0, 0.0, 10}, 4);
    CHECK(r.stats.empty());
    CHECK(r.burn_in_state.time == doctest::Approx(1.0));
    CHECK(r.burn_in_state == r.final_state);

    std::vector<Complex> big(6, Complex(1e200, 0));
    CHECK_THROWS_AS(run_trajectory(cfg, StepScheme{0.02}, init::Deterministic{big}, RunPlan{0.0, 1.0, 10}, 4),
                    std::runtime_error);
}

TEST_CASE("stationary averages: equilibrium is flat, driven current is flat") {
    const double lambda = 0.5;
    const auto ring = periodic_chain(8, 1.0);
    const auto eq = ensemble_average(ring, StepScheme::default_for(ring), init::Equilibrium{lambda},
                                     RunPlan{0.0, 200.0, 1000}, consecutive_seeds(300, 16));
    for (int x = 1; x <= 8; ++x) CHECK(std::abs(eq.mean_rho(x) - 1 / lambda) <= 3 * eq.error_rho(x));

    const double mu = 1.5;
    const auto equal = open_chain(6, 1.0, 1.0, mu, mu);
    const RunPlan plan{default_burn_in(equal), 1500.0, 100000};
    const auto st = ensemble_average(equal, StepScheme::default_for(equal), init::Equilibrium{1.0}, plan,
                                     consecutive_seeds(400, 16), 4);
    for (int x = 1; x <= 6; ++x) CHECK(std::abs(st.mean_rho(x) - 2 * mu) <= 3 * st.error_rho(x));

    const auto driven = open_chain(6, 1.0, 1.0, 1.0, 2.0);
    const auto dr = ensemble_average(driven, StepScheme::default_for(driven), init::Equilibrium{1.0}, plan,
                                     consecutive_seeds(500, 16), 4);
    double mean_j = 0;
    for (int x = 1; x <= 5; ++x) mean_j += dr.mean_current(x) / 5;
    for (int x = 1; x <= 5; ++x) CHECK(std::abs(dr.mean_current(x) - mean_j) <= 3 * dr.error_current(x));
}
