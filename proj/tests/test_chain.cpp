#include "dls/chain.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

using namespace dls;

TEST_CASE("config validation names the offending field") {
    CHECK_NOTHROW(periodic_chain(3, 1.0).validate());
    CHECK_THROWS_AS(periodic_chain(2, 1.0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(periodic_chain(8, 0.0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(open_chain(3, 1.0, 1.0, 1.0, 1.0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(open_chain(8, 1.0, 0.0, 1.0, 1.0).validate(), std::invalid_argument);
    try {
        open_chain(8, 1.0, 1.0, -1.0, 1.0).validate();
        FAIL("expected throw");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("mu_left") != std::string::npos);
    }
}

TEST_CASE("ring labels wrap, open labels do not") {
    const auto ring = periodic_chain(5, 1.0);
    CHECK(ring.wrap(0) == 5);
    CHECK(ring.wrap(6) == 1);
    CHECK(ring.wrap(-5) == 5);
    CHECK(ring.n_bonds() == 5);
    const auto open = open_chain(5, 1.0, 1.0, 1.0, 1.0);
    CHECK(open.wrap(6) == 6);
    CHECK_FALSE(open.has_site(0));
    CHECK(open.n_bonds() == 4);
}

TEST_CASE("profile lookup is nearest grid point on the torus") {
    const auto p = Profile::sample([](double u) { return u; }, 10);
    CHECK(p.at(0.31) == doctest::Approx(0.3));
    CHECK(p.at(1.02) == doctest::Approx(0.0));
    CHECK(p.at(-0.1) == doctest::Approx(0.9));
    CHECK(Profile::constant(2.5, 4).at(0.7) == 2.5);
    CHECK_THROWS(Profile{}.at(0.0));
}

TEST_CASE("observables on a hand-computed state") {
    const auto cfg = periodic_chain(3, 1.0);
    const ChainState s{{Complex(1, 0), Complex(0, 1), Complex(2, -1)}, 0.0};
    CHECK(density(s, 3) == doctest::Approx(5.0));
    // 2 Im(1 * conj(i)) = -2
    CHECK(bulk_current(s, 1, cfg) == doctest::Approx(-2.0));
    // bond (3,1) on the ring: 2 Im((2-i) * 1) = -2
    CHECK(bulk_current(s, 3, cfg) == doctest::Approx(-2.0));
    CHECK(exchange_term(s, 1, 3, cfg) == doctest::Approx(4.0));
    CHECK(total_mass(s) == doctest::Approx(7.0));
    CHECK(empirical_pairing(s, [](double u) { return u; }) ==
          doctest::Approx((1.0 / 3 + 2.0 / 3 + 5.0) / 3));

    const auto open = open_chain(4, 1.0, 1.0, 1.0, 1.0);
    const ChainState t{{1, 1, 1, 1}, 0.0};
    CHECK_THROWS_AS(bulk_current(t, 4, open), std::out_of_range);
    CHECK_THROWS_AS(density(t, 5), std::out_of_range);
}

TEST_CASE("deterministic init checks size and finiteness") {
    const auto cfg = periodic_chain(4, 1.0);
    CHECK_THROWS(new_state(cfg, init::Deterministic{{1, 2}}, 0));
    CHECK_THROWS(new_state(cfg, init::Deterministic{{1, 2, 3, Complex(NAN, 0)}}, 0));
    const auto s = new_state(cfg, init::Deterministic{{1, 2, 3, 4}}, 0);
    CHECK(s(4) == Complex(4, 0));
}

TEST_CASE("equilibrium and profile samples have the requested mean mass") {
    const auto cfg = periodic_chain(64, 1.0);
    double eq = 0.0, prof = 0.0;
    const int reps = 400;
    const auto rho0 = Profile::sample([](double u) { return 1.0 + 0.5 * std::sin(2 * std::numbers::pi * u); }, 64);
    double expected_prof = 0.0;
    for (int x = 1; x <= 64; ++x) expected_prof += rho0.at(x / 64.0);
    for (int r = 0; r < reps; ++r) {
        eq += total_mass(new_state(cfg, init::Equilibrium{0.5}, 1000 + r));
        prof += total_mass(new_state(cfg, init::FromProfile{rho0}, 5000 + r));
    }
    // mass of N exponential variables: relative sd 1/sqrt(N reps) = 0.6%
    CHECK(eq / reps == doctest::Approx(64 * 2.0).epsilon(0.025));
    CHECK(prof / reps == doctest::Approx(expected_prof).epsilon(0.025));
    CHECK(new_state(cfg, init::Equilibrium{1.0}, 7) == new_state(cfg, init::Equilibrium{1.0}, 7));
    CHECK_FALSE(new_state(cfg, init::Equilibrium{1.0}, 7) == new_state(cfg, init::Equilibrium{1.0}, 8));
    CHECK_THROWS(new_state(cfg, init::Equilibrium{0.0}, 7));
}
