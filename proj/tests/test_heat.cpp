#include "dls/heat.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace dls;

namespace {
const double pi = std::numbers::pi;

Profile bumpy(std::size_t m) {
    return Profile::sample([](double u) {
        return 1.0 + 0.5 * std::sin(2 * pi * u) + 0.3 * std::cos(6 * pi * u) + (u < 0.3 ? 0.4 : 0.0);
    }, m);
}
}  // namespace

TEST_CASE("constant profiles and t = 0 are fixed") {
    const auto c = Profile::constant(2.5, 64);
    const auto r = heat_solve(c, 0.3, {1.0});
    CHECK(profile_distance(r, c, Norm::sup) <= 1e-13);
    const auto b = bumpy(50);
    CHECK(heat_solve(b, 0.0, {1.0}).values == b.values);
}

TEST_CASE("single mode decays at the continuum rate up to O(M^-2)") {
    const double gamma = 1.0, t = 0.02;
    double prev = 0.0;
    for (std::size_t m : {32, 64, 128}) {
        const auto rho0 = Profile::sample([](double u) { return 1 + 0.5 * std::sin(2 * pi * u); }, m);
        const auto exact = Profile::sample(
            [&](double u) { return 1 + 0.5 * std::exp(-4 * pi * pi * t / gamma) * std::sin(2 * pi * u); }, m);
        const double err = profile_distance(heat_solve(rho0, t, {gamma}), exact, Norm::sup);
        if (prev > 0.0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.05));
        prev = err;
    }
}

TEST_CASE("mean, maximum principle, semigroup and diffusivity scaling") {
    const auto b = bumpy(96);
    const auto mean = [](const Profile& p) {
        double s = 0;
        for (double v : p.values) s += v;
        return s / static_cast<double>(p.grid_size());
    };
    const auto lo = *std::min_element(b.values.begin(), b.values.end());
    const auto hi = *std::max_element(b.values.begin(), b.values.end());
    for (double t : {1e-4, 1e-3, 0.01, 0.1}) {
        const auto r = heat_solve(b, t, {0.7});
        CHECK(std::abs(mean(r) - mean(b)) <= 1e-12);
        for (double v : r.values) {
            CHECK(v >= lo - 1e-12);
            CHECK(v <= hi + 1e-12);
        }
    }
    const auto two_step = heat_solve(heat_solve(b, 0.013, {1.3}), 0.021, {1.3});
    CHECK(profile_distance(two_step, heat_solve(b, 0.034, {1.3}), Norm::sup) <= 1e-10);
    CHECK(profile_distance(heat_solve(b, 0.05, {2.0}), heat_solve(b, 0.025, {1.0}), Norm::sup) <= 1e-12);
    CHECK_THROWS(heat_solve(b, -1.0, {1.0}));
    CHECK_THROWS(heat_solve(b, 1.0, {0.0}));
    CHECK_THROWS(heat_solve(b, 1.0, {1.0, 10}));
}

TEST_CASE("profile distances") {
    const auto z = Profile::constant(0.0, 10), o = Profile::constant(1.0, 10);
    CHECK(profile_distance(z, z, Norm::L2) == 0.0);
    CHECK(profile_distance(z, o, Norm::L2) == doctest::Approx(1.0));
    CHECK(profile_distance(z, o, Norm::sup) == doctest::Approx(1.0));
    CHECK_THROWS(profile_distance(z, Profile::constant(0.0, 11), Norm::L2));

    std::mt19937 gen(4);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 50; ++trial) {
        Profile a, b, c;
        for (int i = 0; i < 17; ++i) {
            a.values.push_back(u(gen));
            b.values.push_back(u(gen));
            c.values.push_back(u(gen));
        }
        for (Norm nrm : {Norm::L2, Norm::sup})
            CHECK(profile_distance(a, c, nrm) <= profile_distance(a, b, nrm) + profile_distance(b, c, nrm) + 1e-15);
    }
}
