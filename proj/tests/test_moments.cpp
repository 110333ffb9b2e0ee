#include "dls/moments.hpp"
#include "dls/quadratic.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace dls;
using Q = QuadObservable;

namespace {

MomentMatrix random_hermitian(int n, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z;
    Eigen::MatrixXcd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = Complex(z(gen), z(gen));
    MomentMatrix m;
    m.c = a * a.adjoint();   // positive, like a genuine covariance
    return m;
}

// Expectation of a quadratic combination under a phase-invariant law with
// second moments C (anomalous moments vanish).
Complex expect(const QuadCombination& q, const MomentMatrix& m) {
    Complex acc = q.constant();
    for (const auto& [o, c] : q.terms()) {
        switch (o.kind) {
            case QuadKind::rho: acc += c * m(o.x, o.x).real(); break;
            case QuadKind::j: acc += c * 2.0 * m(o.x, o.y).imag(); break;
            case QuadKind::e: acc += c * 2.0 * m(o.x, o.y).real(); break;
            case QuadKind::f:
            case QuadKind::g: acc += std::nan(""); break;
            case QuadKind::constant: acc += c; break;
        }
    }
    return acc;
}

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("moment derivative equals the expected generator image") {
    for (const auto& cfg : {periodic_chain(6, 1.4), open_chain(6, 0.6, 1.7, 0.8, 2.5)}) {
        const auto m = random_hermitian(6, 12);
        const auto d = moment_rhs(m, cfg);
        for (int x = 1; x <= 6; ++x) {
            for (int y = 1; y <= 6; ++y) {
                // psi_x psi*_y = (E(x,y) + i J(x,y)) / 2, or Rho on the diagonal
                Complex v;
                if (x == y) {
                    v = expect(apply_generator(Q::Rho(x), cfg), m);
                } else {
                    v = 0.5 * expect(apply_generator(Q::E(x, y), cfg), m) +
                        Complex(0, 0.5) * expect(apply_generator(Q::J(x, y), cfg), m);
                }
                CHECK(std::abs(d(x - 1, y - 1) - v) <= 1e-12 * (1 + std::abs(v)));
            }
        }
    }
}

TEST_CASE("moment derivative structure") {
    const auto ring = periodic_chain(7, 1.0);
    CHECK(max_abs(moment_rhs(MomentMatrix::diagonal(std::vector<double>(7, 2.5)), ring)) <= 1e-14);

    const auto open = open_chain(5, 1.0, 0.7, 1.3, 2.0);
    const auto h = random_hermitian(5, 3);
    const Eigen::MatrixXcd d = moment_rhs(h, open);
    CHECK(max_abs(d - d.adjoint()) <= 1e-12);

    MomentMatrix bad = h;
    bad.c(0, 1) += 1.0;
    CHECK_THROWS_AS(moment_rhs(bad, open), std::invalid_argument);
    CHECK_THROWS_AS(moment_rhs(MomentMatrix::diagonal({1, 1}), open), std::invalid_argument);

    // hopping off, isolated reservoir site: dC11/dt = -delta C11 + 2 delta mu_l
    const MomentOptions off{false};
    auto z = MomentMatrix::diagonal({0, 0, 0, 0, 0});
    CHECK(moment_rhs(z, open, off)(0, 0).real() == doctest::Approx(2 * 0.7 * 1.3));
    z.c(0, 0) = 2 * 1.3;
    CHECK(std::abs(moment_rhs(z, open, off)(0, 0)) <= 1e-15);
}

TEST_CASE("evolution: exact decay without hopping, fourth order with it") {
    const auto ring = periodic_chain(6, 1.5);
    const auto c0 = random_hermitian(6, 9);
    CHECK(evolve_moments(c0, 0.0, ring, 0.1).c == c0.c);

    const auto off = evolve_moments(c0, 0.8, ring, 0.002, MomentOptions{false});
    for (int x = 0; x < 6; ++x)
        for (int y = 0; y < 6; ++y) {
            const Complex expect = x == y ? c0.c(x, y) : c0.c(x, y) * std::exp(-1.5 * 0.8);
            CHECK(std::abs(off.c(x, y) - expect) <= 1e-10);
        }
    CHECK(off.time == doctest::Approx(0.8));

    const auto ref = evolve_moments(c0, 2.0, ring, 0.0025);
    const double e1 = max_abs(evolve_moments(c0, 2.0, ring, 0.04).c - ref.c);
    const double e2 = max_abs(evolve_moments(c0, 2.0, ring, 0.02).c - ref.c);
    CHECK(e1 / e2 > 12.0);
    CHECK(e1 / e2 < 20.0);
    // trace (mean mass) is conserved on the ring
    CHECK(ref.c.trace().real() == doctest::Approx(c0.c.trace().real()).epsilon(1e-12));
    CHECK_THROWS(evolve_moments(c0, -1.0, ring, 0.1));
}

TEST_CASE("stationary point: equilibrium and rejection of the ring") {
    CHECK_THROWS_AS(stationary_moments(periodic_chain(8, 1.0)), std::invalid_argument);
    const double mu = 1.7;
    const auto cfg = open_chain(12, 1.3, 0.4, mu, mu);
    const auto c = stationary_moments(cfg);
    CHECK(max_abs(c.c - 2 * mu * Eigen::MatrixXcd::Identity(12, 12)) <= 1e-12);
    const auto p = stationary_observables(c, cfg);
    for (double j : p.current) CHECK(std::abs(j) <= 1e-12);
    for (double f : p.phi) CHECK(f == doctest::Approx(2 * mu / 1.3));
}

TEST_CASE("stationary invariants of the driven chain") {
    for (const auto& [g, d] : {std::pair{1.0, 1.0}, std::pair{2.0, 0.5}, std::pair{0.3, 3.0}}) {
        for (int n : {6, 9, 16}) {
            const auto cfg = open_chain(n, g, d, 1.0, 2.0);
            const auto sol = stationary_solve(cfg);
            CHECK(sol.residual <= 1e-10);
            const auto p = stationary_observables(sol.moments, cfg);
            CHECK(p.current_spread() <= 1e-10);
            CHECK(p.rho[0] + p.rho[static_cast<std::size_t>(n - 1)] == doctest::Approx(6.0).epsilon(1e-12));
            // current from the first boundary density (derived from the moment equations)
            const double j = p.mean_current();
            CHECK(j == doctest::Approx(4 * (p.rho[0] - 3.0) / (g * (n - 1) + d)).epsilon(1e-10));
            CHECK(j < 0.0);   // mass flows from the richer right reservoir
            for (int x = 3; x <= n - 2; ++x) {
                const auto i = static_cast<std::size_t>(x - 1);
                CHECK(std::abs(p.phi[i + 1] + p.phi[i - 1] - 2 * p.phi[i]) <= 1e-10);
            }
            for (int x = 2; x <= n - 2; ++x) {
                const auto i = static_cast<std::size_t>(x - 1);
                CHECK(j == doctest::Approx(2 * (p.phi[i] - p.phi[i + 1])).epsilon(1e-9));
            }
            CHECK(p.mass == doctest::Approx(sol.moments.c.trace().real()));
            CHECK(sol.moments.hermiticity_defect() <= 1e-12);
        }
    }
}

TEST_CASE("the three stationary solvers agree") {
    const auto cfg = open_chain(10, 1.2, 0.8, 0.5, 1.5);
    StationaryOptions o;
    o.method = StationaryMethod::sparse_direct;
    const auto a = stationary_solve(cfg, o);
    o.method = StationaryMethod::lyapunov;
    const auto b = stationary_solve(cfg, o);
    o.method = StationaryMethod::pseudo_time;
    const auto c = stationary_solve(cfg, o);
    CHECK(a.method == StationaryMethod::sparse_direct);
    CHECK(b.method == StationaryMethod::lyapunov);
    CHECK(c.method == StationaryMethod::pseudo_time);
    CHECK(max_abs(a.moments.c - b.moments.c) <= 1e-9);
    CHECK(max_abs(a.moments.c - c.moments.c) <= 1e-9);

    o.pseudo_time_limit = 1.0;
    CHECK_THROWS_AS(stationary_solve(cfg, o), std::runtime_error);
}

TEST_CASE("long evolution relaxes to the stationary point") {
    const auto cfg = open_chain(6, 1.0, 1.0, 1.0, 2.0);
    const auto target = stationary_moments(cfg);
    const auto c = evolve_moments(MomentMatrix::diagonal(std::vector<double>(6, 0.0)), 600.0, cfg, 0.05);
    CHECK(max_abs(c.c - target.c) <= 1e-9);
}
