#include "dls/moments.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

namespace dls {

namespace {

constexpr Complex kI{0.0, 1.0};

double max_abs(const Eigen::MatrixXcd& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

void require_size(const MomentMatrix& c, const ChainConfig& config) {
    if (c.c.rows() != config.n_sites || c.c.cols() != config.n_sites)
        throw std::invalid_argument("moment matrix size " + std::to_string(c.c.rows()) +
                                    " does not match N = " + std::to_string(config.n_sites));
}

// Neighbours of site a (0-based) under the geometry's Laplacian.
struct Row {
    int lo = -1, hi = -1;
};

Row neighbours(int a, const ChainConfig& config) {
    const int n = config.n_sites;
    Row r;
    if (config.is_open()) {
        if (a > 0) r.lo = a - 1;
        if (a < n - 1) r.hi = a + 1;
    } else {
        r.lo = (a + n - 1) % n;
        r.hi = (a + 1) % n;
    }
    return r;
}

// Writes rhs(C) into out; C need not be Hermitian here.
void rhs_into(const Eigen::MatrixXcd& c, const ChainConfig& config, const MomentOptions& options,
              Eigen::MatrixXcd& out) {
    const int n = config.n_sites;
    out.resize(n, n);
    std::vector<Row> nb(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) nb[static_cast<std::size_t>(a)] = neighbours(a, config);
    const double g = config.gamma;
    const bool open = config.is_open();
    const double hd = open ? 0.5 * config.delta : 0.0;
    for (int y = 0; y < n; ++y) {
        const Row& ry = nb[static_cast<std::size_t>(y)];
        const double py = open && (y == 0 || y == n - 1) ? 1.0 : 0.0;
        for (int x = 0; x < n; ++x) {
            const Row& rx = nb[static_cast<std::size_t>(x)];
            const Complex cxy = c(x, y);
            Complex v = 0.0;
            if (options.hopping) {
                Complex lc = -2.0 * cxy, cl = -2.0 * cxy;
                if (rx.lo >= 0) lc += c(rx.lo, y);
                if (rx.hi >= 0) lc += c(rx.hi, y);
                if (ry.lo >= 0) cl += c(x, ry.lo);
                if (ry.hi >= 0) cl += c(x, ry.hi);
                v = -kI * (lc - cl);
            }
            if (x != y) v -= g * cxy;
            const double px = open && (x == 0 || x == n - 1) ? 1.0 : 0.0;
            v -= hd * (px + py) * cxy;
            out(x, y) = v;
        }
    }
    if (open) {
        out(0, 0) += 2.0 * config.delta * config.mu_left;
        out(n - 1, n - 1) += 2.0 * config.delta * config.mu_right;
    }
}

using SparseC = Eigen::SparseMatrix<Complex>;

// The homogeneous part of rhs as an N^2 x N^2 matrix on column-major vec(C).
SparseC assemble(const ChainConfig& config) {
    const int n = config.n_sites;
    const auto idx = [n](int x, int y) { return x + n * y; };
    std::vector<Eigen::Triplet<Complex>> t;
    t.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n) * 5);
    const double g = config.gamma;
    const double hd = 0.5 * config.delta;
    for (int y = 0; y < n; ++y) {
        const Row ry = neighbours(y, config);
        const double py = (y == 0 || y == n - 1) ? 1.0 : 0.0;
        for (int x = 0; x < n; ++x) {
            const Row rx = neighbours(x, config);
            const double px = (x == 0 || x == n - 1) ? 1.0 : 0.0;
            const int row = idx(x, y);
            // the -2 diagonal of Lap cancels between L C and C L
            Complex diag = -kI * (-2.0) + kI * (-2.0);
            if (x != y) diag -= g;
            diag -= hd * (px + py);
            t.emplace_back(row, row, diag);
            if (rx.lo >= 0) t.emplace_back(row, idx(rx.lo, y), -kI);
            if (rx.hi >= 0) t.emplace_back(row, idx(rx.hi, y), -kI);
            if (ry.lo >= 0) t.emplace_back(row, idx(x, ry.lo), kI);
            if (ry.hi >= 0) t.emplace_back(row, idx(x, ry.hi), kI);
        }
    }
    SparseC a(n * n, n * n);
    a.setFromTriplets(t.begin(), t.end());
    a.makeCompressed();
    return a;
}

double residual_of(const MomentMatrix& m, const ChainConfig& config) {
    Eigen::MatrixXcd r;
    rhs_into(m.c, config, {}, r);
    return max_abs(r);
}

StationarySolution solve_sparse(const ChainConfig& config, const StationaryOptions& options) {
    const int n = config.n_sites;
    const SparseC a = assemble(config);
    Eigen::SparseLU<SparseC> lu;
    lu.analyzePattern(a);
    lu.factorize(a);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("sparse factorization failed: " + lu.lastErrorMessage());

    StationarySolution sol;
    sol.method = StationaryMethod::sparse_direct;
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(n * n);
    b(0) = -2.0 * config.delta * config.mu_left;
    b(n * n - 1) = -2.0 * config.delta * config.mu_right;
    Eigen::VectorXcd v = lu.solve(b);
    sol.moments.c = Eigen::Map<Eigen::MatrixXcd>(v.data(), n, n);
    sol.moments.hermitize();
    sol.residual = residual_of(sol.moments, config);
    while (sol.residual > options.tol && sol.refinements < options.max_refinements) {
        Eigen::MatrixXcd r;
        rhs_into(sol.moments.c, config, {}, r);
        const Eigen::VectorXcd rv = Eigen::Map<const Eigen::VectorXcd>(r.data(), n * n);
        const Eigen::VectorXcd dv = lu.solve(-rv);
        sol.moments.c += Eigen::Map<const Eigen::MatrixXcd>(dv.data(), n, n);
        sol.moments.hermitize();
        sol.residual = residual_of(sol.moments, config);
        ++sol.refinements;
    }
    return sol;
}

// Lyapunov form: with K = -i Lap - (delta/2) P - (gamma/2) I the stationary
// equation is K C + C K^dagger + gamma diag(C) + S = 0. For diagonal D,
// X = Lyap(D) solves K X + X K^dagger = -D; writing C = Lyap(gamma diag C + S)
// leaves an N x N system for diag C. Lyap is applied in the eigenbasis of K.
class LyapunovSolver {
public:
    explicit LyapunovSolver(const ChainConfig& config) : n_(config.n_sites) {
        Eigen::MatrixXcd k = Eigen::MatrixXcd::Zero(n_, n_);
        for (int x = 0; x < n_; ++x) {
            const Row r = neighbours(x, config);
            k(x, x) = -kI * (-2.0) - 0.5 * config.gamma;
            if (r.lo >= 0) k(x, r.lo) = -kI;
            if (r.hi >= 0) k(x, r.hi) = -kI;
        }
        k(0, 0) -= 0.5 * config.delta;
        k(n_ - 1, n_ - 1) -= 0.5 * config.delta;
        const Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(k);
        if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition of K failed");
        v_ = es.eigenvectors();
        const Eigen::PartialPivLU<Eigen::MatrixXcd> vlu(v_);
        w_ = vlu.inverse();
        g_.resize(n_, n_);
        const Eigen::VectorXcd lam = es.eigenvalues();
        for (int j = 0; j < n_; ++j)
            for (int i = 0; i < n_; ++i) g_(i, j) = -1.0 / (lam(i) + std::conj(lam(j)));

        // M(x,k) = diag(Lyap(E_kk))_x
        m_.resize(n_, n_);
        for (int kk = 0; kk < n_; ++kk) {
            Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(n_, n_);
            d(kk, kk) = 1.0;
            m_.col(kk) = apply(d).diagonal().real();
        }
        system_ = Eigen::MatrixXd::Identity(n_, n_) - config.gamma * m_;
        gamma_ = config.gamma;
        lu_.compute(system_);
    }

    /// Lyap(D) for a general Hermitian D.
    Eigen::MatrixXcd apply(const Eigen::MatrixXcd& d) const {
        Eigen::MatrixXcd y = w_ * d * w_.adjoint();
        y = y.cwiseProduct(g_);
        return v_ * y * v_.adjoint();
    }

    /// Solves K X + X K^dagger + gamma diag(X) = -R.
    Eigen::MatrixXcd solve(const Eigen::MatrixXcd& r) const {
        const Eigen::MatrixXcd x0 = apply(r);
        const Eigen::VectorXd diag = lu_.solve(Eigen::VectorXd(x0.diagonal().real()));
        Eigen::MatrixXcd rr = r;
        for (int x = 0; x < n_; ++x) rr(x, x) += gamma_ * diag(x);
        return apply(rr);
    }

private:
    int n_;
    double gamma_ = 0.0;
    Eigen::MatrixXcd v_, w_, g_;
    Eigen::MatrixXd m_, system_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

StationarySolution solve_lyapunov(const ChainConfig& config, const StationaryOptions& options) {
    const int n = config.n_sites;
    const LyapunovSolver lyap(config);
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(n, n);
    s(0, 0) = 2.0 * config.delta * config.mu_left;
    s(n - 1, n - 1) = 2.0 * config.delta * config.mu_right;

    StationarySolution sol;
    sol.method = StationaryMethod::lyapunov;
    sol.moments.c = lyap.solve(s);
    sol.moments.hermitize();
    sol.residual = residual_of(sol.moments, config);
    while (sol.residual > options.tol && sol.refinements < options.max_refinements) {
        // rhs(C + X) = rhs(C) + (K X + X K^dagger + gamma diag X) = 0
        Eigen::MatrixXcd r;
        rhs_into(sol.moments.c, config, {}, r);
        sol.moments.c += lyap.solve(r);
        sol.moments.hermitize();
        sol.residual = residual_of(sol.moments, config);
        ++sol.refinements;
    }
    return sol;
}

StationarySolution solve_pseudo_time(const ChainConfig& config, const StationaryOptions& options,
                                     MomentMatrix start) {
    const int n = config.n_sites;
    const double slow = std::min(config.gamma, config.delta);
    const double limit = options.pseudo_time_limit > 0.0
                             ? options.pseudo_time_limit
                             : 200.0 * n * n / std::max(slow, 1e-3);
    // RK4 is stable on the imaginary axis up to 2.8; hopping eigenvalue gaps reach 8.
    const double h = std::min(0.25, 2.0 / (config.gamma + config.delta + 8.0));
    StationarySolution sol;
    sol.method = StationaryMethod::pseudo_time;
    sol.moments = std::move(start);
    sol.residual = residual_of(sol.moments, config);
    double t = 0.0;
    const double chunk = std::max(1.0, 0.05 * n * n);
    while (sol.residual > options.tol && t < limit) {
        sol.moments = evolve_moments(sol.moments, chunk, config, h);
        t += chunk;
        sol.residual = residual_of(sol.moments, config);
    }
    sol.note = "pseudo-time " + std::to_string(t);
    return sol;
}

}  // namespace

MomentMatrix MomentMatrix::diagonal(const std::vector<double>& rho) {
    MomentMatrix m;
    const auto n = static_cast<Eigen::Index>(rho.size());
    m.c = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) m.c(i, i) = rho[static_cast<std::size_t>(i)];
    return m;
}

MomentMatrix MomentMatrix::from_profile(const Profile& rho0, int n_sites) {
    std::vector<double> rho(static_cast<std::size_t>(n_sites));
    for (int x = 1; x <= n_sites; ++x)
        rho[static_cast<std::size_t>(x - 1)] = rho0.at(static_cast<double>(x) / n_sites);
    return diagonal(rho);
}

double MomentMatrix::hermiticity_defect() const { return max_abs(c - c.adjoint()); }

void MomentMatrix::hermitize() {
    const Eigen::MatrixXcd h = 0.5 * (c + c.adjoint());
    c = h;
}

Eigen::MatrixXcd moment_rhs(const MomentMatrix& c, const ChainConfig& config,
                            const MomentOptions& options) {
    config.validate();
    require_size(c, config);
    const double scale = std::max(1.0, max_abs(c.c));
    if (c.hermiticity_defect() > 1e-10 * scale)
        throw std::invalid_argument("moment_rhs: input is not Hermitian (defect " +
                                    std::to_string(c.hermiticity_defect()) + ")");
    Eigen::MatrixXcd out;
    rhs_into(c.c, config, options, out);
    return out;
}

MomentMatrix evolve_moments(MomentMatrix c, double t, const ChainConfig& config, double dt_ode,
                            const MomentOptions& options) {
    config.validate();
    require_size(c, config);
    if (t < 0.0) throw std::invalid_argument("evolve_moments: t must be >= 0");
    if (!(dt_ode > 0.0)) throw std::invalid_argument("evolve_moments: dt_ode must be > 0");
    if (t == 0.0) return c;
    const auto steps = static_cast<long long>(std::ceil(t / dt_ode - 1e-12));
    const double h = t / static_cast<double>(steps);
    const double t0 = c.time;

    const auto spectral = [](const Eigen::MatrixXcd& m) {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
        return es.eigenvalues().cwiseAbs().maxCoeff();
    };
    // reference scale: the initial norm, or the reservoir level when starting empty
    double norm0 = spectral(c.c);
    if (config.is_open()) norm0 = std::max(norm0, 2.0 * std::max(config.mu_left, config.mu_right));
    const double limit = norm0 > 0.0 ? 1e6 * norm0 : std::numeric_limits<double>::infinity();

    const int n = config.n_sites;
    Eigen::MatrixXcd k1(n, n), k2(n, n), k3(n, n), k4(n, n), tmp(n, n);
    for (long long s = 0; s < steps; ++s) {
        rhs_into(c.c, config, options, k1);
        tmp = c.c + (0.5 * h) * k1;
        rhs_into(tmp, config, options, k2);
        tmp = c.c + (0.5 * h) * k2;
        rhs_into(tmp, config, options, k3);
        tmp = c.c + h * k3;
        rhs_into(tmp, config, options, k4);
        c.c += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        c.hermitize();
        // Frobenius norm bounds the spectral norm from above
        const double fro = c.c.norm();
        if (!std::isfinite(fro) || (fro > limit && spectral(c.c) > limit))
            throw std::runtime_error("evolve_moments: blow-up at step " + std::to_string(s));
    }
    c.time = t0 + t;
    return c;
}

const char* to_string(StationaryMethod m) {
    switch (m) {
        case StationaryMethod::automatic: return "automatic";
        case StationaryMethod::sparse_direct: return "sparse_direct";
        case StationaryMethod::lyapunov: return "lyapunov";
        case StationaryMethod::pseudo_time: return "pseudo_time";
    }
    return "?";
}

StationarySolution stationary_solve(const ChainConfig& config, const StationaryOptions& options) {
    config.validate();
    if (!config.is_open())
        throw std::invalid_argument("stationary_moments: the ring has no unique stationary point");
    StationaryMethod method = options.method;
    if (method == StationaryMethod::automatic)
        method = config.n_sites <= options.direct_limit ? StationaryMethod::sparse_direct
                                                        : StationaryMethod::lyapunov;
    StationarySolution sol;
    switch (method) {
        case StationaryMethod::sparse_direct: sol = solve_sparse(config, options); break;
        case StationaryMethod::lyapunov: sol = solve_lyapunov(config, options); break;
        default: {
            const double mean = config.mu_left + config.mu_right;
            sol = solve_pseudo_time(config, options,
                                    MomentMatrix::diagonal(std::vector<double>(
                                        static_cast<std::size_t>(config.n_sites), mean)));
        }
    }
    if (sol.residual > options.tol && method != StationaryMethod::pseudo_time) {
        const std::string first = to_string(method);
        sol = solve_pseudo_time(config, options, sol.moments);
        sol.note = first + " stalled; " + sol.note;
    }
    if (!(sol.residual <= options.tol))
        throw std::runtime_error("stationary_moments: residual " + std::to_string(sol.residual) +
                                 " above tolerance");
    return sol;
}

MomentMatrix stationary_moments(const ChainConfig& config, double tol) {
    StationaryOptions o;
    o.tol = tol;
    return stationary_solve(config, o).moments;
}

double StationaryProfiles::mean_current() const {
    if (current.empty()) return 0.0;
    double s = 0.0;
    for (double j : current) s += j;
    return s / static_cast<double>(current.size());
}

double StationaryProfiles::current_spread() const {
    if (current.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(current.begin(), current.end());
    return *hi - *lo;
}

StationaryProfiles stationary_observables(const MomentMatrix& m, const ChainConfig& config) {
    require_size(m, config);
    const int n = config.n_sites;
    const auto un = static_cast<std::size_t>(n);
    StationaryProfiles p;
    p.rho.resize(un);
    p.exchange2.resize(un);
    p.phi.resize(un);
    p.current.resize(static_cast<std::size_t>(config.n_bonds()));
    for (int x = 1; x <= n; ++x) {
        const auto i = static_cast<std::size_t>(x - 1);
        p.rho[i] = m(x, x).real();
        p.mass += p.rho[i];
        const int a = x - 1, b = x + 1;
        if (config.has_site(a) && config.has_site(b))
            p.exchange2[i] = 2.0 * m(config.wrap(a), config.wrap(b)).real();
        p.phi[i] = (p.rho[i] - 0.5 * p.exchange2[i]) / config.gamma;
    }
    for (int x = 1; x <= config.n_bonds(); ++x)
        p.current[static_cast<std::size_t>(x - 1)] = 2.0 * m(x, config.wrap(x + 1)).imag();
    return p;
}

}  // namespace dls
